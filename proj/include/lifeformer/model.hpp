#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "lifeformer/rng.hpp"
#include "lifeformer/tokenizer.hpp"

namespace lifeformer {

/// RMS normalization epsilon used throughout the model.
inline constexpr double kNormEps = 1e-5;

struct ModelConfig {
  int vocab = kNumTokens;
  int max_seq_len = 2071;
  int dim = 256;
  int depth = 12;
  int heads = 8;
  int head_dim = 64;
  int ffn_mult = 4;
  double rope_base = 10000.0;

  int inner() const { return heads * head_dim; }
  int ffn_dim() const { return ffn_mult * dim; }

  /// Throws std::invalid_argument on inconsistent settings (odd head_dim,
  /// non-positive sizes).
  void validate() const;
};

template <typename T>
struct MutArray {
  std::string name;
  std::vector<T>* data;
  int rows;
  int cols;
};

/// All learnable arrays. Projection weights are stored row-major as
/// [in][out]; norm arrays hold per-channel gains only.
template <typename T>
struct ModelParams {
  struct Layer {
    std::vector<T> attn_norm_gain;  // [dim]
    std::vector<T> wq, wk, wv;      // [dim][inner]
    std::vector<T> wo;              // [inner][dim]
    std::vector<T> ffn_norm_gain;   // [dim]
    std::vector<T> w_ff_in;         // [dim][ffn_dim]
    std::vector<T> w_ff_out;        // [ffn_dim][dim]
  };

  std::vector<T> tok_emb;  // [vocab][dim]
  std::vector<Layer> layers;
  std::vector<T> final_norm_gain;  // [dim]
  std::vector<T> w_head;           // [dim][vocab]

  ModelParams() = default;
  explicit ModelParams(const ModelConfig& cfg) { allocate(cfg); }

  void allocate(const ModelConfig& cfg);
  void zero();

  /// Gaussian(0, 0.02) for embeddings and projections, ones for norm gains.
  /// Consumes the rng in array-registry order.
  void init_weights(Rng& rng);

  /// Stable registry of every array: name, storage, logical shape. The
  /// checkpoint layout, optimizer state and gradient containers all share
  /// this order.
  std::vector<MutArray<T>> arrays();

  std::size_t parameter_count() const;

  bool all_finite() const;
};

/// cos/sin lookup for the rotary position encoding: pair i of a head vector
/// is rotated by pos * base^(-2i / head_dim).
template <typename T>
struct RopeTable {
  int head_dim = 0;
  int max_positions = 0;
  std::vector<T> cos_table;  // [max_positions][head_dim/2]
  std::vector<T> sin_table;

  void build(const ModelConfig& cfg);
};

/// Rotates every head's coordinate pairs in place. direction +1 applies the
/// position rotation, -1 its inverse (used by the backward pass).
template <typename T>
void rope_apply(const RopeTable<T>& table, T* vec, int heads, int pos,
                int direction);

template <typename T>
struct Model {
  ModelConfig cfg;
  ModelParams<T> params;
  RopeTable<T> rope;

  explicit Model(const ModelConfig& config) : cfg(config), params(config) {
    cfg.validate();
    rope.build(cfg);
  }
};

/// Per-sequence activations kept for the backward pass. `probs` holds the
/// post-mask attention weights, laid out [head][query][key] with zero in
/// every masked slot.
template <typename T>
struct ForwardCache {
  int len = 0;
  struct LayerCache {
    std::vector<T> x_in;     // [L][dim] residual stream entering the block
    std::vector<T> normed;   // [L][dim]
    std::vector<T> rms_inv;  // [L]
    std::vector<T> q, k, v;  // [L][inner], q/k post-rotation
    std::vector<T> probs;    // [heads][L][L]
    std::vector<T> ctx;      // [L][inner]
    std::vector<T> x_mid;    // [L][dim] residual stream entering the FFN
    std::vector<T> normed2;  // [L][dim]
    std::vector<T> rms_inv2;  // [L]
    std::vector<T> ff_pre;    // [L][ffn_dim]
    std::vector<T> ff_act;    // [L][ffn_dim]
  };
  std::vector<LayerCache> layers;
  std::vector<T> x_final;        // [L][dim]
  std::vector<T> final_normed;   // [L][dim]
  std::vector<T> final_rms_inv;  // [L]
  std::vector<T> logits;         // [L][vocab]

  void resize(const ModelConfig& cfg, int length);
};

/// Full-sequence forward pass. `fcm_hidden`, when non-null, marks key
/// positions hidden from every query except the position itself; it is a
/// training-time mask and composes with the causal mask.
template <typename T>
void forward(const Model<T>& model, std::span<const int> tokens,
             const std::uint8_t* fcm_hidden, ForwardCache<T>& cache);

/// One pre-norm attention block: x + Wo(MHA(RMSNorm(x))). Standalone entry
/// point used by tests; `probs_out`, when given, receives the attention
/// weights in ForwardCache layout.
template <typename T>
std::vector<T> attention_block(const Model<T>& model, int layer,
                               std::span<const T> hidden,
                               const std::uint8_t* fcm_hidden,
                               std::vector<T>* probs_out = nullptr);

/// Incremental decoding state. Tokens are appended one at a time; cached
/// keys/values make each step O(position) instead of re-running the prefix.
/// Appending through a fresh session replays the exact same arithmetic, so
/// cached and recomputed logits are bit-identical.
template <typename T>
class InferenceSession {
 public:
  explicit InferenceSession(const Model<T>& model);

  void reset();

  /// Feeds one token and returns the logits row predicting its successor.
  const std::vector<T>& append(int token);

  int position() const { return pos_; }

 private:
  const Model<T>* model_;
  int pos_ = 0;
  struct LayerState {
    std::vector<T> k_cache;  // [max_seq_len][inner]
    std::vector<T> v_cache;
  };
  std::vector<LayerState> layers_;
  std::vector<T> x_, normed_, q_, ctx_, ff_, logits_;
};

/// Greedy or temperature sampling over one logits row. Temperature 0 is
/// argmax with ties broken toward the lowest token id; temperature > 0
/// samples from softmax(logits / T). Negative temperature throws.
template <typename T>
int sample_from_logits(std::span<const T> logits, double temperature,
                       Rng& rng);

/// Emits exactly n_tokens continuation tokens (no stop-token handling).
/// Requires a nonempty prompt and prompt size + n_tokens <= max_seq_len.
template <typename T>
TokenSequence generate(const Model<T>& model, std::span<const int> prompt,
                       int n_tokens, double temperature, Rng& rng);

}  // namespace lifeformer
