#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "lifeformer/datagen.hpp"
#include "lifeformer/model.hpp"
#include "lifeformer/rng.hpp"
#include "lifeformer/tokenizer.hpp"

namespace lifeformer {

struct TrainConfig {
  int batch_size = 5;
  int grad_accum = 5;
  double learning_rate = 1e-4;
  double mask_prob = 0.15;
  int epochs = 50;
  std::uint64_t seed = 0;
  int checkpoint_every = 2;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;

  void validate() const;
};

/// Mean next-token cross entropy in nats. Aligned shift-by-one: the logits
/// row at position i is supervised with targets[i + 1]; the final row is
/// unsupervised. Every position is supervised, including the stochastic IC
/// region. Throws if sizes disagree or there is no supervised position.
template <typename T>
double cel_loss(std::span<const T> logits, std::span<const int> targets);

/// Key-visibility mask for forgetful causal masking: position j >= 1 is
/// hidden independently with probability mask_prob; position 0 never.
/// Hidden keys are excluded from every query's softmax except the query at
/// the same position (see model::forward).
std::vector<std::uint8_t> fcm_mask(int length, double mask_prob, Rng& rng);

/// Gradient accumulator. Per-sample gradients are summed unscaled in double
/// so that accumulation over micro-batches is arithmetically identical to
/// one concatenated batch.
struct GradAccum {
  ModelParams<double> sums;
  std::int64_t samples = 0;

  explicit GradAccum(const ModelConfig& cfg) : sums(cfg) {}
  void reset();

  template <typename T>
  void add(ModelParams<T>& sample_grads);
};

template <typename T>
struct BackwardScratch {
  std::vector<T> dlogits, d_res, dmid, dnormed;
  std::vector<T> dq, dk, dv, dctx, dprobs, dff;
  void resize(const ModelConfig& cfg, int len);
};

/// Forward + reverse pass for one sequence. Writes the gradients of the
/// sample's mean loss into sample_grads, adds them (unscaled) to accum and
/// returns the sample loss. Throws on a non-finite loss.
template <typename T>
double backward_sample(const Model<T>& model, std::span<const int> tokens,
                       const std::uint8_t* fcm_hidden, ForwardCache<T>& cache,
                       BackwardScratch<T>& scratch,
                       ModelParams<T>& sample_grads, GradAccum& accum);

/// Exact gradients of the batch-mean loss. masks may be empty (no FCM) or
/// hold one mask per sequence.
template <typename T>
std::pair<ModelParams<T>, double> compute_batch_gradients(
    const Model<T>& model, const std::vector<TokenSequence>& batch,
    const std::vector<std::vector<std::uint8_t>>& masks);

/// Forward-only mean loss of one sequence (no FCM); used for validation.
template <typename T>
double sequence_loss(const Model<T>& model, std::span<const int> tokens);

struct AdamHyper {
  double lr = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// One Adam update over a flat array with bias correction; t is the step
/// count after this update (t >= 1). Gradients arrive as double sums plus
/// the 1/samples scale.
template <typename T>
void adam_update(std::span<T> theta, std::span<const double> grad_sums,
                 double inv_count, std::span<T> m, std::span<T> v,
                 std::int64_t t, const AdamHyper& hyper);

template <typename T>
struct AdamState {
  ModelParams<T> m, v;
  std::int64_t t = 0;
  explicit AdamState(const ModelConfig& cfg) : m(cfg), v(cfg) {}
};

template <typename T>
void adam_step(ModelParams<T>& params, AdamState<T>& state,
               const GradAccum& grads, const AdamHyper& hyper);

struct StepLoss {
  std::int64_t step = 0;
  int epoch = 0;
  double loss = 0.0;
};

struct EpochVal {
  int epoch = 0;
  double val_loss = 0.0;
};

struct TrainCurves {
  std::vector<StepLoss> train;
  std::vector<EpochVal> val;
};

/// Epoch-stepped training driver. One run_epoch() shuffles the data with a
/// seeded per-epoch stream, iterates micro-batches of batch_size sequences,
/// performs an Adam step every grad_accum micro-batches and records the mean
/// loss of each accumulation window.
class Trainer {
 public:
  Trainer(const ModelConfig& model_cfg, const TrainConfig& train_cfg,
          std::vector<TokenSequence> train_seqs,
          std::vector<TokenSequence> val_seqs);

  void run_epoch();

  /// Mean loss over the validation set, computed without FCM.
  double validation_loss();

  Model<float>& model() { return model_; }
  const Model<float>& model() const { return model_; }
  const TrainConfig& train_config() const { return tcfg_; }
  int epochs_completed() const { return epochs_done_; }
  std::int64_t steps_completed() const { return step_; }
  const TrainCurves& curves() const { return curves_; }

 private:
  ModelConfig mcfg_;
  TrainConfig tcfg_;
  Model<float> model_;
  AdamState<float> adam_;
  GradAccum accum_;
  std::vector<TokenSequence> train_, val_;
  Rng base_rng_;
  int epochs_done_ = 0;
  std::int64_t step_ = 0;
  TrainCurves curves_;
  ForwardCache<float> cache_;
  BackwardScratch<float> scratch_;
  ModelParams<float> sample_grads_;
};

struct TrainRunOptions {
  /// Output directory for checkpoints and loss CSVs; empty disables files.
  std::string out_dir;
  /// Called after every epoch; returning false stops training early.
  std::function<bool(int epoch, Trainer& trainer)> on_epoch_end;
};

struct TrainRunResult {
  TrainCurves curves;
  std::vector<std::string> checkpoints;
  std::string last_checkpoint;
  int epochs_run = 0;
  bool stopped_early = false;
};

/// Full training run: epoch loop, per-epoch validation loss, a checkpoint
/// every checkpoint_every epochs plus a final one, and loss curves as CSV
/// (step,epoch,train_loss) / (epoch,val_loss).
TrainRunResult train(const TrainConfig& train_cfg, const ModelConfig& model_cfg,
                     const std::vector<GameRecord>& train_data,
                     const std::vector<GameRecord>& val_data,
                     const TrainRunOptions& opts);

/// Encodes record prompts; verifies all sequences share one length that
/// fits the model.
std::vector<TokenSequence> tokenize_records(const std::vector<GameRecord>& records);

}  // namespace lifeformer
