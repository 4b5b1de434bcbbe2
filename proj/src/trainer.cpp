#include "lifeformer/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "lifeformer/checkpoint.hpp"
#include "lifeformer/linalg.hpp"

namespace lifeformer {

namespace {

constexpr std::uint64_t kInitStream = 0x494e4954;
constexpr std::uint64_t kShuffleStream = 0x53484600'00000000ull;
constexpr std::uint64_t kFcmStream = 0x46434d00'00000000ull;

template <typename T>
T gelu_grad(T x) {
  const double xd = static_cast<double>(x);
  const double cdf = 0.5 * (1.0 + std::erf(xd * 0.70710678118654752440));
  const double pdf = std::exp(-0.5 * xd * xd) * 0.39894228040143267794;
  return static_cast<T>(cdf + xd * pdf);
}

// dx and dgain for one RMS-normed row; dx may alias dy.
template <typename T>
void rmsnorm_backward_row(const T* x, const T* dy, const T* gain, T inv,
                          int dim, T* dx, T* dgain) {
  double c = 0.0;
  for (int i = 0; i < dim; ++i) {
    c += static_cast<double>(dy[i]) * static_cast<double>(gain[i]) *
         static_cast<double>(x[i]);
  }
  const T k = static_cast<T>(c * static_cast<double>(inv) *
                             static_cast<double>(inv) *
                             static_cast<double>(inv) / dim);
  for (int i = 0; i < dim; ++i) {
    dgain[i] += dy[i] * x[i] * inv;
    dx[i] = gain[i] * dy[i] * inv - x[i] * k;
  }
}

}  // namespace

void TrainConfig::validate() const {
  if (batch_size < 1 || grad_accum < 1 || epochs < 0 || checkpoint_every < 1) {
    throw std::invalid_argument("train config has non-positive sizes");
  }
  if (!(learning_rate > 0.0)) {
    throw std::invalid_argument("learning_rate must be positive");
  }
  if (!(mask_prob >= 0.0 && mask_prob < 1.0)) {
    throw std::invalid_argument("mask_prob must lie in [0, 1)");
  }
}

template <typename T>
double cel_loss(std::span<const T> logits, std::span<const int> targets) {
  const int len = static_cast<int>(targets.size());
  if (len < 2) {
    throw std::invalid_argument("need at least two tokens for a supervised position");
  }
  const std::size_t vocab = logits.size() / static_cast<std::size_t>(len);
  if (vocab == 0 || logits.size() != static_cast<std::size_t>(len) * vocab) {
    throw std::invalid_argument("logits/targets length mismatch");
  }
  double total = 0.0;
  for (int i = 0; i + 1 < len; ++i) {
    const T* row = logits.data() + static_cast<std::size_t>(i) * vocab;
    const int target = targets[static_cast<std::size_t>(i) + 1];
    if (target < 0 || target >= static_cast<int>(vocab)) {
      throw std::invalid_argument("target token out of range");
    }
    T max_logit = row[0];
    for (std::size_t v = 1; v < vocab; ++v) {
      max_logit = std::max(max_logit, row[v]);
    }
    double sum = 0.0;
    for (std::size_t v = 0; v < vocab; ++v) {
      sum += std::exp(static_cast<double>(row[v] - max_logit));
    }
    total += std::log(sum) + static_cast<double>(max_logit) -
             static_cast<double>(row[static_cast<std::size_t>(target)]);
  }
  return total / (len - 1);
}

std::vector<std::uint8_t> fcm_mask(int length, double mask_prob, Rng& rng) {
  if (length < 1) {
    throw std::invalid_argument("mask length must be >= 1");
  }
  std::vector<std::uint8_t> hidden(static_cast<std::size_t>(length), 0);
  for (int j = 1; j < length; ++j) {
    hidden[static_cast<std::size_t>(j)] = rng.uniform01() < mask_prob ? 1 : 0;
  }
  return hidden;
}

void GradAccum::reset() {
  sums.zero();
  samples = 0;
}

template <typename T>
void GradAccum::add(ModelParams<T>& sample_grads) {
  auto dst = sums.arrays();
  auto src = sample_grads.arrays();
  for (std::size_t a = 0; a < dst.size(); ++a) {
    auto& d = *dst[a].data;
    const auto& s = *src[a].data;
    for (std::size_t i = 0; i < d.size(); ++i) {
      d[i] += static_cast<double>(s[i]);
    }
  }
  ++samples;
}

template <typename T>
void BackwardScratch<T>::resize(const ModelConfig& cfg, int len) {
  const auto l = static_cast<std::size_t>(len);
  dlogits.resize(l * static_cast<std::size_t>(cfg.vocab));
  d_res.resize(l * static_cast<std::size_t>(cfg.dim));
  dmid.resize(l * static_cast<std::size_t>(cfg.dim));
  dnormed.resize(l * static_cast<std::size_t>(cfg.dim));
  dq.resize(l * static_cast<std::size_t>(cfg.inner()));
  dk.resize(l * static_cast<std::size_t>(cfg.inner()));
  dv.resize(l * static_cast<std::size_t>(cfg.inner()));
  dctx.resize(l * static_cast<std::size_t>(cfg.inner()));
  dprobs.resize(l * l);
  dff.resize(l * static_cast<std::size_t>(cfg.ffn_dim()));
}

template <typename T>
double backward_sample(const Model<T>& model, std::span<const int> tokens,
                       const std::uint8_t* fcm_hidden, ForwardCache<T>& cache,
                       BackwardScratch<T>& scratch,
                       ModelParams<T>& sample_grads, GradAccum& accum) {
  const ModelConfig& cfg = model.cfg;
  const int len = static_cast<int>(tokens.size());
  const int dim = cfg.dim;
  const int inner = cfg.inner();
  const int hd = cfg.head_dim;
  const int ffn = cfg.ffn_dim();
  const int vocab = cfg.vocab;

  forward(model, tokens, fcm_hidden, cache);
  scratch.resize(cfg, len);
  sample_grads.zero();
  auto grads = sample_grads.arrays();
  // Registry order: tok_emb, then per layer {attn_norm, wq, wk, wv, wo,
  // ffn_norm, w_ff_in, w_ff_out}, then final_norm, head.
  auto* g_tok_emb = grads[0].data;
  auto* g_final_norm = grads[grads.size() - 2].data;
  auto* g_head = grads[grads.size() - 1].data;

  // Loss and dlogits (mean over the len-1 supervised positions).
  const int supervised = len - 1;
  if (supervised < 1) {
    throw std::invalid_argument("sequence too short to supervise");
  }
  const T weight = static_cast<T>(1.0 / supervised);
  double loss_total = 0.0;
  for (int i = 0; i < len; ++i) {
    const T* row = cache.logits.data() + static_cast<std::size_t>(i) * vocab;
    T* drow = scratch.dlogits.data() + static_cast<std::size_t>(i) * vocab;
    if (i >= supervised) {
      std::fill(drow, drow + vocab, T(0));
      continue;
    }
    const int target = tokens[static_cast<std::size_t>(i) + 1];
    T max_logit = row[0];
    for (int v = 1; v < vocab; ++v) {
      max_logit = std::max(max_logit, row[v]);
    }
    double sum = 0.0;
    for (int v = 0; v < vocab; ++v) {
      const T e = std::exp(row[v] - max_logit);
      drow[v] = e;
      sum += static_cast<double>(e);
    }
    const T inv_sum = static_cast<T>(1.0 / sum);
    for (int v = 0; v < vocab; ++v) {
      drow[v] *= inv_sum;
    }
    loss_total += std::log(sum) + static_cast<double>(max_logit) -
                  static_cast<double>(row[static_cast<std::size_t>(target)]);
    drow[target] -= T(1);
    for (int v = 0; v < vocab; ++v) {
      drow[v] *= weight;
    }
  }
  const double loss = loss_total / supervised;
  if (!std::isfinite(loss)) {
    throw std::runtime_error("non-finite training loss (diverged parameters?)");
  }

  // Output head.
  la::gemm(true, false, dim, vocab, len, T(1), cache.final_normed.data(), dim,
           scratch.dlogits.data(), vocab, T(0), g_head->data(), vocab);
  la::gemm(false, true, len, dim, vocab, T(1), scratch.dlogits.data(), vocab,
           model.params.w_head.data(), vocab, T(0), scratch.d_res.data(), dim);

  // Final norm.
  for (int pos = 0; pos < len; ++pos) {
    const std::size_t off = static_cast<std::size_t>(pos) * dim;
    rmsnorm_backward_row(cache.x_final.data() + off, scratch.d_res.data() + off,
                         model.params.final_norm_gain.data(),
                         cache.final_rms_inv[static_cast<std::size_t>(pos)], dim,
                         scratch.d_res.data() + off, g_final_norm->data());
  }

  const T scale = static_cast<T>(1.0 / std::sqrt(static_cast<double>(hd)));
  for (int li = cfg.depth - 1; li >= 0; --li) {
    const auto& lp = model.params.layers[static_cast<std::size_t>(li)];
    auto& lc = cache.layers[static_cast<std::size_t>(li)];
    const std::size_t base = 1 + static_cast<std::size_t>(li) * 8;
    auto* g_attn_norm = grads[base + 0].data;
    auto* g_wq = grads[base + 1].data;
    auto* g_wk = grads[base + 2].data;
    auto* g_wv = grads[base + 3].data;
    auto* g_wo = grads[base + 4].data;
    auto* g_ffn_norm = grads[base + 5].data;
    auto* g_ff_in = grads[base + 6].data;
    auto* g_ff_out = grads[base + 7].data;

    // FFN: x_out = x_mid + gelu(normed2 * w_ff_in) * w_ff_out.
    la::gemm(false, true, len, ffn, dim, T(1), scratch.d_res.data(), dim,
             lp.w_ff_out.data(), dim, T(0), scratch.dff.data(), ffn);
    la::gemm(true, false, ffn, dim, len, T(1), lc.ff_act.data(), ffn,
             scratch.d_res.data(), dim, T(0), g_ff_out->data(), dim);
    for (std::size_t i = 0; i < scratch.dff.size(); ++i) {
      scratch.dff[i] *= gelu_grad(lc.ff_pre[i]);
    }
    la::gemm(false, true, len, dim, ffn, T(1), scratch.dff.data(), ffn,
             lp.w_ff_in.data(), ffn, T(0), scratch.dnormed.data(), dim);
    la::gemm(true, false, dim, ffn, len, T(1), lc.normed2.data(), dim,
             scratch.dff.data(), ffn, T(0), g_ff_in->data(), ffn);
    for (int pos = 0; pos < len; ++pos) {
      const std::size_t off = static_cast<std::size_t>(pos) * dim;
      rmsnorm_backward_row(lc.x_mid.data() + off, scratch.dnormed.data() + off,
                           lp.ffn_norm_gain.data(),
                           lc.rms_inv2[static_cast<std::size_t>(pos)], dim,
                           scratch.dmid.data() + off, g_ffn_norm->data());
    }
    for (std::size_t i = 0; i < scratch.dmid.size(); ++i) {
      scratch.dmid[i] += scratch.d_res[i];  // residual branch
    }

    // Attention: x_mid = x_in + ctx * wo.
    la::gemm(false, true, len, inner, dim, T(1), scratch.dmid.data(), dim,
             lp.wo.data(), dim, T(0), scratch.dctx.data(), inner);
    la::gemm(true, false, inner, dim, len, T(1), lc.ctx.data(), inner,
             scratch.dmid.data(), dim, T(0), g_wo->data(), dim);
    for (int h = 0; h < cfg.heads; ++h) {
      const std::size_t ho = static_cast<std::size_t>(h) * hd;
      const T* probs_h = lc.probs.data() + static_cast<std::size_t>(h) * len * len;
      la::gemm(false, true, len, len, hd, T(1), scratch.dctx.data() + ho, inner,
               lc.v.data() + ho, inner, T(0), scratch.dprobs.data(), len);
      la::gemm(true, false, len, hd, len, T(1), probs_h, len,
               scratch.dctx.data() + ho, inner, T(0), scratch.dv.data() + ho,
               inner);
      // Softmax Jacobian, rows restricted to the visible lower triangle.
      for (int i = 0; i < len; ++i) {
        const T* prow = probs_h + static_cast<std::size_t>(i) * len;
        T* drow = scratch.dprobs.data() + static_cast<std::size_t>(i) * len;
        double dot = 0.0;
        for (int j = 0; j <= i; ++j) {
          dot += static_cast<double>(prow[j]) * static_cast<double>(drow[j]);
        }
        const T dot_t = static_cast<T>(dot);
        for (int j = 0; j <= i; ++j) {
          drow[j] = prow[j] * (drow[j] - dot_t);
        }
        std::fill(drow + i + 1, drow + len, T(0));
      }
      la::gemm(false, false, len, hd, len, scale, scratch.dprobs.data(), len,
               lc.k.data() + ho, inner, T(0), scratch.dq.data() + ho, inner);
      la::gemm(true, false, len, hd, len, scale, scratch.dprobs.data(), len,
               lc.q.data() + ho, inner, T(0), scratch.dk.data() + ho, inner);
    }
    for (int pos = 0; pos < len; ++pos) {
      rope_apply(model.rope, scratch.dq.data() + static_cast<std::size_t>(pos) * inner,
                 cfg.heads, pos, -1);
      rope_apply(model.rope, scratch.dk.data() + static_cast<std::size_t>(pos) * inner,
                 cfg.heads, pos, -1);
    }
    la::gemm(false, true, len, dim, inner, T(1), scratch.dq.data(), inner,
             lp.wq.data(), inner, T(0), scratch.dnormed.data(), dim);
    la::gemm(false, true, len, dim, inner, T(1), scratch.dk.data(), inner,
             lp.wk.data(), inner, T(1), scratch.dnormed.data(), dim);
    la::gemm(false, true, len, dim, inner, T(1), scratch.dv.data(), inner,
             lp.wv.data(), inner, T(1), scratch.dnormed.data(), dim);
    la::gemm(true, false, dim, inner, len, T(1), lc.normed.data(), dim,
             scratch.dq.data(), inner, T(0), g_wq->data(), inner);
    la::gemm(true, false, dim, inner, len, T(1), lc.normed.data(), dim,
             scratch.dk.data(), inner, T(0), g_wk->data(), inner);
    la::gemm(true, false, dim, inner, len, T(1), lc.normed.data(), dim,
             scratch.dv.data(), inner, T(0), g_wv->data(), inner);
    for (int pos = 0; pos < len; ++pos) {
      const std::size_t off = static_cast<std::size_t>(pos) * dim;
      rmsnorm_backward_row(lc.x_in.data() + off, scratch.dnormed.data() + off,
                           lp.attn_norm_gain.data(),
                           lc.rms_inv[static_cast<std::size_t>(pos)], dim,
                           scratch.d_res.data() + off, g_attn_norm->data());
    }
    for (std::size_t i = 0; i < scratch.d_res.size(); ++i) {
      scratch.d_res[i] += scratch.dmid[i];  // residual branch
    }
  }

  // Token embeddings.
  for (int pos = 0; pos < len; ++pos) {
    const int token = tokens[static_cast<std::size_t>(pos)];
    T* dst = g_tok_emb->data() + static_cast<std::size_t>(token) * dim;
    const T* src = scratch.d_res.data() + static_cast<std::size_t>(pos) * dim;
    for (int i = 0; i < dim; ++i) {
      dst[i] += src[i];
    }
  }

  accum.add(sample_grads);
  return loss;
}

template <typename T>
std::pair<ModelParams<T>, double> compute_batch_gradients(
    const Model<T>& model, const std::vector<TokenSequence>& batch,
    const std::vector<std::vector<std::uint8_t>>& masks) {
  if (batch.empty()) {
    throw std::invalid_argument("empty batch");
  }
  if (!masks.empty() && masks.size() != batch.size()) {
    throw std::invalid_argument("mask count does not match batch size");
  }
  GradAccum accum(model.cfg);
  accum.reset();
  ForwardCache<T> cache;
  BackwardScratch<T> scratch;
  ModelParams<T> sample_grads(model.cfg);
  double loss_sum = 0.0;
  for (std::size_t s = 0; s < batch.size(); ++s) {
    const std::uint8_t* mask = masks.empty() ? nullptr : masks[s].data();
    loss_sum += backward_sample(model, batch[s], mask, cache, scratch,
                                sample_grads, accum);
  }
  ModelParams<T> mean(model.cfg);
  auto dst = mean.arrays();
  auto src = accum.sums.arrays();
  const double inv = 1.0 / static_cast<double>(accum.samples);
  for (std::size_t a = 0; a < dst.size(); ++a) {
    auto& d = *dst[a].data;
    const auto& s = *src[a].data;
    for (std::size_t i = 0; i < d.size(); ++i) {
      d[i] = static_cast<T>(s[i] * inv);
    }
  }
  return {std::move(mean), loss_sum / static_cast<double>(batch.size())};
}

template <typename T>
double sequence_loss(const Model<T>& model, std::span<const int> tokens) {
  ForwardCache<T> cache;
  forward(model, tokens, nullptr, cache);
  return cel_loss<T>(cache.logits, tokens);
}

template <typename T>
void adam_update(std::span<T> theta, std::span<const double> grad_sums,
                 double inv_count, std::span<T> m, std::span<T> v,
                 std::int64_t t, const AdamHyper& hyper) {
  const T b1 = static_cast<T>(hyper.beta1);
  const T b2 = static_cast<T>(hyper.beta2);
  const T one_minus_b1 = static_cast<T>(1.0 - hyper.beta1);
  const T one_minus_b2 = static_cast<T>(1.0 - hyper.beta2);
  const T c1 = static_cast<T>(1.0 / (1.0 - std::pow(hyper.beta1, static_cast<double>(t))));
  const T c2 = static_cast<T>(1.0 / (1.0 - std::pow(hyper.beta2, static_cast<double>(t))));
  const T lr = static_cast<T>(hyper.lr);
  const T eps = static_cast<T>(hyper.eps);
  for (std::size_t i = 0; i < theta.size(); ++i) {
    const T g = static_cast<T>(grad_sums[i] * inv_count);
    m[i] = b1 * m[i] + one_minus_b1 * g;
    v[i] = b2 * v[i] + one_minus_b2 * g * g;
    const T m_hat = m[i] * c1;
    const T v_hat = v[i] * c2;
    theta[i] -= lr * m_hat / (std::sqrt(v_hat) + eps);
  }
}

template <typename T>
void adam_step(ModelParams<T>& params, AdamState<T>& state,
               const GradAccum& grads, const AdamHyper& hyper) {
  if (grads.samples < 1) {
    throw std::invalid_argument("adam step without accumulated samples");
  }
  ++state.t;
  auto theta = params.arrays();
  auto m = state.m.arrays();
  auto v = state.v.arrays();
  auto g = const_cast<ModelParams<double>&>(grads.sums).arrays();
  const double inv_count = 1.0 / static_cast<double>(grads.samples);
  for (std::size_t a = 0; a < theta.size(); ++a) {
    adam_update(std::span<T>(*theta[a].data),
                std::span<const double>(*g[a].data), inv_count,
                std::span<T>(*m[a].data), std::span<T>(*v[a].data), state.t,
                hyper);
  }
}

Trainer::Trainer(const ModelConfig& model_cfg, const TrainConfig& train_cfg,
                 std::vector<TokenSequence> train_seqs,
                 std::vector<TokenSequence> val_seqs)
    : mcfg_(model_cfg),
      tcfg_(train_cfg),
      model_(model_cfg),
      adam_(model_cfg),
      accum_(model_cfg),
      train_(std::move(train_seqs)),
      val_(std::move(val_seqs)),
      base_rng_(train_cfg.seed),
      sample_grads_(model_cfg) {
  mcfg_.validate();
  tcfg_.validate();
  if (train_.empty()) {
    throw std::invalid_argument("training data is empty");
  }
  const std::size_t len = train_[0].size();
  for (const auto& seq : train_) {
    if (seq.size() != len) {
      throw std::invalid_argument("training sequences must share one length");
    }
  }
  for (const auto& seq : val_) {
    if (seq.size() != len) {
      throw std::invalid_argument("validation sequences must match training length");
    }
  }
  if (static_cast<int>(len) > mcfg_.max_seq_len || len < 2) {
    throw std::invalid_argument("sequence length incompatible with model config");
  }
  Rng init_rng = base_rng_.derive(kInitStream);
  model_.params.init_weights(init_rng);
}

void Trainer::run_epoch() {
  const int epoch = epochs_done_ + 1;
  Rng shuffle_rng = base_rng_.derive(kShuffleStream + static_cast<std::uint64_t>(epoch));
  Rng mask_rng = base_rng_.derive(kFcmStream + static_cast<std::uint64_t>(epoch));
  std::vector<std::size_t> order(train_.size());
  std::iota(order.begin(), order.end(), 0);
  shuffle_rng.shuffle(order);

  const AdamHyper hyper{tcfg_.learning_rate, tcfg_.adam_beta1, tcfg_.adam_beta2,
                        tcfg_.adam_eps};
  const int seq_len = static_cast<int>(train_[0].size());
  std::size_t idx = 0;
  std::vector<std::uint8_t> mask;
  while (idx < order.size()) {
    accum_.reset();
    double window_loss = 0.0;
    int window_samples = 0;
    for (int micro = 0; micro < tcfg_.grad_accum && idx < order.size(); ++micro) {
      for (int b = 0; b < tcfg_.batch_size && idx < order.size(); ++b, ++idx) {
        const TokenSequence& tokens = train_[order[idx]];
        const std::uint8_t* mask_ptr = nullptr;
        if (tcfg_.mask_prob > 0.0) {
          mask = fcm_mask(seq_len, tcfg_.mask_prob, mask_rng);
          mask_ptr = mask.data();
        }
        window_loss += backward_sample(model_, tokens, mask_ptr, cache_,
                                       scratch_, sample_grads_, accum_);
        ++window_samples;
      }
    }
    adam_step(model_.params, adam_, accum_, hyper);
    ++step_;
    curves_.train.push_back({step_, epoch, window_loss / window_samples});
  }
  ++epochs_done_;
}

double Trainer::validation_loss() {
  if (val_.empty()) {
    throw std::logic_error("no validation data");
  }
  double sum = 0.0;
  for (const auto& tokens : val_) {
    forward(model_, tokens, nullptr, cache_);
    sum += cel_loss<float>(cache_.logits, tokens);
  }
  return sum / static_cast<double>(val_.size());
}

std::vector<TokenSequence> tokenize_records(const std::vector<GameRecord>& records) {
  std::vector<TokenSequence> out;
  out.reserve(records.size());
  for (const auto& rec : records) {
    out.push_back(encode(rec.prompt_text));
  }
  return out;
}

namespace {

void write_curves(const TrainCurves& curves, const std::string& out_dir) {
  {
    std::ofstream out(out_dir + "/loss_train.csv", std::ios::binary);
    out << "step,epoch,train_loss\n";
    for (const auto& row : curves.train) {
      out << row.step << ',' << row.epoch << ',' << std::setprecision(17)
          << row.loss << '\n';
    }
  }
  {
    std::ofstream out(out_dir + "/loss_val.csv", std::ios::binary);
    out << "epoch,val_loss\n";
    for (const auto& row : curves.val) {
      out << row.epoch << ',' << std::setprecision(17) << row.val_loss << '\n';
    }
  }
}

std::string checkpoint_name(int epoch) {
  std::ostringstream name;
  name << "checkpoint_epoch_" << std::setfill('0') << std::setw(4) << epoch
       << ".bin";
  return name.str();
}

}  // namespace

TrainRunResult train(const TrainConfig& train_cfg, const ModelConfig& model_cfg,
                     const std::vector<GameRecord>& train_data,
                     const std::vector<GameRecord>& val_data,
                     const TrainRunOptions& opts) {
  Trainer trainer(model_cfg, train_cfg, tokenize_records(train_data),
                  tokenize_records(val_data));
  const bool to_files = !opts.out_dir.empty();
  if (to_files) {
    std::filesystem::create_directories(opts.out_dir);
  }
  TrainRunResult result;
  std::vector<EpochVal> val_rows;
  for (int epoch = 1; epoch <= train_cfg.epochs; ++epoch) {
    trainer.run_epoch();
    double val_loss = 0.0;
    if (!val_data.empty()) {
      val_loss = trainer.validation_loss();
      val_rows.push_back({epoch, val_loss});
    }
    const double train_loss = trainer.curves().train.empty()
                                  ? 0.0
                                  : trainer.curves().train.back().loss;
    result.curves = trainer.curves();
    result.curves.val = val_rows;
    CheckpointMeta meta;
    meta.epoch = epoch;
    meta.step = trainer.steps_completed();
    meta.seed = train_cfg.seed;
    meta.train_loss = train_loss;
    meta.val_loss = val_loss;
    if (to_files) {
      write_curves(result.curves, opts.out_dir);
      if (epoch % train_cfg.checkpoint_every == 0) {
        const std::string path = opts.out_dir + "/" + checkpoint_name(epoch);
        save_checkpoint(path, trainer.model(), meta);
        result.checkpoints.push_back(path);
      }
    }
    result.epochs_run = epoch;
    if (opts.on_epoch_end && !opts.on_epoch_end(epoch, trainer)) {
      result.stopped_early = true;
      break;
    }
  }
  if (to_files) {
    CheckpointMeta meta;
    meta.epoch = result.epochs_run;
    meta.step = trainer.steps_completed();
    meta.seed = train_cfg.seed;
    meta.train_loss = trainer.curves().train.empty()
                          ? 0.0
                          : trainer.curves().train.back().loss;
    meta.note = "final";
    const std::string last = opts.out_dir + "/checkpoint_last.bin";
    save_checkpoint(last, trainer.model(), meta);
    result.last_checkpoint = last;
    write_curves(result.curves, opts.out_dir);
  }
  return result;
}

template double cel_loss<float>(std::span<const float>, std::span<const int>);
template double cel_loss<double>(std::span<const double>, std::span<const int>);
template void GradAccum::add(ModelParams<float>&);
template void GradAccum::add(ModelParams<double>&);
template struct BackwardScratch<float>;
template struct BackwardScratch<double>;
template double backward_sample(const Model<float>&, std::span<const int>,
                                const std::uint8_t*, ForwardCache<float>&,
                                BackwardScratch<float>&, ModelParams<float>&,
                                GradAccum&);
template double backward_sample(const Model<double>&, std::span<const int>,
                                const std::uint8_t*, ForwardCache<double>&,
                                BackwardScratch<double>&, ModelParams<double>&,
                                GradAccum&);
template std::pair<ModelParams<float>, double> compute_batch_gradients(
    const Model<float>&, const std::vector<TokenSequence>&,
    const std::vector<std::vector<std::uint8_t>>&);
template std::pair<ModelParams<double>, double> compute_batch_gradients(
    const Model<double>&, const std::vector<TokenSequence>&,
    const std::vector<std::vector<std::uint8_t>>&);
template double sequence_loss(const Model<float>&, std::span<const int>);
template double sequence_loss(const Model<double>&, std::span<const int>);
template void adam_update(std::span<float>, std::span<const double>, double,
                          std::span<float>, std::span<float>, std::int64_t,
                          const AdamHyper&);
template void adam_update(std::span<double>, std::span<const double>, double,
                          std::span<double>, std::span<double>, std::int64_t,
                          const AdamHyper&);
template struct AdamState<float>;
template struct AdamState<double>;
template void adam_step(ModelParams<float>&, AdamState<float>&,
                        const GradAccum&, const AdamHyper&);
template void adam_step(ModelParams<double>&, AdamState<double>&,
                        const GradAccum&, const AdamHyper&);

}  // namespace lifeformer
