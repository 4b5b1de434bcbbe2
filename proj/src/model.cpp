#include "lifeformer/model.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "lifeformer/linalg.hpp"

namespace lifeformer {

void ModelConfig::validate() const {
  if (vocab < 1 || max_seq_len < 2 || dim < 1 || depth < 1 || heads < 1 ||
      head_dim < 1 || ffn_mult < 1) {
    throw std::invalid_argument("model config has non-positive sizes");
  }
  if (head_dim % 2 != 0) {
    throw std::invalid_argument("head_dim must be even for rotary encoding");
  }
  if (rope_base <= 1.0) {
    throw std::invalid_argument("rope_base must exceed 1");
  }
}

template <typename T>
void ModelParams<T>::allocate(const ModelConfig& cfg) {
  const auto dim = static_cast<std::size_t>(cfg.dim);
  const auto inner = static_cast<std::size_t>(cfg.inner());
  const auto ffn = static_cast<std::size_t>(cfg.ffn_dim());
  tok_emb.assign(static_cast<std::size_t>(cfg.vocab) * dim, T(0));
  layers.assign(static_cast<std::size_t>(cfg.depth), Layer{});
  for (auto& layer : layers) {
    layer.attn_norm_gain.assign(dim, T(0));
    layer.wq.assign(dim * inner, T(0));
    layer.wk.assign(dim * inner, T(0));
    layer.wv.assign(dim * inner, T(0));
    layer.wo.assign(inner * dim, T(0));
    layer.ffn_norm_gain.assign(dim, T(0));
    layer.w_ff_in.assign(dim * ffn, T(0));
    layer.w_ff_out.assign(ffn * dim, T(0));
  }
  final_norm_gain.assign(dim, T(0));
  w_head.assign(dim * static_cast<std::size_t>(cfg.vocab), T(0));
}

template <typename T>
void ModelParams<T>::zero() {
  for (auto& arr : arrays()) {
    std::fill(arr.data->begin(), arr.data->end(), T(0));
  }
}

template <typename T>
void ModelParams<T>::init_weights(Rng& rng) {
  for (auto& arr : arrays()) {
    if (arr.name.find("norm") != std::string::npos) {
      std::fill(arr.data->begin(), arr.data->end(), T(1));
    } else {
      for (auto& w : *arr.data) {
        w = static_cast<T>(rng.normal(0.0, 0.02));
      }
    }
  }
}

template <typename T>
std::vector<MutArray<T>> ModelParams<T>::arrays() {
  std::vector<MutArray<T>> out;
  const int dim = final_norm_gain.empty() ? 0 : static_cast<int>(final_norm_gain.size());
  const int vocab = dim == 0 ? 0 : static_cast<int>(tok_emb.size()) / dim;
  const int inner = layers.empty() ? 0 : static_cast<int>(layers[0].wq.size()) / dim;
  const int ffn = layers.empty() ? 0 : static_cast<int>(layers[0].w_ff_in.size()) / dim;
  out.push_back({"tok_emb", &tok_emb, vocab, dim});
  for (std::size_t i = 0; i < layers.size(); ++i) {
    const std::string prefix = "layers." + std::to_string(i) + ".";
    auto& layer = layers[i];
    out.push_back({prefix + "attn_norm_gain", &layer.attn_norm_gain, 1, dim});
    out.push_back({prefix + "wq", &layer.wq, dim, inner});
    out.push_back({prefix + "wk", &layer.wk, dim, inner});
    out.push_back({prefix + "wv", &layer.wv, dim, inner});
    out.push_back({prefix + "wo", &layer.wo, inner, dim});
    out.push_back({prefix + "ffn_norm_gain", &layer.ffn_norm_gain, 1, dim});
    out.push_back({prefix + "w_ff_in", &layer.w_ff_in, dim, ffn});
    out.push_back({prefix + "w_ff_out", &layer.w_ff_out, ffn, dim});
  }
  out.push_back({"final_norm_gain", &final_norm_gain, 1, dim});
  out.push_back({"head", &w_head, dim, vocab});
  return out;
}

template <typename T>
std::size_t ModelParams<T>::parameter_count() const {
  std::size_t count = tok_emb.size() + final_norm_gain.size() + w_head.size();
  for (const auto& layer : layers) {
    count += layer.attn_norm_gain.size() + layer.wq.size() + layer.wk.size() +
             layer.wv.size() + layer.wo.size() + layer.ffn_norm_gain.size() +
             layer.w_ff_in.size() + layer.w_ff_out.size();
  }
  return count;
}

template <typename T>
bool ModelParams<T>::all_finite() const {
  auto ok = [](const std::vector<T>& v) {
    for (T x : v) {
      if (!std::isfinite(static_cast<double>(x))) {
        return false;
      }
    }
    return true;
  };
  if (!ok(tok_emb) || !ok(final_norm_gain) || !ok(w_head)) {
    return false;
  }
  for (const auto& layer : layers) {
    if (!ok(layer.attn_norm_gain) || !ok(layer.wq) || !ok(layer.wk) ||
        !ok(layer.wv) || !ok(layer.wo) || !ok(layer.ffn_norm_gain) ||
        !ok(layer.w_ff_in) || !ok(layer.w_ff_out)) {
      return false;
    }
  }
  return true;
}

template <typename T>
void RopeTable<T>::build(const ModelConfig& cfg) {
  head_dim = cfg.head_dim;
  max_positions = cfg.max_seq_len;
  const int pairs = head_dim / 2;
  cos_table.resize(static_cast<std::size_t>(max_positions) * pairs);
  sin_table.resize(static_cast<std::size_t>(max_positions) * pairs);
  for (int pos = 0; pos < max_positions; ++pos) {
    for (int i = 0; i < pairs; ++i) {
      const double theta =
          std::pow(cfg.rope_base, -2.0 * i / static_cast<double>(head_dim));
      const double angle = pos * theta;
      cos_table[static_cast<std::size_t>(pos) * pairs + i] =
          static_cast<T>(std::cos(angle));
      sin_table[static_cast<std::size_t>(pos) * pairs + i] =
          static_cast<T>(std::sin(angle));
    }
  }
}

template <typename T>
void rope_apply(const RopeTable<T>& table, T* vec, int heads, int pos,
                int direction) {
  const int pairs = table.head_dim / 2;
  const T* cos_row = table.cos_table.data() + static_cast<std::size_t>(pos) * pairs;
  const T* sin_row = table.sin_table.data() + static_cast<std::size_t>(pos) * pairs;
  for (int h = 0; h < heads; ++h) {
    T* head = vec + static_cast<std::size_t>(h) * table.head_dim;
    for (int i = 0; i < pairs; ++i) {
      const T c = cos_row[i];
      const T s = direction >= 0 ? sin_row[i] : -sin_row[i];
      const T a = head[2 * i];
      const T b = head[2 * i + 1];
      head[2 * i] = a * c - b * s;
      head[2 * i + 1] = a * s + b * c;
    }
  }
}

namespace {

template <typename T>
T gelu(T x) {
  constexpr double inv_sqrt2 = 0.70710678118654752440;
  return static_cast<T>(0.5) * x *
         (static_cast<T>(1) + std::erf(x * static_cast<T>(inv_sqrt2)));
}

// y = RMSNorm(x) * gain, one row; returns 1/rms for the backward pass.
template <typename T>
T rmsnorm_row(const T* x, const T* gain, int dim, T* y) {
  double sum_sq = 0.0;
  for (int i = 0; i < dim; ++i) {
    sum_sq += static_cast<double>(x[i]) * static_cast<double>(x[i]);
  }
  const T inv = static_cast<T>(1.0 / std::sqrt(sum_sq / dim + kNormEps));
  for (int i = 0; i < dim; ++i) {
    y[i] = x[i] * gain[i] * inv;
  }
  return inv;
}

// Masked causal softmax over one scores row, in place. Entries outside the
// visible set are zeroed. Visibility: j <= i, and FCM-hidden keys are
// skipped for every query except j == i.
template <typename T>
void softmax_row(T* row, int i, int len, const std::uint8_t* fcm_hidden) {
  auto visible = [&](int j) {
    return j == i || fcm_hidden == nullptr || fcm_hidden[j] == 0;
  };
  T max_score = row[i];  // self is always visible
  for (int j = 0; j <= i; ++j) {
    if (visible(j) && row[j] > max_score) {
      max_score = row[j];
    }
  }
  double sum = 0.0;
  for (int j = 0; j <= i; ++j) {
    if (visible(j)) {
      row[j] = std::exp(row[j] - max_score);
      sum += static_cast<double>(row[j]);
    } else {
      row[j] = T(0);
    }
  }
  const T inv_sum = static_cast<T>(1.0 / sum);
  for (int j = 0; j <= i; ++j) {
    row[j] *= inv_sum;
  }
  std::fill(row + i + 1, row + len, T(0));
}

// Multi-head attention over an already-normed input. Fills q/k/v (post
// rotation), probs, ctx and writes ctx * Wo into attn_out.
template <typename T>
void attention_core(const ModelConfig& cfg,
                    const typename ModelParams<T>::Layer& layer,
                    const RopeTable<T>& rope, const T* normed, int len,
                    const std::uint8_t* fcm_hidden, T* q, T* k, T* v, T* probs,
                    T* ctx, T* attn_out) {
  const int dim = cfg.dim;
  const int inner = cfg.inner();
  const int hd = cfg.head_dim;
  la::gemm(false, false, len, inner, dim, T(1), normed, dim, layer.wq.data(),
           inner, T(0), q, inner);
  la::gemm(false, false, len, inner, dim, T(1), normed, dim, layer.wk.data(),
           inner, T(0), k, inner);
  la::gemm(false, false, len, inner, dim, T(1), normed, dim, layer.wv.data(),
           inner, T(0), v, inner);
  for (int pos = 0; pos < len; ++pos) {
    rope_apply(rope, q + static_cast<std::size_t>(pos) * inner, cfg.heads, pos, +1);
    rope_apply(rope, k + static_cast<std::size_t>(pos) * inner, cfg.heads, pos, +1);
  }
  const T scale = static_cast<T>(1.0 / std::sqrt(static_cast<double>(hd)));
  for (int h = 0; h < cfg.heads; ++h) {
    T* probs_h = probs + static_cast<std::size_t>(h) * len * len;
    la::gemm(false, true, len, len, hd, scale, q + static_cast<std::size_t>(h) * hd,
             inner, k + static_cast<std::size_t>(h) * hd, inner, T(0), probs_h, len);
    for (int i = 0; i < len; ++i) {
      softmax_row(probs_h + static_cast<std::size_t>(i) * len, i, len, fcm_hidden);
    }
    la::gemm(false, false, len, hd, len, T(1), probs_h, len,
             v + static_cast<std::size_t>(h) * hd, inner, T(0),
             ctx + static_cast<std::size_t>(h) * hd, inner);
  }
  la::gemm(false, false, len, dim, inner, T(1), ctx, inner, layer.wo.data(),
           dim, T(0), attn_out, dim);
}

}  // namespace

template <typename T>
void ForwardCache<T>::resize(const ModelConfig& cfg, int length) {
  len = length;
  const auto l = static_cast<std::size_t>(length);
  const auto dim = static_cast<std::size_t>(cfg.dim);
  const auto inner = static_cast<std::size_t>(cfg.inner());
  const auto ffn = static_cast<std::size_t>(cfg.ffn_dim());
  layers.resize(static_cast<std::size_t>(cfg.depth));
  for (auto& layer : layers) {
    layer.x_in.resize(l * dim);
    layer.normed.resize(l * dim);
    layer.rms_inv.resize(l);
    layer.q.resize(l * inner);
    layer.k.resize(l * inner);
    layer.v.resize(l * inner);
    layer.probs.resize(static_cast<std::size_t>(cfg.heads) * l * l);
    layer.ctx.resize(l * inner);
    layer.x_mid.resize(l * dim);
    layer.normed2.resize(l * dim);
    layer.rms_inv2.resize(l);
    layer.ff_pre.resize(l * ffn);
    layer.ff_act.resize(l * ffn);
  }
  x_final.resize(l * dim);
  final_normed.resize(l * dim);
  final_rms_inv.resize(l);
  logits.resize(l * static_cast<std::size_t>(cfg.vocab));
}

template <typename T>
void forward(const Model<T>& model, std::span<const int> tokens,
             const std::uint8_t* fcm_hidden, ForwardCache<T>& cache) {
  const ModelConfig& cfg = model.cfg;
  const int len = static_cast<int>(tokens.size());
  if (len < 1 || len > cfg.max_seq_len) {
    throw std::invalid_argument("sequence length out of range");
  }
  cache.resize(cfg, len);
  const int dim = cfg.dim;
  const int ffn = cfg.ffn_dim();

  // Token embeddings seed the residual stream.
  T* x = cache.layers[0].x_in.data();
  for (int pos = 0; pos < len; ++pos) {
    const int token = tokens[static_cast<std::size_t>(pos)];
    if (token < 0 || token >= cfg.vocab) {
      throw std::invalid_argument("token id out of range");
    }
    std::copy_n(model.params.tok_emb.data() + static_cast<std::size_t>(token) * dim,
                dim, x + static_cast<std::size_t>(pos) * dim);
  }

  for (int li = 0; li < cfg.depth; ++li) {
    auto& lc = cache.layers[static_cast<std::size_t>(li)];
    const auto& lp = model.params.layers[static_cast<std::size_t>(li)];
    const T* x_in = lc.x_in.data();
    for (int pos = 0; pos < len; ++pos) {
      lc.rms_inv[static_cast<std::size_t>(pos)] = rmsnorm_row(
          x_in + static_cast<std::size_t>(pos) * dim, lp.attn_norm_gain.data(),
          dim, lc.normed.data() + static_cast<std::size_t>(pos) * dim);
    }
    // attn_out is staged in x_mid, then the residual is added.
    attention_core<T>(cfg, lp, model.rope, lc.normed.data(), len, fcm_hidden,
                      lc.q.data(), lc.k.data(), lc.v.data(), lc.probs.data(),
                      lc.ctx.data(), lc.x_mid.data());
    for (std::size_t i = 0; i < lc.x_mid.size(); ++i) {
      lc.x_mid[i] += lc.x_in[i];
    }
    for (int pos = 0; pos < len; ++pos) {
      lc.rms_inv2[static_cast<std::size_t>(pos)] = rmsnorm_row(
          lc.x_mid.data() + static_cast<std::size_t>(pos) * dim,
          lp.ffn_norm_gain.data(), dim,
          lc.normed2.data() + static_cast<std::size_t>(pos) * dim);
    }
    la::gemm(false, false, len, ffn, dim, T(1), lc.normed2.data(), dim,
             lp.w_ff_in.data(), ffn, T(0), lc.ff_pre.data(), ffn);
    for (std::size_t i = 0; i < lc.ff_pre.size(); ++i) {
      lc.ff_act[i] = gelu(lc.ff_pre[i]);
    }
    T* out = li + 1 < cfg.depth ? cache.layers[static_cast<std::size_t>(li) + 1].x_in.data()
                                : cache.x_final.data();
    la::gemm(false, false, len, dim, ffn, T(1), lc.ff_act.data(), ffn,
             lp.w_ff_out.data(), dim, T(0), out, dim);
    for (std::size_t i = 0; i < lc.x_mid.size(); ++i) {
      out[i] += lc.x_mid[i];
    }
  }

  for (int pos = 0; pos < len; ++pos) {
    cache.final_rms_inv[static_cast<std::size_t>(pos)] = rmsnorm_row(
        cache.x_final.data() + static_cast<std::size_t>(pos) * dim,
        model.params.final_norm_gain.data(), dim,
        cache.final_normed.data() + static_cast<std::size_t>(pos) * dim);
  }
  la::gemm(false, false, len, cfg.vocab, dim, T(1), cache.final_normed.data(),
           dim, model.params.w_head.data(), cfg.vocab, T(0),
           cache.logits.data(), cfg.vocab);
}

template <typename T>
std::vector<T> attention_block(const Model<T>& model, int layer,
                               std::span<const T> hidden,
                               const std::uint8_t* fcm_hidden,
                               std::vector<T>* probs_out) {
  const ModelConfig& cfg = model.cfg;
  const int dim = cfg.dim;
  if (hidden.size() % static_cast<std::size_t>(dim) != 0) {
    throw std::invalid_argument("hidden size not a multiple of model dim");
  }
  const int len = static_cast<int>(hidden.size()) / dim;
  if (len < 1 || len > cfg.max_seq_len) {
    throw std::invalid_argument("sequence length out of range");
  }
  const auto& lp = model.params.layers.at(static_cast<std::size_t>(layer));
  const auto l = static_cast<std::size_t>(len);
  const auto inner = static_cast<std::size_t>(cfg.inner());
  std::vector<T> normed(l * dim), q(l * inner), k(l * inner), v(l * inner);
  std::vector<T> probs(static_cast<std::size_t>(cfg.heads) * l * l);
  std::vector<T> ctx(l * inner), attn_out(l * dim);
  for (int pos = 0; pos < len; ++pos) {
    rmsnorm_row(hidden.data() + static_cast<std::size_t>(pos) * dim,
                lp.attn_norm_gain.data(), dim,
                normed.data() + static_cast<std::size_t>(pos) * dim);
  }
  attention_core<T>(cfg, lp, model.rope, normed.data(), len, fcm_hidden,
                    q.data(), k.data(), v.data(), probs.data(), ctx.data(),
                    attn_out.data());
  std::vector<T> out(hidden.begin(), hidden.end());
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] += attn_out[i];
  }
  if (probs_out != nullptr) {
    *probs_out = std::move(probs);
  }
  return out;
}

template <typename T>
InferenceSession<T>::InferenceSession(const Model<T>& model) : model_(&model) {
  const ModelConfig& cfg = model.cfg;
  layers_.resize(static_cast<std::size_t>(cfg.depth));
  const auto cache_size =
      static_cast<std::size_t>(cfg.max_seq_len) * cfg.inner();
  for (auto& layer : layers_) {
    layer.k_cache.resize(cache_size);
    layer.v_cache.resize(cache_size);
  }
  x_.resize(static_cast<std::size_t>(cfg.dim));
  normed_.resize(static_cast<std::size_t>(cfg.dim));
  q_.resize(static_cast<std::size_t>(cfg.inner()));
  ctx_.resize(static_cast<std::size_t>(cfg.inner()));
  ff_.resize(static_cast<std::size_t>(cfg.ffn_dim()));
  logits_.resize(static_cast<std::size_t>(cfg.vocab));
}

template <typename T>
void InferenceSession<T>::reset() {
  pos_ = 0;
}

namespace {

// y = x * W with W row-major [in][out]; plain loops so the incremental path
// is self-consistent regardless of BLAS kernel selection.
template <typename T>
void matvec(const T* x, const T* w, int in, int out, T* y) {
  std::fill(y, y + out, T(0));
  for (int i = 0; i < in; ++i) {
    const T coef = x[i];
    const T* row = w + static_cast<std::size_t>(i) * out;
    for (int o = 0; o < out; ++o) {
      y[o] += coef * row[o];
    }
  }
}

}  // namespace

template <typename T>
const std::vector<T>& InferenceSession<T>::append(int token) {
  const ModelConfig& cfg = model_->cfg;
  if (pos_ >= cfg.max_seq_len) {
    throw std::invalid_argument("inference session exceeded max_seq_len");
  }
  if (token < 0 || token >= cfg.vocab) {
    throw std::invalid_argument("token id out of range");
  }
  const int dim = cfg.dim;
  const int inner = cfg.inner();
  const int hd = cfg.head_dim;
  const int ffn = cfg.ffn_dim();
  const T scale = static_cast<T>(1.0 / std::sqrt(static_cast<double>(hd)));

  std::copy_n(model_->params.tok_emb.data() + static_cast<std::size_t>(token) * dim,
              dim, x_.data());
  std::vector<T> scores(static_cast<std::size_t>(pos_) + 1);
  for (int li = 0; li < cfg.depth; ++li) {
    const auto& lp = model_->params.layers[static_cast<std::size_t>(li)];
    auto& ls = layers_[static_cast<std::size_t>(li)];
    rmsnorm_row(x_.data(), lp.attn_norm_gain.data(), dim, normed_.data());
    T* k_new = ls.k_cache.data() + static_cast<std::size_t>(pos_) * inner;
    T* v_new = ls.v_cache.data() + static_cast<std::size_t>(pos_) * inner;
    matvec(normed_.data(), lp.wq.data(), dim, inner, q_.data());
    matvec(normed_.data(), lp.wk.data(), dim, inner, k_new);
    matvec(normed_.data(), lp.wv.data(), dim, inner, v_new);
    rope_apply(model_->rope, q_.data(), cfg.heads, pos_, +1);
    rope_apply(model_->rope, k_new, cfg.heads, pos_, +1);
    for (int h = 0; h < cfg.heads; ++h) {
      const T* qh = q_.data() + static_cast<std::size_t>(h) * hd;
      T max_score = T(0);
      for (int j = 0; j <= pos_; ++j) {
        const T* kh = ls.k_cache.data() + static_cast<std::size_t>(j) * inner +
                      static_cast<std::size_t>(h) * hd;
        T dot = T(0);
        for (int d = 0; d < hd; ++d) {
          dot += qh[d] * kh[d];
        }
        scores[static_cast<std::size_t>(j)] = dot * scale;
        if (j == 0 || scores[static_cast<std::size_t>(j)] > max_score) {
          max_score = scores[static_cast<std::size_t>(j)];
        }
      }
      double sum = 0.0;
      for (int j = 0; j <= pos_; ++j) {
        scores[static_cast<std::size_t>(j)] =
            std::exp(scores[static_cast<std::size_t>(j)] - max_score);
        sum += static_cast<double>(scores[static_cast<std::size_t>(j)]);
      }
      const T inv_sum = static_cast<T>(1.0 / sum);
      T* ctx_h = ctx_.data() + static_cast<std::size_t>(h) * hd;
      std::fill(ctx_h, ctx_h + hd, T(0));
      for (int j = 0; j <= pos_; ++j) {
        const T p = scores[static_cast<std::size_t>(j)] * inv_sum;
        const T* vh = ls.v_cache.data() + static_cast<std::size_t>(j) * inner +
                      static_cast<std::size_t>(h) * hd;
        for (int d = 0; d < hd; ++d) {
          ctx_h[d] += p * vh[d];
        }
      }
    }
    // attn out + residual, reusing normed_ as scratch.
    matvec(ctx_.data(), lp.wo.data(), inner, dim, normed_.data());
    for (int i = 0; i < dim; ++i) {
      x_[static_cast<std::size_t>(i)] += normed_[static_cast<std::size_t>(i)];
    }
    rmsnorm_row(x_.data(), lp.ffn_norm_gain.data(), dim, normed_.data());
    matvec(normed_.data(), lp.w_ff_in.data(), dim, ffn, ff_.data());
    for (auto& f : ff_) {
      f = gelu(f);
    }
    matvec(ff_.data(), lp.w_ff_out.data(), ffn, dim, normed_.data());
    for (int i = 0; i < dim; ++i) {
      x_[static_cast<std::size_t>(i)] += normed_[static_cast<std::size_t>(i)];
    }
  }
  rmsnorm_row(x_.data(), model_->params.final_norm_gain.data(), dim,
              normed_.data());
  matvec(normed_.data(), model_->params.w_head.data(), dim, cfg.vocab,
         logits_.data());
  ++pos_;
  return logits_;
}

template <typename T>
int sample_from_logits(std::span<const T> logits, double temperature,
                       Rng& rng) {
  if (temperature < 0.0) {
    throw std::invalid_argument("temperature must be >= 0");
  }
  if (logits.empty()) {
    throw std::invalid_argument("empty logits");
  }
  if (temperature == 0.0) {
    int best = 0;
    for (int i = 1; i < static_cast<int>(logits.size()); ++i) {
      if (logits[static_cast<std::size_t>(i)] > logits[static_cast<std::size_t>(best)]) {
        best = i;
      }
    }
    return best;
  }
  double max_logit = static_cast<double>(logits[0]);
  for (T l : logits) {
    max_logit = std::max(max_logit, static_cast<double>(l));
  }
  std::vector<double> weights(logits.size());
  double total = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    weights[i] = std::exp((static_cast<double>(logits[i]) - max_logit) / temperature);
    total += weights[i];
  }
  const double r = rng.uniform01() * total;
  double cum = 0.0;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    cum += weights[i];
    if (r < cum) {
      return static_cast<int>(i);
    }
  }
  return static_cast<int>(weights.size()) - 1;
}

template <typename T>
TokenSequence generate(const Model<T>& model, std::span<const int> prompt,
                       int n_tokens, double temperature, Rng& rng) {
  if (temperature < 0.0) {
    throw std::invalid_argument("temperature must be >= 0");
  }
  if (prompt.empty()) {
    throw std::invalid_argument("generation needs a nonempty prompt");
  }
  if (n_tokens < 0 ||
      static_cast<int>(prompt.size()) + n_tokens > model.cfg.max_seq_len) {
    throw std::invalid_argument("prompt length + n_tokens exceeds max_seq_len");
  }
  InferenceSession<T> session(model);
  const std::vector<T>* logits = nullptr;
  for (int token : prompt) {
    logits = &session.append(token);
  }
  TokenSequence out;
  out.reserve(static_cast<std::size_t>(n_tokens));
  for (int i = 0; i < n_tokens; ++i) {
    const int next = sample_from_logits<T>(
        std::span<const T>(logits->data(), logits->size()), temperature, rng);
    out.push_back(next);
    if (i + 1 < n_tokens) {
      logits = &session.append(next);
    }
  }
  return out;
}

template struct ModelParams<float>;
template struct ModelParams<double>;
template struct RopeTable<float>;
template struct RopeTable<double>;
template struct ForwardCache<float>;
template struct ForwardCache<double>;
template class InferenceSession<float>;
template class InferenceSession<double>;
template void rope_apply(const RopeTable<float>&, float*, int, int, int);
template void rope_apply(const RopeTable<double>&, double*, int, int, int);
template void forward(const Model<float>&, std::span<const int>,
                      const std::uint8_t*, ForwardCache<float>&);
template void forward(const Model<double>&, std::span<const int>,
                      const std::uint8_t*, ForwardCache<double>&);
template std::vector<float> attention_block(const Model<float>&, int,
                                            std::span<const float>,
                                            const std::uint8_t*,
                                            std::vector<float>*);
template std::vector<double> attention_block(const Model<double>&, int,
                                             std::span<const double>,
                                             const std::uint8_t*,
                                             std::vector<double>*);
template int sample_from_logits(std::span<const float>, double, Rng&);
template int sample_from_logits(std::span<const double>, double, Rng&);
template TokenSequence generate(const Model<float>&, std::span<const int>, int,
                                double, Rng&);
template TokenSequence generate(const Model<double>&, std::span<const int>,
                                int, double, Rng&);

}  // namespace lifeformer
