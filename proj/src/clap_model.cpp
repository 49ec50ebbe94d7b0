#include "affect/clap_model.hpp"

#include <algorithm>
#include <cmath>

#include "affect/error.hpp"
#include "affect/rng.hpp"

namespace affect {

namespace {

constexpr double kMinNorm = 1e-12;

void check_features(const Matrix& features, std::size_t dim, const char* what) {
  if (features.cols() != dim)
    throw Error(ErrorCode::DimensionMismatch, std::string(what) + " features have " + std::to_string(features.cols()) +
                                                  " columns, model expects " + std::to_string(dim));
}

// Rows of W x + b before and after normalization, plus the norms.
struct Projection {
  Matrix raw;
  Matrix unit;
  std::vector<double> norms;
};

Projection project_rows(const Matrix& w, const std::vector<double>& b, const Matrix& x) {
  Projection p{Matrix(x.rows(), w.rows()), Matrix(x.rows(), w.rows()), std::vector<double>(x.rows())};
  for (std::size_t i = 0; i < x.rows(); ++i) {
    affine(w, b, x.row(i), p.raw.row(i));
    const double n = l2_norm(p.raw.row(i));
    if (!(n >= kMinNorm)) throw Error(ErrorCode::DegenerateEmbedding, "projected row " + std::to_string(i) + " has zero norm");
    p.norms[i] = n;
    for (std::size_t k = 0; k < w.rows(); ++k) p.unit(i, k) = p.raw(i, k) / n;
  }
  return p;
}

std::vector<double> project_one(const Matrix& w, const std::vector<double>& b, std::span<const double> x) {
  std::vector<double> out(w.rows());
  affine(w, b, x, out);
  const double n = l2_norm(out);
  if (!(n >= kMinNorm)) throw Error(ErrorCode::DegenerateEmbedding, "projected vector has zero norm");
  for (double& v : out) v /= n;
  return out;
}

// Backprop through e = z / |z|: dz = (de - e <e, de>) / |z|, then through
// z = W x + b.
void backprop_projection(const Projection& p, const Matrix& d_unit, const Matrix& x, Matrix& dw,
                         std::vector<double>& db) {
  const std::size_t d = p.unit.cols();
  std::vector<double> dz(d);
  for (std::size_t i = 0; i < x.rows(); ++i) {
    const double proj = dot(p.unit.row(i), d_unit.row(i));
    for (std::size_t k = 0; k < d; ++k) dz[k] = (d_unit(i, k) - p.unit(i, k) * proj) / p.norms[i];
    const auto xi = x.row(i);
    for (std::size_t k = 0; k < d; ++k) {
      db[k] += dz[k];
      auto wrow = dw.row(k);
      for (std::size_t c = 0; c < xi.size(); ++c) wrow[c] += dz[k] * xi[c];
    }
  }
}

}  // namespace

ClapModel ClapModel::initialize(const ModelConfig& config, std::uint64_t seed) {
  if (config.audio_dim == 0 || config.text_dim == 0 || config.embed_dim == 0)
    throw Error(ErrorCode::InvalidArgument, "model dimensions must be positive");
  if (!(config.tau_init > 0.0) || !(config.tau_max > 0.0) || config.tau_init > config.tau_max)
    throw Error(ErrorCode::InvalidArgument, "tau_init must lie in (0, tau_max]");
  Rng rng(seed);
  ClapModel m;
  m.config = config;
  m.seed = seed;
  auto init = [&](Matrix& w, std::vector<double>& b, std::size_t fan_in) {
    w = Matrix(config.embed_dim, fan_in);
    b.assign(config.embed_dim, 0.0);
    const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
    for (double& v : w.data()) v = rng.uniform(-bound, bound);
    for (double& v : b) v = rng.uniform(-bound, bound);
  };
  init(m.w_audio, m.b_audio, config.audio_dim);
  init(m.w_text, m.b_text, config.text_dim);
  m.log_tau = std::log(config.tau_init);
  return m;
}

double ClapModel::tau() const { return std::exp(log_tau); }

void ClapModel::validate() const {
  const auto& c = config;
  if (w_audio.rows() != c.embed_dim || w_audio.cols() != c.audio_dim || b_audio.size() != c.embed_dim ||
      w_text.rows() != c.embed_dim || w_text.cols() != c.text_dim || b_text.size() != c.embed_dim)
    throw Error(ErrorCode::DimensionMismatch, "model parameter shapes disagree with config");
  for (double v : flatten())
    if (!std::isfinite(v)) throw Error(ErrorCode::InvalidArgument, "model has non-finite parameters");
  if (tau() > c.tau_max * (1.0 + 1e-12)) throw Error(ErrorCode::InvalidArgument, "tau exceeds tau_max");
}

std::size_t ClapModel::parameter_count() const {
  return w_audio.size() + b_audio.size() + w_text.size() + b_text.size() + 1;
}

std::vector<double> ClapModel::flatten() const {
  std::vector<double> flat;
  flat.reserve(parameter_count());
  flat.insert(flat.end(), w_audio.data().begin(), w_audio.data().end());
  flat.insert(flat.end(), b_audio.begin(), b_audio.end());
  flat.insert(flat.end(), w_text.data().begin(), w_text.data().end());
  flat.insert(flat.end(), b_text.begin(), b_text.end());
  flat.push_back(log_tau);
  return flat;
}

void ClapModel::assign(std::span<const double> flat) {
  if (flat.size() != parameter_count()) throw Error(ErrorCode::DimensionMismatch, "flat parameter vector has wrong size");
  auto it = flat.begin();
  auto take = [&](auto& dst) {
    std::copy(it, it + static_cast<std::ptrdiff_t>(dst.size()), dst.begin());
    it += static_cast<std::ptrdiff_t>(dst.size());
  };
  take(w_audio.data());
  take(b_audio);
  take(w_text.data());
  take(b_text);
  log_tau = *it;
}

EmbeddingBatch project(const ClapModel& model, const Matrix& audio_features, const Matrix& text_features) {
  check_features(audio_features, model.config.audio_dim, "audio");
  check_features(text_features, model.config.text_dim, "text");
  if (audio_features.rows() != text_features.rows())
    throw Error(ErrorCode::DimensionMismatch, "audio and text batches differ in size");
  return EmbeddingBatch{project_rows(model.w_audio, model.b_audio, audio_features).unit,
                        project_rows(model.w_text, model.b_text, text_features).unit};
}

std::vector<double> project_audio(const ClapModel& model, std::span<const double> features) {
  if (features.size() != model.config.audio_dim) throw Error(ErrorCode::DimensionMismatch, "audio feature dimension");
  return project_one(model.w_audio, model.b_audio, features);
}

std::vector<double> project_text(const ClapModel& model, std::span<const double> features) {
  if (features.size() != model.config.text_dim) throw Error(ErrorCode::DimensionMismatch, "text feature dimension");
  return project_one(model.w_text, model.b_text, features);
}

Matrix similarity(double tau, const EmbeddingBatch& batch) {
  if (batch.audio.rows() != batch.text.rows() || batch.audio.cols() != batch.text.cols())
    throw Error(ErrorCode::DimensionMismatch, "embedding batch shapes differ");
  Matrix c = multiply_transposed(batch.text, batch.audio);
  for (double& v : c.data()) v *= tau;
  return c;
}

Matrix similarity(const ClapModel& model, const EmbeddingBatch& batch) { return similarity(model.tau(), batch); }

namespace {

// Row-wise softmax of `c` (or of its transpose when by_column is set),
// written into `p` in the orientation of `c`. Returns -mean log p_ii.
double softmax_xent(const Matrix& c, bool by_column, Matrix& p) {
  const std::size_t n = c.rows();
  auto at = [&](std::size_t line, std::size_t k) { return by_column ? c(k, line) : c(line, k); };
  double total = 0.0;
  for (std::size_t line = 0; line < n; ++line) {
    double mx = at(line, 0);
    for (std::size_t k = 1; k < n; ++k) mx = std::max(mx, at(line, k));
    double sum = 0.0;
    for (std::size_t k = 0; k < n; ++k) sum += std::exp(at(line, k) - mx);
    const double log_z = mx + std::log(sum);
    total += log_z - at(line, line);
    for (std::size_t k = 0; k < n; ++k) {
      const double prob = std::exp(at(line, k) - log_z);
      if (by_column) p(k, line) = prob;
      else p(line, k) = prob;
    }
  }
  return total / static_cast<double>(n);
}

LossValue loss_and_probs(const Matrix& logits, Matrix& p_rows, Matrix& p_cols) {
  if (logits.rows() != logits.cols()) throw Error(ErrorCode::DimensionMismatch, "logit matrix must be square");
  if (logits.rows() < 2) throw Error(ErrorCode::DimensionMismatch, "contrastive loss needs N >= 2");
  for (double v : logits.data())
    if (!std::isfinite(v)) throw Error(ErrorCode::NonFiniteLogits, "similarity matrix has non-finite entries");
  p_rows = Matrix(logits.rows(), logits.cols());
  p_cols = Matrix(logits.rows(), logits.cols());
  LossValue out;
  out.text = softmax_xent(logits, false, p_rows);
  out.audio = softmax_xent(logits, true, p_cols);
  out.loss = 0.5 * (out.text + out.audio);
  return out;
}

}  // namespace

LossValue contrastive_loss(const Matrix& logits) {
  Matrix pr, pc;
  return loss_and_probs(logits, pr, pc);
}

std::vector<double> Gradients::flatten() const {
  std::vector<double> flat;
  flat.insert(flat.end(), w_audio.data().begin(), w_audio.data().end());
  flat.insert(flat.end(), b_audio.begin(), b_audio.end());
  flat.insert(flat.end(), w_text.data().begin(), w_text.data().end());
  flat.insert(flat.end(), b_text.begin(), b_text.end());
  flat.push_back(log_tau);
  return flat;
}

Gradients loss_gradients(const ClapModel& model, const Matrix& audio_features, const Matrix& text_features) {
  check_features(audio_features, model.config.audio_dim, "audio");
  check_features(text_features, model.config.text_dim, "text");
  if (audio_features.rows() != text_features.rows())
    throw Error(ErrorCode::DimensionMismatch, "audio and text batches differ in size");

  const Projection pa = project_rows(model.w_audio, model.b_audio, audio_features);
  const Projection pt = project_rows(model.w_text, model.b_text, text_features);
  const double tau = model.tau();
  const Matrix cosine = multiply_transposed(pt.unit, pa.unit);
  Matrix logits = cosine;
  for (double& v : logits.data()) v *= tau;

  Matrix p_rows, p_cols;
  Gradients g;
  g.loss = loss_and_probs(logits, p_rows, p_cols);

  // dL/dC = (P_rows - I + P_cols - I) / (2N)
  const std::size_t n = logits.rows();
  Matrix d_logits(n, n);
  const double scale = 0.5 / static_cast<double>(n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      d_logits(i, j) = scale * (p_rows(i, j) + p_cols(i, j) - (i == j ? 2.0 : 0.0));

  double d_tau = 0.0;
  for (std::size_t k = 0; k < d_logits.size(); ++k) d_tau += d_logits.data()[k] * cosine.data()[k];
  g.log_tau = model.config.tau_learnable ? d_tau * tau : 0.0;

  Matrix d_text = multiply(d_logits, pa.unit);               // N x d
  Matrix d_audio = transposed_multiply(d_logits, pt.unit);   // N x d
  for (double& v : d_text.data()) v *= tau;
  for (double& v : d_audio.data()) v *= tau;

  const std::size_t d = model.config.embed_dim;
  g.w_audio = Matrix(d, model.config.audio_dim);
  g.b_audio.assign(d, 0.0);
  g.w_text = Matrix(d, model.config.text_dim);
  g.b_text.assign(d, 0.0);
  backprop_projection(pa, d_audio, audio_features, g.w_audio, g.b_audio);
  backprop_projection(pt, d_text, text_features, g.w_text, g.b_text);
  return g;
}

void adam_step(std::span<double> params, std::span<const double> grads, AdamState& state, const AdamConfig& cfg) {
  if (params.size() != grads.size()) throw Error(ErrorCode::DimensionMismatch, "parameter and gradient sizes differ");
  if (state.m.size() != params.size()) state = AdamState::zeros(params.size());
  state.t += 1;
  const double t = static_cast<double>(state.t);
  const double c1 = 1.0 - std::pow(cfg.beta1, t);
  const double c2 = 1.0 - std::pow(cfg.beta2, t);
  for (std::size_t i = 0; i < params.size(); ++i) {
    state.m[i] = cfg.beta1 * state.m[i] + (1.0 - cfg.beta1) * grads[i];
    state.v[i] = cfg.beta2 * state.v[i] + (1.0 - cfg.beta2) * grads[i] * grads[i];
    const double m_hat = state.m[i] / c1;
    const double v_hat = state.v[i] / c2;
    params[i] -= cfg.learning_rate * m_hat / (std::sqrt(v_hat) + cfg.epsilon);
  }
}

void adam_step(ClapModel& model, const Gradients& grads, AdamState& state, const AdamConfig& cfg) {
  std::vector<double> params = model.flatten();
  const std::vector<double> flat_grads = grads.flatten();
  adam_step(params, flat_grads, state, cfg);
  model.assign(params);
  model.log_tau = std::min(model.log_tau, std::log(model.config.tau_max));
}

}  // namespace affect
