#include "affect/finetune.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include <json.hpp>

#include "affect/error.hpp"
#include "affect/rng.hpp"

namespace affect {

nlohmann::json HeadConfig::to_json() const {
  return nlohmann::json{{"hidden1", hidden1}, {"hidden2", hidden2},           {"epochs", epochs},
                        {"batch_size", batch_size}, {"learning_rate", learning_rate}, {"seed", seed}};
}

FinetuneHead FinetuneHead::initialize(std::size_t input_dim, std::vector<std::string> classes, const HeadConfig& cfg) {
  std::sort(classes.begin(), classes.end());
  classes.erase(std::unique(classes.begin(), classes.end()), classes.end());
  if (classes.empty()) throw Error(ErrorCode::InvalidArgument, "finetune head needs at least one class");
  if (input_dim == 0) throw Error(ErrorCode::InvalidArgument, "finetune head input dimension is zero");
  const std::size_t h1 = cfg.hidden1 ? cfg.hidden1 : input_dim;
  const std::size_t h2 = cfg.hidden2 ? cfg.hidden2 : std::max<std::size_t>(1, input_dim / 2);

  Rng rng(cfg.seed);
  FinetuneHead head;
  head.classes = std::move(classes);
  auto layer = [&](Matrix& w, std::vector<double>& b, std::size_t out, std::size_t in) {
    w = Matrix(out, in);
    b.assign(out, 0.0);
    const double bound = 1.0 / std::sqrt(static_cast<double>(in));
    for (double& v : w.data()) v = rng.uniform(-bound, bound);
    for (double& v : b) v = rng.uniform(-bound, bound);
  };
  layer(head.w1, head.b1, h1, input_dim);
  layer(head.w2, head.b2, h2, h1);
  layer(head.w3, head.b3, head.classes.size(), h2);
  return head;
}

namespace {

struct Activations {
  std::vector<double> z1, a1, z2, a2, logits;
};

Activations forward(const FinetuneHead& h, std::span<const double> x) {
  Activations act;
  act.z1.resize(h.w1.rows());
  affine(h.w1, h.b1, x, act.z1);
  act.a1 = act.z1;
  for (double& v : act.a1) v = std::max(v, 0.0);
  act.z2.resize(h.w2.rows());
  affine(h.w2, h.b2, act.a1, act.z2);
  act.a2 = act.z2;
  for (double& v : act.a2) v = std::max(v, 0.0);
  act.logits.resize(h.w3.rows());
  affine(h.w3, h.b3, act.a2, act.logits);
  return act;
}

std::vector<double> softmax(const std::vector<double>& z) {
  const double mx = *std::max_element(z.begin(), z.end());
  std::vector<double> p(z.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < z.size(); ++i) sum += (p[i] = std::exp(z[i] - mx));
  for (double& v : p) v /= sum;
  return p;
}

// Accumulates outer(delta, input) into dw and delta into db.
void accumulate(std::span<double> dw, std::span<double> db, std::size_t in_dim, const std::vector<double>& delta,
                const std::vector<double>& input) {
  for (std::size_t r = 0; r < delta.size(); ++r) {
    db[r] += delta[r];
    for (std::size_t c = 0; c < in_dim; ++c) dw[r * in_dim + c] += delta[r] * input[c];
  }
}

std::vector<double> backprop_linear(const Matrix& w, const std::vector<double>& delta) {
  std::vector<double> out(w.cols(), 0.0);
  for (std::size_t r = 0; r < w.rows(); ++r)
    for (std::size_t c = 0; c < w.cols(); ++c) out[c] += w(r, c) * delta[r];
  return out;
}

}  // namespace

std::vector<double> FinetuneHead::logits(std::span<const double> x) const {
  if (x.size() != input_dim()) throw Error(ErrorCode::DimensionMismatch, "head input dimension");
  return forward(*this, x).logits;
}

std::vector<double> FinetuneHead::probabilities(std::span<const double> x) const { return softmax(logits(x)); }

std::size_t FinetuneHead::predict(std::span<const double> x) const {
  const auto z = logits(x);
  return static_cast<std::size_t>(std::max_element(z.begin(), z.end()) - z.begin());
}

std::size_t FinetuneHead::parameter_count() const {
  return w1.size() + b1.size() + w2.size() + b2.size() + w3.size() + b3.size();
}

std::vector<double> FinetuneHead::flatten() const {
  std::vector<double> flat;
  flat.reserve(parameter_count());
  flat.insert(flat.end(), w1.data().begin(), w1.data().end());
  flat.insert(flat.end(), b1.begin(), b1.end());
  flat.insert(flat.end(), w2.data().begin(), w2.data().end());
  flat.insert(flat.end(), b2.begin(), b2.end());
  flat.insert(flat.end(), w3.data().begin(), w3.data().end());
  flat.insert(flat.end(), b3.begin(), b3.end());
  return flat;
}

void FinetuneHead::assign(std::span<const double> flat) {
  if (flat.size() != parameter_count()) throw Error(ErrorCode::DimensionMismatch, "flat head vector has wrong size");
  auto it = flat.begin();
  auto take = [&](auto& dst) {
    std::copy(it, it + static_cast<std::ptrdiff_t>(dst.size()), dst.begin());
    it += static_cast<std::ptrdiff_t>(dst.size());
  };
  take(w1.data());
  take(b1);
  take(w2.data());
  take(b2);
  take(w3.data());
  take(b3);
}

double FinetuneHead::loss(const Matrix& x, const std::vector<std::size_t>& labels, std::vector<double>* grad) const {
  if (x.rows() != labels.size() || x.rows() == 0) throw Error(ErrorCode::DimensionMismatch, "head batch shape");
  if (grad) grad->assign(parameter_count(), 0.0);
  // Offsets into the flat gradient.
  const std::size_t o_w1 = 0, o_b1 = o_w1 + w1.size(), o_w2 = o_b1 + b1.size(), o_b2 = o_w2 + w2.size(),
                    o_w3 = o_b2 + b2.size(), o_b3 = o_w3 + w3.size();
  const double inv_n = 1.0 / static_cast<double>(x.rows());
  double total = 0.0;
  for (std::size_t i = 0; i < x.rows(); ++i) {
    const Activations act = forward(*this, x.row(i));
    std::vector<double> p = softmax(act.logits);
    total -= std::log(std::max(p[labels[i]], 1e-300));
    if (!grad) continue;
    auto g = std::span<double>(*grad);

    std::vector<double> d3 = p;
    d3[labels[i]] -= 1.0;
    for (double& v : d3) v *= inv_n;
    accumulate(g.subspan(o_w3, w3.size()), g.subspan(o_b3, b3.size()), w3.cols(), d3, act.a2);

    std::vector<double> d2 = backprop_linear(w3, d3);
    for (std::size_t k = 0; k < d2.size(); ++k) d2[k] = act.z2[k] > 0.0 ? d2[k] : 0.0;
    accumulate(g.subspan(o_w2, w2.size()), g.subspan(o_b2, b2.size()), w2.cols(), d2, act.a1);

    std::vector<double> d1 = backprop_linear(w2, d2);
    for (std::size_t k = 0; k < d1.size(); ++k) d1[k] = act.z1[k] > 0.0 ? d1[k] : 0.0;
    const auto xi = x.row(i);
    accumulate(g.subspan(o_w1, w1.size()), g.subspan(o_b1, b1.size()), w1.cols(), d1,
               std::vector<double>(xi.begin(), xi.end()));
  }
  return total * inv_n;
}

Matrix audio_embeddings(const ClapModel& model, const FeatureSet& clips) {
  require_compatible(model, clips);
  Matrix e(clips.clips.size(), model.config.embed_dim);
  for (std::size_t i = 0; i < clips.clips.size(); ++i) {
    const auto v = project_audio(model, clips.clips[i].audio_features);
    std::copy(v.begin(), v.end(), e.row(i).begin());
  }
  return e;
}

FinetuneHead finetune_head(const ClapModel& model, const FeatureSet& train, const HeadConfig& cfg) {
  const auto labels_sorted = train.labels();
  if (train.clips.size() < labels_sorted.size() || train.clips.empty())
    throw Error(ErrorCode::InsufficientData, std::to_string(train.clips.size()) + " samples for " +
                                                 std::to_string(labels_sorted.size()) + " classes");
  if (cfg.batch_size == 0 || !(cfg.learning_rate > 0.0))
    throw Error(ErrorCode::InvalidArgument, "head batch size and learning rate must be positive");

  const Matrix emb = audio_embeddings(model, train);
  FinetuneHead head = FinetuneHead::initialize(model.config.embed_dim, labels_sorted, cfg);
  std::map<std::string, std::size_t> label_index;
  for (std::size_t i = 0; i < head.classes.size(); ++i) label_index[head.classes[i]] = i;
  std::vector<std::size_t> labels;
  for (const auto& c : train.clips) labels.push_back(label_index.at(c.record.emotion));

  // Separate stream from the initializer so changing epochs never changes init.
  Rng rng(cfg.seed ^ 0x9E3779B97F4A7C15ULL);
  AdamState state = AdamState::zeros(head.parameter_count());
  const AdamConfig adam{cfg.learning_rate, 0.9, 0.999, 1e-8};
  std::vector<std::size_t> order(emb.rows());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::vector<double> params = head.flatten();
  std::vector<double> grad;

  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    rng.shuffle(order);
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const std::size_t end = std::min(order.size(), start + cfg.batch_size);
      Matrix x(end - start, emb.cols());
      std::vector<std::size_t> y;
      for (std::size_t r = start; r < end; ++r) {
        const auto src = emb.row(order[r]);
        std::copy(src.begin(), src.end(), x.row(r - start).begin());
        y.push_back(labels[order[r]]);
      }
      head.loss(x, y, &grad);
      adam_step(params, grad, state, adam);
      head.assign(params);
    }
  }
  return head;
}

ClassificationResult finetune_classify(const ClapModel& model, const FinetuneHead& head, const FeatureSet& test) {
  const Matrix emb = audio_embeddings(model, test);
  if (emb.cols() != head.input_dim()) throw Error(ErrorCode::DimensionMismatch, "head does not match model embedding size");
  ClassificationResult out;
  for (std::size_t i = 0; i < test.clips.size(); ++i) {
    const auto p = head.probabilities(emb.row(i));
    const std::size_t best = static_cast<std::size_t>(std::max_element(p.begin(), p.end()) - p.begin());
    out.predictions.push_back(Prediction{test.clips[i].record.clip_id, test.clips[i].record.emotion, head.classes[best], p[best]});
  }
  out.report = classification_report("finetune", out.predictions);
  out.report.metadata["classes"] = head.classes;
  return out;
}

}  // namespace affect
