#include <doctest.h>

#include <cmath>

#include "affect/checkpoint.hpp"
#include "affect/error.hpp"
#include "affect/finetune.hpp"
#include "affect/protocols.hpp"
#include "affect/rng.hpp"
#include "affect/synth.hpp"
#include "support.hpp"

using namespace affect;

TEST_CASE("head loss gradient matches finite differences") {
  HeadConfig cfg;
  cfg.hidden1 = 7;
  cfg.hidden2 = 5;
  cfg.seed = 4;
  FinetuneHead h = FinetuneHead::initialize(6, {"a", "b", "c"}, cfg);
  CHECK(h.classes == std::vector<std::string>{"a", "b", "c"});
  CHECK(h.w1.rows() == 7);
  CHECK(h.w2.rows() == 5);
  CHECK(h.w3.rows() == 3);

  Rng rng(2);
  Matrix x(5, 6);
  for (std::size_t i = 0; i < 5; ++i)
    for (std::size_t j = 0; j < 6; ++j) x(i, j) = rng.normal();
  const std::vector<std::size_t> y = {0, 2, 1, 1, 0};
  std::vector<double> grad;
  h.loss(x, y, &grad);
  const auto base = h.flatten();
  REQUIRE(grad.size() == base.size());
  const double eps = 1e-6;
  double worst = 0.0;
  for (std::size_t k = 0; k < base.size(); ++k) {
    auto p = base, m = base;
    p[k] += eps;
    m[k] -= eps;
    FinetuneHead hp = h, hm = h;
    hp.assign(p);
    hm.assign(m);
    const double fd = (hp.loss(x, y) - hm.loss(x, y)) / (2 * eps);
    worst = std::max(worst, std::abs(fd - grad[k]) / std::max(1e-6, std::abs(fd) + std::abs(grad[k])));
  }
  CHECK(worst < 1e-4);
}

TEST_CASE("head parameters round trip through flatten") {
  FinetuneHead h = FinetuneHead::initialize(4, {"x", "y"}, HeadConfig{});
  CHECK(h.w1.rows() == 4);
  CHECK(h.w2.rows() == 2);
  auto f = h.flatten();
  CHECK(f.size() == h.parameter_count());
  for (auto& v : f) v += 0.5;
  h.assign(f);
  CHECK(h.flatten() == f);
  const std::vector<double> in = {0.1, 0.2, 0.3, 0.4};
  double sum = 0.0;
  for (double p : h.probabilities(in)) sum += p;
  CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("finetuning leaves the pretrained model untouched") {
  SynthSpec spec = SynthSpec::default_spec();
  spec.duration_s = 1.0;
  spec.datasets[0].clips_per_class = 10;
  const FeaturizerConfig fcfg;
  FeatureSet data{fcfg.hash(), {}};
  for (const auto& sc : generate_clips(spec)) data.clips.push_back(featurize_clip(sc.record, sc.audio, fcfg));

  ExperimentConfig cfg;
  cfg.train.epochs = 2;
  cfg.train.batch_size = 8;
  const ClapModel model = train_policy(data.clips, PromptPolicy::parse("class"), cfg).model;
  const std::string before = checkpoint_to_json(model).dump();

  HeadConfig hc;
  hc.epochs = 200;
  hc.batch_size = 8;
  hc.learning_rate = 1e-2;
  const FinetuneRunResult r = finetune_run(model, data, hc);
  CHECK(r.checkpoint_hash_before == r.checkpoint_hash_after);
  CHECK(r.checkpoint_hash_after == checkpoint_hash(model));
  CHECK(checkpoint_to_json(model).dump() == before);
  CHECK(r.report.protocol == "finetune");
  CHECK(r.report.total == 8);  // 2 test clips per class
  CHECK(r.report.accuracy >= 0.75);

  // Same seed, same head.
  CHECK(finetune_run(model, data, hc).head.flatten() == r.head.flatten());

  try {
    finetune_head(model, FeatureSet{data.featurizer_hash, {}}, hc);
    FAIL("expected InsufficientData");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::InsufficientData);
  }
}
