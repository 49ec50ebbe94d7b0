#include <doctest.h>

#include <fstream>

#include "affect/dataset.hpp"
#include "affect/error.hpp"
#include "affect/synth.hpp"
#include "support.hpp"

using namespace affect;

namespace {

SynthSpec tiny_spec() {
  SynthSpec spec = SynthSpec::default_spec();
  for (auto& d : spec.datasets) d.clips_per_class = 2;
  spec.duration_s = 1.0;
  return spec;
}

}  // namespace

TEST_CASE("feature cache reuses matching entries") {
  testing::TempDir dir("cache");
  const auto summary = synth_corpus(tiny_spec(), dir.path() / "corpus");
  const auto records = parse_manifests({summary.manifest});
  const FeaturizerConfig cfg;
  const auto cache = dir.path() / "features.jsonl";

  const FeatureSet fresh = build_features(records, cfg);
  const FeatureSet first = build_features(records, cfg, cache);
  REQUIRE(std::filesystem::exists(cache));
  REQUIRE(first.clips.size() == fresh.clips.size());
  for (std::size_t i = 0; i < fresh.clips.size(); ++i) {
    CHECK(first.clips[i].audio_features == fresh.clips[i].audio_features);
    CHECK(first.clips[i].profile == fresh.clips[i].profile);
  }

  // Cached values are used verbatim once the audio is gone.
  for (const auto& r : records) std::filesystem::remove(r.audio_path);
  const FeatureSet second = build_features(records, cfg, cache);
  for (std::size_t i = 0; i < fresh.clips.size(); ++i) {
    CHECK(second.clips[i].audio_features == fresh.clips[i].audio_features);
    CHECK(second.clips[i].profile == fresh.clips[i].profile);
  }

  // A different featurizer ignores the cache and needs the audio.
  FeaturizerConfig other;
  other.n_mels = 16;
  CHECK(read_feature_cache(cache, other.hash()).empty());
  CHECK_THROWS_AS(build_features(records, other, cache), Error);
}

TEST_CASE("malformed cache lines are reported") {
  testing::TempDir dir("cache_bad");
  std::ofstream(dir.path() / "c.jsonl") << "{\"clip_id\": 1}\n";
  CHECK_THROWS_AS(read_feature_cache(dir.path() / "c.jsonl", "x"), Error);
  CHECK(read_feature_cache(dir.path() / "missing.jsonl", "x").empty());
}

TEST_CASE("training pairs follow the policy") {
  FeatureSet set = build_features(parse_manifest_text(""), FeaturizerConfig{});
  CHECK(set.clips.empty());
  const auto clips = generate_clips(tiny_spec());
  const FeaturizerConfig cfg;
  std::vector<ClipData> data;
  for (const auto& sc : clips) data.push_back(featurize_clip(sc.record, sc.audio, cfg));
  const auto all = make_training_pairs(data, PromptPolicy::parse("augment"), cfg);
  const auto cls = make_training_pairs(data, PromptPolicy::parse("class"), cfg);
  CHECK(cls.size() == data.size());
  CHECK(all.size() == 5 * data.size());
  for (const auto& p : cls) {
    CHECK(p.text_features == encode_text(p.text, cfg));
    CHECK(p.audio.size() == cfg.audio_dim());
  }
  FeatureSet fs{cfg.hash(), data};
  CHECK(fs.labels() == std::vector<std::string>{"anger", "happy", "neutral", "sad"});
  CHECK(fs.filter([](const ClipData& c) { return c.record.emotion == "sad"; }).clips.size() == 2);
}
