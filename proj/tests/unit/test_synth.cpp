#include <doctest.h>

#include <fstream>
#include <sstream>

#include "affect/acoustics.hpp"
#include "affect/error.hpp"
#include "affect/synth.hpp"
#include "support.hpp"

using namespace affect;

namespace {

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

}  // namespace

TEST_CASE("generation is deterministic in the seed") {
  SynthSpec spec = SynthSpec::default_spec();
  spec.datasets[0].clips_per_class = 3;
  const auto a = generate_clips(spec), b = generate_clips(spec);
  REQUIRE(a.size() == 12);
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].audio.samples == b[i].audio.samples);
    CHECK(a[i].record == b[i].record);
  }
  spec.seed += 1;
  CHECK(generate_clips(spec)[0].audio.samples != a[0].audio.samples);
  CHECK(a[0].record.clip_id == "synth_anger_0000");
}

TEST_CASE("corpus files are byte identical across runs") {
  testing::TempDir dir("synth");
  SynthSpec spec = SynthSpec::default_spec();
  spec.datasets[0].clips_per_class = 2;
  const auto s1 = synth_corpus(spec, dir.path() / "a");
  const auto s2 = synth_corpus(spec, dir.path() / "b");
  CHECK(slurp(s1.manifest) == slurp(s2.manifest));
  CHECK(slurp(s1.ground_truth) == slurp(s2.ground_truth));
  for (const auto& r : s1.records)
    CHECK(slurp(dir.path() / "a" / r.audio_path) == slurp(dir.path() / "b" / r.audio_path));
  const auto parsed = parse_manifests({s1.manifest});
  REQUIRE(parsed.size() == s1.records.size());
  CHECK(load_wav(parsed[0].audio_path).samples.size() == 32000);
}

TEST_CASE("measured profiles agree with the generating parameters") {
  SynthSpec spec = SynthSpec::default_spec();
  spec.datasets[0].clips_per_class = 5;
  for (const auto& sc : generate_clips(spec)) {
    const AcousticProfile p = compute_profile(sc.audio);
    REQUIRE(p.mean_pitch_hz);
    CHECK(std::abs(*p.mean_pitch_hz - sc.truth.f0_hz) / sc.truth.f0_hz < 0.02);
    CHECK(p.syllable_count == sc.truth.burst_count);
    CHECK(std::abs(p.phonation_time_s - sc.truth.phonation_time_s) <= 0.01 * static_cast<double>(sc.truth.burst_count) + 1e-9);
  }
}

TEST_CASE("spec JSON round trip and validation") {
  const SynthSpec spec = SynthSpec::varied_spec();
  CHECK(SynthSpec::from_json(spec.to_json()).to_json() == spec.to_json());
  SynthSpec bad = SynthSpec::default_spec();
  bad.datasets[0].classes[0].f0_hz = {300.0, 200.0};
  CHECK_THROWS_AS(bad.validate(), Error);
  bad = SynthSpec::default_spec();
  bad.duration_s = 0.0;
  CHECK_THROWS_AS(bad.validate(), Error);
  CHECK_NOTHROW(SynthSpec::default_spec().validate());
}
