#include <doctest.h>

#include <json.hpp>

#include "affect/acoustics.hpp"
#include "affect/error.hpp"
#include "support.hpp"

using namespace affect;

namespace {

double voiced_mean(const PitchTrack& t) {
  double s = 0.0;
  std::size_t n = 0;
  for (const auto& f : t.f0_hz)
    if (f) {
      s += *f;
      ++n;
    }
  return n ? s / static_cast<double>(n) : 0.0;
}

ErrorCode code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("no error thrown");
  return ErrorCode::IoError;
}

}  // namespace

TEST_CASE("frame timing covers the clip") {
  for (double seconds : {0.04, 0.0456, 0.5, 1.2345, 2.0}) {
    const AudioClip c = testing::silence(seconds);
    const FrameTiming t = frame_timing(c, FrameConfig{});
    const double covered = static_cast<double>(t.count - 1) * t.hop_s() + t.frame_s();
    CHECK(covered >= c.duration_s() - t.hop_s() - 1e-12);
    CHECK(covered <= c.duration_s() + 1e-12);
  }
}

TEST_CASE("clips shorter than one frame are ClipTooShort") {
  const AudioClip c = testing::silence(0.03);
  CHECK(code_of([&] { pitch_track(c); }) == ErrorCode::ClipTooShort);
  CHECK(code_of([&] { intensity_contour(c); }) == ErrorCode::ClipTooShort);
  CHECK(code_of([&] { compute_profile(c); }) == ErrorCode::ClipTooShort);
}

TEST_CASE("pitch of a 220 Hz sine") {
  const PitchTrack t = pitch_track(testing::sine(220.0, 0.5, 2.0));
  CHECK(t.voiced_count() == t.f0_hz.size());
  for (const auto& f : t.f0_hz) {
    REQUIRE(f);
    CHECK(std::abs(*f - 220.0) / 220.0 < 0.02);
  }
}

TEST_CASE("silence has no voiced frames") {
  const PitchTrack t = pitch_track(testing::silence(2.0));
  CHECK(t.voiced_count() == 0);
}

TEST_CASE("two-tone mean pitch") {
  const AudioClip c = testing::concat(testing::sine(110.0, 0.5, 1.0), testing::sine(330.0, 0.5, 1.0));
  CHECK(std::abs(voiced_mean(pitch_track(c)) - 220.0) / 220.0 < 0.05);
}

TEST_CASE("pure tones across the search range stay within 2%") {
  for (double f0 = 80.0; f0 <= 400.0; f0 += 16.0) {
    for (double amp : {0.1, 0.5, 1.0}) {
      const AcousticProfile p = compute_profile(testing::sine(f0, amp, 0.5));
      REQUIRE(p.mean_pitch_hz);
      CHECK_MESSAGE(std::abs(*p.mean_pitch_hz - f0) / f0 < 0.02, "f0=" << f0);
    }
  }
}

TEST_CASE("voiced pitch values lie in the search range") {
  const PitchConfig cfg{FrameConfig{}, 100.0, 300.0, 0.45};
  for (double f0 : {70.0, 100.0, 180.0, 300.0, 450.0}) {
    const PitchTrack t = pitch_track(testing::sine(f0, 0.5, 0.5), cfg);
    for (const auto& f : t.f0_hz)
      if (f) CHECK((*f >= 100.0 && *f <= 300.0));
  }
}

TEST_CASE("intensity calibration") {
  const IntensityTrack full = intensity_contour(testing::sine(1000.0, 1.0, 1.0));
  const double expected = 20.0 * std::log10(std::sqrt(0.5) / 2e-5);
  CHECK(expected == doctest::Approx(90.97).epsilon(1e-4));
  for (double v : full.db) CHECK(std::abs(v - expected) < 0.1);

  const IntensityTrack tenth = intensity_contour(testing::sine(1000.0, 0.1, 1.0));
  for (std::size_t i = 0; i < full.db.size(); ++i) CHECK(full.db[i] - tenth.db[i] == doctest::Approx(20.0).epsilon(1e-9));
}

TEST_CASE("silence sits at the floor") {
  IntensityConfig cfg;
  cfg.floor_db = 5.0;
  for (double v : intensity_contour(testing::silence(1.0), cfg).db) CHECK(v == 5.0);
}

TEST_CASE("whole-frame intensity window") {
  IntensityConfig cfg;
  cfg.window_s = 0.0;
  const IntensityTrack t = intensity_contour(testing::sine(1000.0, 1.0, 0.5), cfg);
  for (double v : t.db) CHECK(std::abs(v - 90.97) < 0.1);
}

TEST_CASE("scaling shifts sounding intensity by 20 log10 g and keeps pitch") {
  const AudioClip base = testing::five_bursts(180.0);
  const IntensityTrack bi = intensity_contour(base);
  const PitchTrack bp = pitch_track(base);
  const NucleiResult bn = syllable_nuclei(bi, bp);
  for (double g : {0.9, 0.5, 0.1, 0.01}) {
    AudioClip scaled = base;
    for (auto& s : scaled.samples) s *= g;
    const IntensityTrack si = intensity_contour(scaled);
    const PitchTrack sp = pitch_track(scaled);
    for (std::size_t i = 0; i < bi.db.size(); ++i) {
      if (!bn.sounding[i]) continue;
      CHECK(si.db[i] - bi.db[i] == doctest::Approx(20.0 * std::log10(g)).epsilon(1e-9));
    }
    for (std::size_t i = 0; i < bp.f0_hz.size(); ++i)
      if (bp.f0_hz[i] && sp.f0_hz[i]) CHECK(std::abs(*sp.f0_hz[i] - *bp.f0_hz[i]) / *bp.f0_hz[i] < 0.005);
  }
}

TEST_CASE("five-burst oracle") {
  const AudioClip c = testing::five_bursts();
  const NucleiResult n = syllable_nuclei(intensity_contour(c), pitch_track(c));
  CHECK(n.syllable_count == 5);
  CHECK(std::abs(n.phonation_time_s - 0.5) <= 5 * 0.01 + 1e-12);

  const AcousticProfile p = compute_profile(c);
  CHECK(p.speech_rate == 2.5);
  CHECK(std::abs(p.articulation_rate - 10.0) < 1.0);
  REQUIRE(p.mean_pitch_hz);
  CHECK(std::abs(*p.mean_pitch_hz - 220.0) / 220.0 < 0.02);
}

TEST_CASE("silence profile") {
  const AcousticProfile p = compute_profile(testing::silence(1.0));
  CHECK_FALSE(p.mean_pitch_hz);
  CHECK(p.syllable_count == 0);
  CHECK(p.phonation_time_s == 0.0);
  CHECK(p.speech_rate == 0.0);
  CHECK(p.articulation_rate == 0.0);
  CHECK(p.voiced_fraction == 0.0);
}

TEST_CASE("continuous tone is a single nucleus") {
  const AudioClip c = render_burst_train("tone", 16000, 2.0, 200.0, 0.3, {{0.0, 2.0}});
  const AcousticProfile p = compute_profile(c);
  CHECK(p.syllable_count == 1);
  CHECK(std::abs(p.phonation_time_s - 2.0) < 0.05);
  CHECK(p.speech_rate == 0.5);
  CHECK(std::abs(p.articulation_rate - 0.5) < 0.02);
}

TEST_CASE("shallow dips do not split nuclei") {
  // 1 dB amplitude dip in the middle of a tone: one nucleus.
  AudioClip c = render_burst_train("dip", 16000, 1.0, 200.0, 0.3, {{0.1, 0.8}});
  const double g = std::pow(10.0, -1.0 / 20.0);
  for (std::size_t n = 7200; n < 8800; ++n) c.samples[n] *= g;
  CHECK(compute_profile(c).syllable_count == 1);

  // 10 dB dip: two nuclei.
  AudioClip d = render_burst_train("dip", 16000, 1.0, 200.0, 0.3, {{0.1, 0.8}});
  for (std::size_t n = 7200; n < 8800; ++n) d.samples[n] *= 0.316;
  CHECK(compute_profile(d).syllable_count == 2);
}

TEST_CASE("unvoiced bursts are not syllables when voicing is required") {
  // Noise bursts: loud but aperiodic.
  AudioClip c = testing::silence(1.0);
  Rng rng(3);
  for (int b = 0; b < 3; ++b)
    for (std::size_t n = 0; n < 1600; ++n) c.samples[static_cast<std::size_t>(b) * 5000 + 1000 + n] = rng.uniform(-0.5, 0.5);
  ProfileConfig cfg;
  CHECK(compute_profile(c, cfg).syllable_count == 0);
  cfg.nuclei.require_voicing = false;
  CHECK(compute_profile(c, cfg).syllable_count == 3);
}

TEST_CASE("mismatched tracks") {
  const AudioClip a = testing::sine(200.0, 0.5, 1.0);
  const AudioClip b = testing::sine(200.0, 0.5, 1.5);
  CHECK(code_of([&] { syllable_nuclei(intensity_contour(a), pitch_track(b)); }) == ErrorCode::MismatchedTracks);
  IntensityConfig ic;
  ic.frames.hop_s = 0.02;
  CHECK(code_of([&] { syllable_nuclei(intensity_contour(a, ic), pitch_track(a)); }) == ErrorCode::MismatchedTracks);
}

TEST_CASE("profile invariants hold on synthetic clips") {
  SynthSpec spec = SynthSpec::default_spec();
  spec.datasets[0].clips_per_class = 5;
  for (const auto& sc : generate_clips(spec)) {
    const AcousticProfile p = compute_profile(sc.audio);
    CHECK(p.phonation_time_s >= 0.0);
    CHECK(p.phonation_time_s <= p.duration_s);
    CHECK(p.speech_rate == static_cast<double>(p.syllable_count) / p.duration_s);
    if (p.syllable_count > 0) {
      CHECK(p.articulation_rate == static_cast<double>(p.syllable_count) / p.phonation_time_s);
      CHECK(p.articulation_rate >= p.speech_rate);
    }
    CHECK((p.voiced_fraction >= 0.0 && p.voiced_fraction <= 1.0));
    CHECK(compute_profile(sc.audio) == p);
  }
}

TEST_CASE("profile JSON round trip with absent pitch") {
  AcousticProfile p = compute_profile(testing::five_bursts());
  const auto j = profile_to_json("c1", p);
  CHECK(j.at("clip_id") == "c1");
  CHECK(profile_from_json(j) == p);

  const AcousticProfile s = compute_profile(testing::silence(0.5));
  const auto js = profile_to_json("c2", s);
  CHECK(js.at("mean_pitch_hz").is_null());
  CHECK(profile_from_json(js) == s);
}
