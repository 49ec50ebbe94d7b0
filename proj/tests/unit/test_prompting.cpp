#include <doctest.h>

#include <json.hpp>

#include "affect/error.hpp"
#include "affect/prompting.hpp"

using namespace affect;

namespace {

AcousticProfile profile(std::optional<double> pitch, double db, double sr, double ar) {
  AcousticProfile p;
  p.mean_pitch_hz = pitch;
  p.mean_intensity_db = db;
  p.speech_rate = sr;
  p.articulation_rate = ar;
  p.duration_s = 2.0;
  return p;
}

}  // namespace

TEST_CASE("pitch bins") {
  CHECK(bin_pitch(120.0, Sex::Male) == "low male pitch");
  CHECK(bin_pitch(150.0, Sex::Male) == "high male pitch");
  CHECK(bin_pitch(200.0, Sex::Female) == "low female pitch");
  CHECK(bin_pitch(250.0, Sex::Female) == "high female pitch");
  CHECK(bin_pitch(170.0, std::nullopt) == "high pitch");
  CHECK(bin_pitch(169.0, std::nullopt) == "low pitch");
  // Known sex uses only that sex's cutoff.
  CHECK(bin_pitch(190.0, Sex::Male) == "high male pitch");
  CHECK(bin_pitch(150.0, Sex::Female) == "low female pitch");
  try {
    bin_pitch(std::nullopt, Sex::Male);
    FAIL("expected MissingPitch");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::MissingPitch);
  }
}

TEST_CASE("intensity and rate bins") {
  CHECK(bin_intensity(55.0) == "low intensity");
  CHECK(bin_intensity(75.0) == "high intensity");
  CHECK(bin_intensity(60.0) == "high intensity");
  CHECK(bin_speech_rate(3.5) == "high speech rate");
  CHECK(bin_speech_rate(0.0) == "low speech rate");
  CHECK(bin_speech_rate(3.12) == "high speech rate");
  CHECK(bin_articulation_rate(10.0) == "high articulation rate");
  CHECK(bin_articulation_rate(3.9) == "low articulation rate");
  CHECK(bin_articulation_rate(4.0) == "high articulation rate");
}

TEST_CASE("binning is monotone") {
  for (std::optional<Sex> sex : {std::optional<Sex>{}, std::optional<Sex>{Sex::Male}, std::optional<Sex>{Sex::Female}}) {
    bool high = false;
    for (double f = 50.0; f < 400.0; f += 0.25) {
      const bool now = bin_pitch(f, sex).rfind("high", 0) == 0;
      CHECK_FALSE((high && !now));
      high = now;
    }
  }
  bool high = false;
  for (double v = 0.0; v < 120.0; v += 0.125) {
    const bool now = bin_intensity(v) == "high intensity";
    CHECK_FALSE((high && !now));
    high = now;
  }
  high = false;
  for (double v = 0.0; v < 12.0; v += 0.01) {
    const bool now = bin_speech_rate(v) == "high speech rate";
    CHECK_FALSE((high && !now));
    high = now;
  }
}

TEST_CASE("custom thresholds are honoured and validated") {
  BinThresholds t;
  t.intensity_cutoff_db = 70.0;
  CHECK(bin_intensity(65.0, t) == "low intensity");
  t.validate();
  BinThresholds bad;
  bad.pitch_male_cutoff_hz = 200.0;
  CHECK_THROWS_AS(bad.validate(), Error);
  BinThresholds neg;
  neg.speech_rate_cutoff = -1.0;
  CHECK_THROWS_AS(neg.validate(), Error);
}

TEST_CASE("render prompts") {
  const PromptPolicy all;
  const AcousticProfile p = profile(150.0, 70.0, 3.5, 10.0);
  CHECK(render_prompt(PromptKind::Pitch, p, "anger", Sex::Male, all).text == "high male pitch anger");
  CHECK(render_prompt(PromptKind::Class, p, "anger", std::nullopt, all).text == "anger");
  CHECK(render_prompt(PromptKind::Intensity, p, "sad", std::nullopt, all).text == "high intensity sad");
  CHECK(render_prompt(PromptKind::SpeechRate, p, "  Anger ", std::nullopt, all).text == "high speech rate anger");
  CHECK(render_prompt(PromptKind::Pitch, p, "anger", std::nullopt, all).text == "low pitch anger");

  const PromptPolicy blind({PromptKind::Pitch}, false);
  CHECK(render_prompt(PromptKind::Pitch, p, "anger", Sex::Male, blind).text == "low pitch anger");

  const PromptPolicy only_class({PromptKind::Class});
  CHECK_THROWS_AS(render_prompt(PromptKind::Pitch, p, "anger", std::nullopt, only_class), Error);
  try {
    render_prompt(PromptKind::Pitch, profile(std::nullopt, 70, 1, 1), "anger", std::nullopt, all);
    FAIL("expected MissingPitch");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::MissingPitch);
  }
}

TEST_CASE("augmentation") {
  const PromptPolicy all;
  const auto voiced = augment_pairs("c", profile(150.0, 70.0, 3.5, 10.0), "anger", Sex::Female, all);
  REQUIRE(voiced.size() == 5);
  const std::vector<std::string> expected = {"anger", "low female pitch anger", "high intensity anger",
                                             "high speech rate anger", "high articulation rate anger"};
  for (std::size_t i = 0; i < 5; ++i) {
    CHECK(voiced[i].clip_id == "c");
    CHECK(voiced[i].prompt.kind == kAllPromptKinds[i]);
    CHECK(voiced[i].prompt.text == expected[i]);
  }
  const auto unvoiced = augment_pairs("c", profile(std::nullopt, 50.0, 0.0, 0.0), "sad", std::nullopt, all);
  REQUIRE(unvoiced.size() == 4);
  for (const auto& p : unvoiced) CHECK(p.prompt.kind != PromptKind::Pitch);

  const auto single = augment_pairs("c", profile(150.0, 70.0, 3.5, 10.0), "anger", std::nullopt, PromptPolicy({PromptKind::Class}));
  REQUIRE(single.size() == 1);
  CHECK(single[0].prompt.text == "anger");
}

TEST_CASE("policies") {
  CHECK(PromptPolicy::parse("augment").kinds().size() == 5);
  CHECK(PromptPolicy::parse("augment").name() == "augment");
  CHECK(PromptPolicy::parse("speech-rate").kinds() == std::vector<PromptKind>{PromptKind::SpeechRate});
  CHECK(PromptPolicy::parse("pitch,class").kinds() == std::vector<PromptKind>{PromptKind::Class, PromptKind::Pitch});
  CHECK_THROWS_AS(PromptPolicy::parse("loudness"), Error);
  CHECK_THROWS_AS(PromptPolicy(std::vector<PromptKind>{}), Error);
  const auto canon = canonical_policies();
  REQUIRE(canon.size() == 6);
  CHECK(canon.back().name() == "augment");
  for (PromptKind k : kAllPromptKinds) CHECK(parse_prompt_kind(to_string(k)) == k);
}

TEST_CASE("parse inverts render for every kind, bin and sex") {
  const PromptPolicy all;
  const std::vector<AcousticProfile> profiles = {profile(100.0, 40.0, 1.0, 2.0), profile(300.0, 80.0, 5.0, 9.0),
                                                 profile(190.0, 60.0, 3.12, 4.0)};
  for (const auto& p : profiles)
    for (std::optional<Sex> sex : {std::optional<Sex>{}, std::optional<Sex>{Sex::Male}, std::optional<Sex>{Sex::Female}})
      for (const char* emotion : {"anger", "sad", "calm", "pleasant surprise"})
        for (PromptKind kind : kAllPromptKinds) {
          const Prompt prompt = render_prompt(kind, p, emotion, sex, all);
          const ParsedPrompt parsed = parse_prompt(prompt.text);
          CHECK(parsed.kind == kind);
          CHECK(parsed.emotion == emotion);
          if (kind != PromptKind::Class) {
            CHECK(parsed.bin_phrase + " " + parsed.emotion == prompt.text);
            CHECK(parsed.sex == (kind == PromptKind::Pitch ? sex : std::nullopt));
          }
        }
}

TEST_CASE("text normalization") {
  CHECK(normalize_text("  High\tPITCH   Anger \n") == "high pitch anger");
  CHECK(normalize_text("   ").empty());
}

TEST_CASE("pair JSON") {
  const PromptPair p{"clip7", Prompt{PromptKind::ArticulationRate, "low articulation rate sad"}};
  const auto j = pair_to_json(p);
  CHECK(j.at("kind") == "articulation-rate");
  const PromptPair q = pair_from_json(j);
  CHECK(q.clip_id == p.clip_id);
  CHECK(q.prompt == p.prompt);
}
