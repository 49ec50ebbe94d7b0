#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "affect/audio.hpp"
#include "affect/manifest.hpp"

namespace affect {

struct Range {
  double lo = 0.0;
  double hi = 0.0;
};

enum class SexMode { None, Male, Female, Mixed };

// Acoustic archetype of one emotion class: every clip is a train of
// harmonic tone bursts drawn from these ranges.
struct ClassArchetype {
  std::string emotion;
  Range f0_hz;
  Range amplitude;  // fundamental amplitude, linear
  Range bursts_per_second;
  Range burst_s;
  SexMode sex = SexMode::None;
};

struct DatasetSpec {
  std::string name;
  std::size_t clips_per_class = 50;
  std::vector<ClassArchetype> classes;
};

struct SynthSpec {
  std::vector<DatasetSpec> datasets;
  double duration_s = 2.0;
  int sample_rate = 16000;
  double test_fraction = 0.2;
  double min_gap_s = 0.06;
  double ramp_s = 0.005;
  std::uint64_t seed = 0;

  // Throws InvalidArgument on degenerate ranges or burst layouts that
  // cannot fit the clip.
  void validate() const;

  nlohmann::json to_json() const;
  static SynthSpec from_json(const nlohmann::json& j);

  // Four classes, 50 clips each, archetypes on opposite sides of the
  // prompt cutoffs.
  static SynthSpec default_spec();
  // Four classes, 100 clips each, separated by pitch band only; loudness,
  // burst rate and burst length vary within every class across the cutoffs.
  static SynthSpec varied_spec();
};

// Relative gains of the second and third harmonics (-6 dB, -12 dB).
inline constexpr double kSecondHarmonicGain = 0.50118723362727224;
inline constexpr double kThirdHarmonicGain = 0.25118864315095796;

// What each clip was generated with.
struct SynthTruth {
  std::string clip_id;
  double f0_hz = 0.0;
  double amplitude = 0.0;
  double intensity_db = 0.0;  // sustained-tone level at the default p_ref
  std::size_t burst_count = 0;
  double phonation_time_s = 0.0;
  double duration_s = 0.0;

  nlohmann::json to_json() const;
};

struct SynthClip {
  ClipRecord record;
  AudioClip audio;
  SynthTruth truth;
};

// In-memory generation; audio_path is "audio/<clip_id>.wav".
std::vector<SynthClip> generate_clips(const SynthSpec& spec);

struct SynthSummary {
  std::filesystem::path manifest;
  std::filesystem::path ground_truth;
  std::vector<ClipRecord> records;
};

// Writes <out>/audio/*.wav, <out>/manifest.jsonl and <out>/ground_truth.jsonl.
SynthSummary synth_corpus(const SynthSpec& spec, const std::filesystem::path& out_dir);

// Burst-train signal helper shared with tests: `bursts` lists (start_s,
// length_s) pairs.
AudioClip render_burst_train(const std::string& id, int sample_rate, double duration_s, double f0_hz, double amplitude,
                             const std::vector<std::pair<double, double>>& bursts, double ramp_s = 0.005);

}  // namespace affect
