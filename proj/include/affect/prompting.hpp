#pragma once

#include <array>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "affect/acoustics.hpp"

namespace affect {

// Canonical order; augment_pairs emits pairs in this order.
enum class PromptKind { Class = 0, Pitch, Intensity, SpeechRate, ArticulationRate };

inline constexpr std::array<PromptKind, 5> kAllPromptKinds = {
    PromptKind::Class, PromptKind::Pitch, PromptKind::Intensity, PromptKind::SpeechRate,
    PromptKind::ArticulationRate};

std::string_view to_string(PromptKind kind);
// Accepts the CLI spellings: class, pitch, intensity, speech-rate, articulation-rate.
PromptKind parse_prompt_kind(std::string_view name);

enum class Sex { Male, Female };

std::string_view to_string(Sex sex);

struct Prompt {
  PromptKind kind = PromptKind::Class;
  std::string text;

  bool operator==(const Prompt&) const = default;
};

struct PromptPair {
  std::string clip_id;
  Prompt prompt;
};

class PromptPolicy {
 public:
  // Full augmentation: all five kinds.
  PromptPolicy();
  explicit PromptPolicy(std::vector<PromptKind> kinds, bool sex_aware_pitch = true);

  // "class" | "pitch" | "intensity" | "speech-rate" | "articulation-rate" |
  // "augment"; a comma-separated list selects several kinds.
  static PromptPolicy parse(std::string_view spec, bool sex_aware_pitch = true);

  bool enabled(PromptKind kind) const { return enabled_[static_cast<std::size_t>(kind)]; }
  bool sex_aware_pitch() const { return sex_aware_pitch_; }
  std::vector<PromptKind> kinds() const;
  // Canonical name, e.g. "augment" or "pitch".
  std::string name() const;

 private:
  std::array<bool, 5> enabled_{};
  bool sex_aware_pitch_ = true;
};

// The six canonical training policies: class, the four single acoustic
// prompts, and full augmentation.
std::vector<PromptPolicy> canonical_policies();

struct BinThresholds {
  double pitch_male_cutoff_hz = 132.5;
  double pitch_female_cutoff_hz = 210.0;
  double pitch_sex_boundary_hz = 180.0;
  double pitch_agnostic_cutoff_hz = 170.0;
  double intensity_cutoff_db = 60.0;
  double speech_rate_cutoff = 3.12;
  double articulation_rate_cutoff = 4.0;

  // Throws InvalidArgument unless all cutoffs are positive and
  // male < sex boundary < female.
  void validate() const;
};

// Every binning rule is "low iff value < cutoff".
std::string bin_pitch(std::optional<double> mean_pitch_hz, std::optional<Sex> sex, const BinThresholds& t = {});
std::string bin_intensity(double mean_intensity_db, const BinThresholds& t = {});
std::string bin_speech_rate(double rate, const BinThresholds& t = {});
std::string bin_articulation_rate(double rate, const BinThresholds& t = {});

// Lowercase, trimmed, single-space separated.
std::string normalize_text(std::string_view text);

Prompt render_prompt(PromptKind kind, const AcousticProfile& profile, std::string_view emotion,
                     std::optional<Sex> sex, const PromptPolicy& policy, const BinThresholds& t = {});

std::vector<PromptPair> augment_pairs(const std::string& clip_id, const AcousticProfile& profile,
                                      std::string_view emotion, std::optional<Sex> sex,
                                      const PromptPolicy& policy, const BinThresholds& t = {});

// Inverse of render_prompt. Text that matches no acoustic template is a
// CLASS prompt whose emotion is the whole text.
struct ParsedPrompt {
  PromptKind kind = PromptKind::Class;
  std::string bin_phrase;
  std::string emotion;
  std::optional<Sex> sex;  // set for sex-aware pitch bins

  bool operator==(const ParsedPrompt&) const = default;
};

ParsedPrompt parse_prompt(std::string_view text);

nlohmann::json pair_to_json(const PromptPair& pair);
PromptPair pair_from_json(const nlohmann::json& j);

}  // namespace affect
