#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "affect/audio.hpp"

namespace affect {

// Analysis frame geometry. Frame i covers samples [i*hop, i*hop + frame).
struct FrameConfig {
  double frame_s = 0.040;
  double hop_s = 0.010;
};

struct FrameTiming {
  int sample_rate = 0;
  std::size_t frame_samples = 0;
  std::size_t hop_samples = 0;
  std::size_t count = 0;

  double frame_s() const { return static_cast<double>(frame_samples) / sample_rate; }
  double hop_s() const { return static_cast<double>(hop_samples) / sample_rate; }
  bool operator==(const FrameTiming&) const = default;
};

// Throws ClipTooShort when the clip cannot hold a single frame.
FrameTiming frame_timing(const AudioClip& clip, const FrameConfig& cfg);

struct PitchConfig {
  FrameConfig frames;
  double f_min_hz = 65.0;
  double f_max_hz = 500.0;
  double voicing_threshold = 0.45;
};

struct IntensityConfig {
  FrameConfig frames;
  // RMS is taken over a window of this length centred in each analysis
  // frame. Non-positive or >= frame length means the whole frame.
  double window_s = 0.008;
  double p_ref = 2e-5;
  double floor_db = 0.0;
};

struct NucleiConfig {
  double silence_threshold_db = 25.0;
  double min_dip_db = 2.0;
  bool require_voicing = true;
  std::size_t median_window = 5;
  // Consecutive frames whose power is pooled before median smoothing, so
  // peaks are picked on a contour free of pitch-period ripple.
  std::size_t pool_frames = 4;
};

struct ProfileConfig {
  PitchConfig pitch;
  IntensityConfig intensity;
  NucleiConfig nuclei;
};

// Per-frame f0 estimates; std::nullopt marks unvoiced frames.
struct PitchTrack {
  FrameTiming timing;
  std::vector<std::optional<double>> f0_hz;

  std::size_t voiced_count() const;
};

struct IntensityTrack {
  FrameTiming timing;
  std::vector<double> db;
  double floor_db = 0.0;
};

struct AcousticProfile {
  std::optional<double> mean_pitch_hz;
  double mean_intensity_db = 0.0;
  double speech_rate = 0.0;
  double articulation_rate = 0.0;
  std::size_t syllable_count = 0;
  double duration_s = 0.0;
  double phonation_time_s = 0.0;
  double voiced_fraction = 0.0;

  bool operator==(const AcousticProfile&) const = default;
};

struct NucleiResult {
  std::size_t syllable_count = 0;
  double phonation_time_s = 0.0;
  std::vector<std::size_t> peak_frames;
  std::vector<bool> sounding;
};

// Normalized-autocorrelation pitch detector.
PitchTrack pitch_track(const AudioClip& clip, const PitchConfig& cfg = {});

// 20*log10(rms / p_ref) per frame, floored at cfg.floor_db.
IntensityTrack intensity_contour(const AudioClip& clip, const IntensityConfig& cfg = {});

// Intensity-peak syllable nuclei with dip and voicing checks. Throws
// MismatchedTracks when the two tracks use different framing.
NucleiResult syllable_nuclei(const IntensityTrack& intensity, const PitchTrack& pitch,
                             const NucleiConfig& cfg = {});

AcousticProfile compute_profile(const AudioClip& clip, const ProfileConfig& cfg = {});

// JSONL record: clip_id plus every profile field (absent pitch as null).
nlohmann::json profile_to_json(const std::string& clip_id, const AcousticProfile& profile);
AcousticProfile profile_from_json(const nlohmann::json& j);

}  // namespace affect
