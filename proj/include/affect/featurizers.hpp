#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "affect/acoustics.hpp"
#include "affect/audio.hpp"

namespace affect {

std::uint64_t fnv1a64(std::string_view bytes);
std::string hex64(std::uint64_t v);

// Frozen stand-ins for the audio and text encoders. Nothing in here is
// learned; only the projections on top of these vectors are trained.
struct FeaturizerConfig {
  std::size_t n_mels = 32;
  double frame_s = 0.025;
  double hop_s = 0.010;
  double log_floor = 1e-10;
  // Mel statistics use frames within this many dB of the loudest frame.
  double activity_range_db = 60.0;
  std::size_t text_dim = 48;
  double pitch_scale_hz = 500.0;
  double intensity_scale_db = 120.0;
  double rate_scale = 10.0;
  ProfileConfig profile;

  std::size_t audio_dim() const { return 2 * n_mels + 4; }

  nlohmann::json to_json() const;
  // Stable identifier of everything that shapes the feature vectors.
  std::string hash() const;
};

// [mel means (n_mels), mel stds (n_mels), pitch, intensity, speech rate,
// articulation rate], the last four scaled by the config constants.
std::vector<double> encode_audio(const AudioClip& clip, const AcousticProfile& profile,
                                 const FeaturizerConfig& cfg = {});

// Log-mel spectrogram, frames x n_mels. Exposed for tests.
std::vector<std::vector<double>> log_mel_spectrogram(const AudioClip& clip, const FeaturizerConfig& cfg = {});

// Signed feature hashing of space-separated tokens, L2-normalized. Throws
// EmptyText when nothing is left after normalization.
std::vector<double> encode_text(std::string_view text, std::size_t dim);
inline std::vector<double> encode_text(std::string_view text, const FeaturizerConfig& cfg = {}) {
  return encode_text(text, cfg.text_dim);
}

// Bucket and sign used for one token.
struct TokenSlot {
  std::size_t bucket;
  double sign;
};
TokenSlot token_slot(std::string_view token, std::size_t dim);

}  // namespace affect
