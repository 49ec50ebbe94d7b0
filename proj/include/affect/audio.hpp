#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace affect {

// Mono waveform with samples in [-1, 1].
struct AudioClip {
  std::string id;
  std::vector<double> samples;
  int sample_rate = 0;

  double duration_s() const {
    return sample_rate > 0 ? static_cast<double>(samples.size()) / sample_rate : 0.0;
  }
};

// Reads RIFF/WAVE with PCM16 or float32 payload (plain or extensible header).
// Multichannel audio is averaged to mono. Throws NotFound, UnsupportedFormat
// or EmptyAudio.
AudioClip load_wav(const std::filesystem::path& path);

// Parses an in-memory WAV image; `id` becomes the clip id.
AudioClip decode_wav(std::span<const std::uint8_t> bytes, std::string id);

enum class WavEncoding { Pcm16, Float32 };

std::vector<std::uint8_t> encode_wav(const AudioClip& clip, WavEncoding encoding = WavEncoding::Pcm16);

void write_wav(const AudioClip& clip, const std::filesystem::path& path,
               WavEncoding encoding = WavEncoding::Pcm16);

}  // namespace affect
