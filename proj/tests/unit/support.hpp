#pragma once

#include <cmath>
#include <filesystem>
#include <string>
#include <vector>

#include <unistd.h>

#include "affect/audio.hpp"
#include "affect/rng.hpp"
#include "affect/synth.hpp"

namespace testing {

inline affect::AudioClip sine(double f0, double amplitude, double seconds, int sr = 16000, std::string id = "sine") {
  affect::AudioClip c;
  c.id = std::move(id);
  c.sample_rate = sr;
  c.samples.resize(static_cast<std::size_t>(std::lround(seconds * sr)));
  for (std::size_t n = 0; n < c.samples.size(); ++n)
    c.samples[n] = amplitude * std::sin(2.0 * M_PI * f0 * static_cast<double>(n) / sr);
  return c;
}

inline affect::AudioClip silence(double seconds, int sr = 16000) {
  affect::AudioClip c;
  c.id = "silence";
  c.sample_rate = sr;
  c.samples.assign(static_cast<std::size_t>(std::lround(seconds * sr)), 0.0);
  return c;
}

inline affect::AudioClip concat(const affect::AudioClip& a, const affect::AudioClip& b) {
  affect::AudioClip c = a;
  c.samples.insert(c.samples.end(), b.samples.begin(), b.samples.end());
  return c;
}

// Five 100 ms harmonic bursts in 2 s, one every 400 ms.
inline affect::AudioClip five_bursts(double f0 = 220.0, double amplitude = 0.8 / (1.0 + affect::kSecondHarmonicGain + affect::kThirdHarmonicGain)) {
  std::vector<std::pair<double, double>> bursts;
  for (int i = 0; i < 5; ++i) bursts.emplace_back(0.15 + 0.4 * i, 0.1);
  return affect::render_burst_train("five", 16000, 2.0, f0, amplitude, bursts);
}

inline std::vector<double> random_vector(affect::Rng& rng, std::size_t n, double scale = 1.0) {
  std::vector<double> v(n);
  for (auto& x : v) x = scale * rng.uniform(-1.0, 1.0);
  return v;
}

class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    path_ = std::filesystem::temp_directory_path() / ("affect_test_" + tag + "_" + std::to_string(::getpid()));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

}  // namespace testing
