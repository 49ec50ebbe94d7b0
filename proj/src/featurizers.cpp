#include "affect/featurizers.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <memory>

#include <fftw3.h>
#include <json.hpp>

#include "affect/error.hpp"
#include "affect/prompting.hpp"

namespace affect {

namespace {

constexpr double kPi = 3.14159265358979323846;

double hz_to_mel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }
double mel_to_hz(double mel) { return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0); }

std::size_t next_pow2(std::size_t n) {
  std::size_t p = 1;
  while (p < n) p <<= 1;
  return p;
}

// Triangular filters over the rfft bins, HTK mel scale, 0 .. nyquist.
std::vector<std::vector<double>> mel_filterbank(std::size_t n_mels, std::size_t fft_size, int sample_rate) {
  const std::size_t bins = fft_size / 2 + 1;
  const double mel_hi = hz_to_mel(sample_rate / 2.0);
  std::vector<double> edges(n_mels + 2);
  for (std::size_t i = 0; i < edges.size(); ++i)
    edges[i] = mel_to_hz(mel_hi * static_cast<double>(i) / static_cast<double>(n_mels + 1));

  std::vector<std::vector<double>> bank(n_mels, std::vector<double>(bins, 0.0));
  for (std::size_t m = 0; m < n_mels; ++m) {
    const double lo = edges[m], mid = edges[m + 1], hi = edges[m + 2];
    for (std::size_t k = 0; k < bins; ++k) {
      const double f = static_cast<double>(k) * sample_rate / static_cast<double>(fft_size);
      if (f > lo && f < mid) bank[m][k] = (f - lo) / (mid - lo);
      else if (f >= mid && f < hi) bank[m][k] = (hi - f) / (hi - mid);
    }
  }
  return bank;
}

struct PlanDeleter {
  void operator()(fftw_plan_s* p) const { fftw_destroy_plan(p); }
};
struct FftwDeleter {
  void operator()(void* p) const { fftw_free(p); }
};

}  // namespace

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 14695981039346656037ULL;
  for (char c : bytes) {
    h ^= static_cast<std::uint8_t>(c);
    h *= 1099511628211ULL;
  }
  return h;
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

nlohmann::json FeaturizerConfig::to_json() const {
  const auto& pc = profile;
  return nlohmann::json{
      {"n_mels", n_mels},
      {"frame_s", frame_s},
      {"hop_s", hop_s},
      {"log_floor", log_floor},
      {"activity_range_db", activity_range_db},
      {"text_dim", text_dim},
      {"pitch_scale_hz", pitch_scale_hz},
      {"intensity_scale_db", intensity_scale_db},
      {"rate_scale", rate_scale},
      {"profile",
       {{"pitch",
         {{"frame_s", pc.pitch.frames.frame_s},
          {"hop_s", pc.pitch.frames.hop_s},
          {"f_min_hz", pc.pitch.f_min_hz},
          {"f_max_hz", pc.pitch.f_max_hz},
          {"voicing_threshold", pc.pitch.voicing_threshold}}},
        {"intensity",
         {{"frame_s", pc.intensity.frames.frame_s},
          {"hop_s", pc.intensity.frames.hop_s},
          {"window_s", pc.intensity.window_s},
          {"p_ref", pc.intensity.p_ref},
          {"floor_db", pc.intensity.floor_db}}},
        {"nuclei",
         {{"silence_threshold_db", pc.nuclei.silence_threshold_db},
          {"min_dip_db", pc.nuclei.min_dip_db},
          {"require_voicing", pc.nuclei.require_voicing},
          {"median_window", pc.nuclei.median_window},
          {"pool_frames", pc.nuclei.pool_frames}}}}},
  };
}

std::string FeaturizerConfig::hash() const { return hex64(fnv1a64(to_json().dump())); }

std::vector<std::vector<double>> log_mel_spectrogram(const AudioClip& clip, const FeaturizerConfig& cfg) {
  if (cfg.n_mels == 0) throw Error(ErrorCode::InvalidArgument, "n_mels must be positive");
  const FrameTiming timing = frame_timing(clip, FrameConfig{cfg.frame_s, cfg.hop_s});
  const std::size_t len = timing.frame_samples;
  const std::size_t fft_size = next_pow2(len);
  const std::size_t bins = fft_size / 2 + 1;
  const auto bank = mel_filterbank(cfg.n_mels, fft_size, clip.sample_rate);

  std::vector<double> window(len);
  for (std::size_t n = 0; n < len; ++n)
    window[n] = len > 1 ? 0.5 - 0.5 * std::cos(2.0 * kPi * static_cast<double>(n) / static_cast<double>(len - 1)) : 1.0;

  std::unique_ptr<double, FftwDeleter> in(fftw_alloc_real(fft_size));
  std::unique_ptr<fftw_complex, FftwDeleter> out(fftw_alloc_complex(bins));
  std::unique_ptr<fftw_plan_s, PlanDeleter> plan(
      fftw_plan_dft_r2c_1d(static_cast<int>(fft_size), in.get(), out.get(), FFTW_ESTIMATE));

  std::vector<std::vector<double>> spec(timing.count, std::vector<double>(cfg.n_mels));
  std::vector<double> power(bins);
  for (std::size_t f = 0; f < timing.count; ++f) {
    const std::size_t start = f * timing.hop_samples;
    std::fill(in.get(), in.get() + fft_size, 0.0);
    for (std::size_t n = 0; n < len; ++n) in.get()[n] = clip.samples[start + n] * window[n];
    fftw_execute(plan.get());
    for (std::size_t k = 0; k < bins; ++k) power[k] = out.get()[k][0] * out.get()[k][0] + out.get()[k][1] * out.get()[k][1];
    for (std::size_t m = 0; m < cfg.n_mels; ++m) {
      double e = 0.0;
      for (std::size_t k = 0; k < bins; ++k) e += bank[m][k] * power[k];
      spec[f][m] = std::log(std::max(e, cfg.log_floor));
    }
  }
  return spec;
}

std::vector<double> encode_audio(const AudioClip& clip, const AcousticProfile& profile, const FeaturizerConfig& cfg) {
  const auto spec = log_mel_spectrogram(clip, cfg);
  const FrameTiming timing = frame_timing(clip, FrameConfig{cfg.frame_s, cfg.hop_s});

  // Silent frames are left out of the statistics so trailing silence does
  // not drag the means towards the log floor.
  std::vector<double> energy(timing.count, 0.0);
  for (std::size_t f = 0; f < timing.count; ++f) {
    const std::size_t start = f * timing.hop_samples;
    for (std::size_t n = 0; n < timing.frame_samples; ++n) energy[f] += clip.samples[start + n] * clip.samples[start + n];
  }
  const double loudest = *std::max_element(energy.begin(), energy.end());
  const double gate = loudest * std::pow(10.0, -cfg.activity_range_db / 10.0);
  std::vector<std::size_t> active;
  for (std::size_t f = 0; f < timing.count; ++f)
    if (energy[f] > 0.0 && energy[f] >= gate) active.push_back(f);
  if (active.empty())
    for (std::size_t f = 0; f < timing.count; ++f) active.push_back(f);

  std::vector<double> v(cfg.audio_dim(), 0.0);
  const double n = static_cast<double>(active.size());
  for (std::size_t m = 0; m < cfg.n_mels; ++m) {
    // Shifted by the first value: exact for constant bands.
    const double shift = spec[active.front()][m];
    double mean = 0.0;
    for (std::size_t f : active) mean += spec[f][m] - shift;
    mean = shift + mean / n;
    double var = 0.0;
    for (std::size_t f : active) var += (spec[f][m] - mean) * (spec[f][m] - mean);
    v[m] = mean;
    v[cfg.n_mels + m] = std::sqrt(var / n);
  }
  const std::size_t base = 2 * cfg.n_mels;
  v[base + 0] = profile.mean_pitch_hz ? *profile.mean_pitch_hz / cfg.pitch_scale_hz : 0.0;
  v[base + 1] = profile.mean_intensity_db / cfg.intensity_scale_db;
  v[base + 2] = profile.speech_rate / cfg.rate_scale;
  v[base + 3] = profile.articulation_rate / cfg.rate_scale;
  for (double x : v)
    if (!std::isfinite(x)) throw Error(ErrorCode::InvalidArgument, "non-finite audio feature for '" + clip.id + "'");
  return v;
}

TokenSlot token_slot(std::string_view token, std::size_t dim) {
  const std::uint64_t h = fnv1a64(token);
  return TokenSlot{static_cast<std::size_t>(h % dim), (h >> 63) ? -1.0 : 1.0};
}

std::vector<double> encode_text(std::string_view text, std::size_t dim) {
  if (dim == 0) throw Error(ErrorCode::InvalidArgument, "text dimension must be positive");
  const std::string norm = normalize_text(text);
  if (norm.empty()) throw Error(ErrorCode::EmptyText, "text is empty after normalization");

  std::vector<double> v(dim, 0.0);
  std::size_t pos = 0;
  while (pos <= norm.size()) {
    std::size_t end = norm.find(' ', pos);
    if (end == std::string::npos) end = norm.size();
    const TokenSlot slot = token_slot(std::string_view(norm).substr(pos, end - pos), dim);
    v[slot.bucket] += slot.sign;
    pos = end + 1;
  }
  double norm2 = 0.0;
  for (double x : v) norm2 += x * x;
  if (norm2 == 0.0) {
    // Colliding opposite-signed tokens cancelled out; fall back to hashing
    // the whole string so the vector stays unit length.
    const TokenSlot slot = token_slot(norm, dim);
    v[slot.bucket] = slot.sign;
    norm2 = 1.0;
  }
  const double inv = 1.0 / std::sqrt(norm2);
  for (double& x : v) x *= inv;
  return v;
}

}  // namespace affect
