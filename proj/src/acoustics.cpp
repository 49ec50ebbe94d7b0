#include "affect/acoustics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <json.hpp>

#include "affect/error.hpp"

namespace affect {

namespace {

std::size_t seconds_to_samples(double s, int rate) {
  return static_cast<std::size_t>(std::lround(s * rate));
}

std::vector<double> median_smooth(const std::vector<double>& v, std::size_t window) {
  if (window <= 1 || v.empty()) return v;
  const std::size_t half = window / 2;
  std::vector<double> out(v.size());
  std::vector<double> buf;
  buf.reserve(window);
  for (std::size_t i = 0; i < v.size(); ++i) {
    const std::size_t lo = i >= half ? i - half : 0;
    const std::size_t hi = std::min(v.size(), i + half + 1);
    buf.assign(v.begin() + static_cast<std::ptrdiff_t>(lo), v.begin() + static_cast<std::ptrdiff_t>(hi));
    auto mid = buf.begin() + static_cast<std::ptrdiff_t>(buf.size() / 2);
    std::nth_element(buf.begin(), mid, buf.end());
    if (buf.size() % 2 == 0) {
      const double upper = *mid;
      const double lower = *std::max_element(buf.begin(), mid);
      out[i] = 0.5 * (lower + upper);
    } else {
      out[i] = *mid;
    }
  }
  return out;
}

// Local maxima of `s`, with runs of equal values treated as one plateau and
// the track edges treated as -inf. Returns the plateau centre.
// Mean power over frames [i - (n-1)/2, i + n/2], back in dB.
std::vector<double> pool_power(const std::vector<double>& db, std::size_t n) {
  if (n <= 1) return db;
  const std::ptrdiff_t size = static_cast<std::ptrdiff_t>(db.size());
  const std::ptrdiff_t before = static_cast<std::ptrdiff_t>((n - 1) / 2), after = static_cast<std::ptrdiff_t>(n / 2);
  std::vector<double> out(db.size());
  for (std::ptrdiff_t i = 0; i < size; ++i) {
    const std::ptrdiff_t lo = std::max<std::ptrdiff_t>(0, i - before), hi = std::min(size - 1, i + after);
    double power = 0.0;
    for (std::ptrdiff_t j = lo; j <= hi; ++j) power += std::pow(10.0, db[static_cast<std::size_t>(j)] / 10.0);
    out[static_cast<std::size_t>(i)] = 10.0 * std::log10(power / static_cast<double>(hi - lo + 1));
  }
  return out;
}

std::vector<std::size_t> plateau_maxima(const std::vector<double>& s) {
  std::vector<std::size_t> peaks;
  constexpr double kNegInf = -std::numeric_limits<double>::infinity();
  std::size_t i = 0;
  while (i < s.size()) {
    std::size_t j = i + 1;
    while (j < s.size() && s[j] == s[i]) ++j;
    const double left = i > 0 ? s[i - 1] : kNegInf;
    const double right = j < s.size() ? s[j] : kNegInf;
    if (s[i] > left && s[i] > right) peaks.push_back((i + j - 1) / 2);
    i = j;
  }
  return peaks;
}

}  // namespace

std::size_t PitchTrack::voiced_count() const {
  return static_cast<std::size_t>(std::count_if(f0_hz.begin(), f0_hz.end(), [](const auto& f) { return f.has_value(); }));
}

FrameTiming frame_timing(const AudioClip& clip, const FrameConfig& cfg) {
  if (clip.sample_rate <= 0) throw Error(ErrorCode::InvalidArgument, "sample rate must be positive");
  if (!(cfg.frame_s > 0.0) || !(cfg.hop_s > 0.0))
    throw Error(ErrorCode::InvalidArgument, "frame and hop durations must be positive");
  FrameTiming t;
  t.sample_rate = clip.sample_rate;
  t.frame_samples = std::max<std::size_t>(1, seconds_to_samples(cfg.frame_s, clip.sample_rate));
  t.hop_samples = std::max<std::size_t>(1, seconds_to_samples(cfg.hop_s, clip.sample_rate));
  if (clip.samples.size() < t.frame_samples)
    throw Error(ErrorCode::ClipTooShort, "clip '" + clip.id + "' is shorter than one analysis frame");
  t.count = 1 + (clip.samples.size() - t.frame_samples) / t.hop_samples;
  return t;
}

PitchTrack pitch_track(const AudioClip& clip, const PitchConfig& cfg) {
  const double nyquist = clip.sample_rate / 2.0;
  if (!(cfg.f_min_hz > 0.0) || !(cfg.f_min_hz < cfg.f_max_hz) || !(cfg.f_max_hz < nyquist))
    throw Error(ErrorCode::InvalidArgument, "pitch search range must satisfy 0 < f_min < f_max < sample_rate/2");

  PitchTrack track;
  track.timing = frame_timing(clip, cfg.frames);
  const std::size_t len = track.timing.frame_samples;
  const auto lag_min = std::max<std::size_t>(2, static_cast<std::size_t>(std::floor(clip.sample_rate / cfg.f_max_hz)));
  const auto lag_max = static_cast<std::size_t>(std::ceil(clip.sample_rate / cfg.f_min_hz));
  if (lag_max + 2 >= len)
    throw Error(ErrorCode::InvalidArgument, "analysis frame too short for the lowest searched pitch");

  track.f0_hz.resize(track.timing.count);
  std::vector<double> x(len);
  std::vector<double> energy(len + 1);
  std::vector<double> r(lag_max + 2, 0.0);

  for (std::size_t f = 0; f < track.timing.count; ++f) {
    const std::size_t start = f * track.timing.hop_samples;
    double mean = 0.0;
    for (std::size_t n = 0; n < len; ++n) mean += clip.samples[start + n];
    mean /= static_cast<double>(len);
    energy[0] = 0.0;
    for (std::size_t n = 0; n < len; ++n) {
      x[n] = clip.samples[start + n] - mean;
      energy[n + 1] = energy[n] + x[n] * x[n];
    }
    const double total = energy[len];
    if (!(total > 0.0)) continue;

    for (std::size_t lag = lag_min - 1; lag <= lag_max + 1; ++lag) {
      const double e0 = energy[len - lag];
      const double e1 = total - energy[lag];
      const double denom = e0 * e1;
      if (denom <= 1e-12 * total * total) {
        r[lag] = 0.0;
        continue;
      }
      double acc = 0.0;
      for (std::size_t n = 0; n + lag < len; ++n) acc += x[n] * x[n + lag];
      r[lag] = acc / std::sqrt(denom);
    }

    double best = -1.0;
    for (std::size_t lag = lag_min; lag <= lag_max; ++lag)
      if (r[lag] >= r[lag - 1] && r[lag] > r[lag + 1]) best = std::max(best, r[lag]);
    if (best < cfg.voicing_threshold) continue;

    // Smallest lag whose peak is close to the best one avoids sub-octave picks.
    std::size_t chosen = 0;
    for (std::size_t lag = lag_min; lag <= lag_max; ++lag) {
      if (r[lag] >= r[lag - 1] && r[lag] > r[lag + 1] && r[lag] >= 0.95 * best) {
        chosen = lag;
        break;
      }
    }
    const double a = r[chosen - 1], b = r[chosen], c = r[chosen + 1];
    const double curvature = a - 2.0 * b + c;
    const double shift = curvature < 0.0 ? std::clamp(0.5 * (a - c) / curvature, -0.5, 0.5) : 0.0;
    const double f0 = clip.sample_rate / (static_cast<double>(chosen) + shift);
    track.f0_hz[f] = std::clamp(f0, cfg.f_min_hz, cfg.f_max_hz);
  }
  return track;
}

IntensityTrack intensity_contour(const AudioClip& clip, const IntensityConfig& cfg) {
  if (!(cfg.p_ref > 0.0)) throw Error(ErrorCode::InvalidArgument, "p_ref must be positive");
  IntensityTrack track;
  track.timing = frame_timing(clip, cfg.frames);
  track.floor_db = cfg.floor_db;
  const std::size_t len = track.timing.frame_samples;
  std::size_t window = cfg.window_s > 0.0 ? seconds_to_samples(cfg.window_s, clip.sample_rate) : len;
  window = std::clamp<std::size_t>(window, 1, len);
  const std::size_t offset = (len - window) / 2;

  track.db.resize(track.timing.count);
  for (std::size_t f = 0; f < track.timing.count; ++f) {
    const std::size_t start = f * track.timing.hop_samples + offset;
    double power = 0.0;
    for (std::size_t n = 0; n < window; ++n) power += clip.samples[start + n] * clip.samples[start + n];
    power /= static_cast<double>(window);
    if (power > 0.0) {
      const double db = 10.0 * std::log10(power) - 20.0 * std::log10(cfg.p_ref);
      track.db[f] = std::max(db, cfg.floor_db);
    } else {
      track.db[f] = cfg.floor_db;
    }
  }
  return track;
}

NucleiResult syllable_nuclei(const IntensityTrack& intensity, const PitchTrack& pitch, const NucleiConfig& cfg) {
  if (intensity.db.size() != pitch.f0_hz.size() ||
      intensity.timing.hop_samples != pitch.timing.hop_samples ||
      intensity.timing.sample_rate != pitch.timing.sample_rate)
    throw Error(ErrorCode::MismatchedTracks, "intensity and pitch tracks use different framing");

  NucleiResult out;
  const auto& db = intensity.db;
  const std::size_t n = db.size();
  out.sounding.assign(n, false);
  if (n == 0) return out;

  const double max_db = *std::max_element(db.begin(), db.end());
  const double threshold = max_db - cfg.silence_threshold_db;
  // Frames sitting at the floor are digital silence, never sounding.
  auto is_sounding = [&](double v) { return v >= threshold && v > intensity.floor_db; };

  std::size_t sounding_frames = 0;
  for (std::size_t i = 0; i < n; ++i) {
    out.sounding[i] = is_sounding(db[i]);
    sounding_frames += out.sounding[i] ? 1 : 0;
  }
  out.phonation_time_s = static_cast<double>(sounding_frames) * intensity.timing.hop_s();
  if (sounding_frames == 0) return out;

  const std::vector<double> smooth = median_smooth(pool_power(db, cfg.pool_frames), cfg.median_window);

  std::vector<std::size_t> accepted;
  for (std::size_t c : plateau_maxima(smooth)) {
    if (!is_sounding(smooth[c])) continue;
    if (accepted.empty()) {
      accepted.push_back(c);
      continue;
    }
    const std::size_t p = accepted.back();
    const double dip = *std::min_element(smooth.begin() + static_cast<std::ptrdiff_t>(p),
                                         smooth.begin() + static_cast<std::ptrdiff_t>(c) + 1);
    if (smooth[p] - dip >= cfg.min_dip_db && smooth[c] - dip >= cfg.min_dip_db) {
      accepted.push_back(c);
    } else if (smooth[c] > smooth[p]) {
      accepted.back() = c;
    }
  }

  for (std::size_t peak : accepted) {
    if (cfg.require_voicing) {
      const std::size_t lo = peak > 0 ? peak - 1 : 0;
      const std::size_t hi = std::min(n - 1, peak + 1);
      bool voiced = false;
      for (std::size_t i = lo; i <= hi; ++i) voiced = voiced || pitch.f0_hz[i].has_value();
      if (!voiced) continue;
    }
    out.peak_frames.push_back(peak);
  }
  out.syllable_count = out.peak_frames.size();
  return out;
}

AcousticProfile compute_profile(const AudioClip& clip, const ProfileConfig& cfg) {
  const PitchTrack pitch = pitch_track(clip, cfg.pitch);
  const IntensityTrack intensity = intensity_contour(clip, cfg.intensity);
  const NucleiResult nuclei = syllable_nuclei(intensity, pitch, cfg.nuclei);

  AcousticProfile p;
  p.duration_s = clip.duration_s();

  double pitch_sum = 0.0;
  std::size_t voiced = 0;
  for (const auto& f0 : pitch.f0_hz) {
    if (!f0) continue;
    pitch_sum += *f0;
    ++voiced;
  }
  if (voiced > 0) p.mean_pitch_hz = pitch_sum / static_cast<double>(voiced);
  p.voiced_fraction = pitch.f0_hz.empty() ? 0.0 : static_cast<double>(voiced) / static_cast<double>(pitch.f0_hz.size());

  double db_sum = 0.0;
  std::size_t sounding = 0;
  for (std::size_t i = 0; i < intensity.db.size(); ++i) {
    if (!nuclei.sounding[i]) continue;
    db_sum += intensity.db[i];
    ++sounding;
  }
  if (sounding == 0) {
    for (double v : intensity.db) db_sum += v;
    sounding = intensity.db.size();
  }
  p.mean_intensity_db = db_sum / static_cast<double>(sounding);

  p.syllable_count = nuclei.syllable_count;
  p.phonation_time_s = std::min(nuclei.phonation_time_s, p.duration_s);
  p.speech_rate = static_cast<double>(p.syllable_count) / p.duration_s;
  p.articulation_rate =
      p.phonation_time_s > 0.0 ? static_cast<double>(p.syllable_count) / p.phonation_time_s : 0.0;
  return p;
}

nlohmann::json profile_to_json(const std::string& clip_id, const AcousticProfile& p) {
  nlohmann::json j;
  j["clip_id"] = clip_id;
  j["mean_pitch_hz"] = p.mean_pitch_hz ? nlohmann::json(*p.mean_pitch_hz) : nlohmann::json(nullptr);
  j["mean_intensity_db"] = p.mean_intensity_db;
  j["speech_rate"] = p.speech_rate;
  j["articulation_rate"] = p.articulation_rate;
  j["syllable_count"] = p.syllable_count;
  j["duration_s"] = p.duration_s;
  j["phonation_time_s"] = p.phonation_time_s;
  j["voiced_fraction"] = p.voiced_fraction;
  return j;
}

AcousticProfile profile_from_json(const nlohmann::json& j) {
  AcousticProfile p;
  try {
    const auto& pitch = j.at("mean_pitch_hz");
    if (!pitch.is_null()) p.mean_pitch_hz = pitch.get<double>();
    p.mean_intensity_db = j.at("mean_intensity_db").get<double>();
    p.speech_rate = j.at("speech_rate").get<double>();
    p.articulation_rate = j.at("articulation_rate").get<double>();
    p.syllable_count = j.at("syllable_count").get<std::size_t>();
    p.duration_s = j.at("duration_s").get<double>();
    p.phonation_time_s = j.at("phonation_time_s").get<double>();
    p.voiced_fraction = j.at("voiced_fraction").get<double>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::MissingField, std::string("profile record: ") + e.what());
  }
  return p;
}

}  // namespace affect
