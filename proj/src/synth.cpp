#include "affect/synth.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>

#include <json.hpp>

#include "affect/error.hpp"
#include "affect/featurizers.hpp"
#include "affect/rng.hpp"

namespace affect {

namespace {

constexpr double kTwoPi = 6.283185307179586;
constexpr double kDefaultPRef = 2e-5;

nlohmann::json range_json(const Range& r) { return nlohmann::json::array({r.lo, r.hi}); }

Range range_from(const nlohmann::json& j, const char* field) {
  const auto& v = j.at(field);
  if (!v.is_array() || v.size() != 2) throw Error(ErrorCode::InvalidArgument, std::string(field) + " must be [lo, hi]");
  return Range{v[0].get<double>(), v[1].get<double>()};
}

std::string_view to_string(SexMode m) {
  switch (m) {
    case SexMode::Male: return "male";
    case SexMode::Female: return "female";
    case SexMode::Mixed: return "mixed";
    case SexMode::None: break;
  }
  return "none";
}

SexMode sex_mode_from(const nlohmann::json& j) {
  if (!j.contains("sex") || j["sex"].is_null()) return SexMode::None;
  const auto s = j["sex"].get<std::string>();
  if (s == "male") return SexMode::Male;
  if (s == "female") return SexMode::Female;
  if (s == "mixed") return SexMode::Mixed;
  if (s == "none") return SexMode::None;
  throw Error(ErrorCode::InvalidArgument, "sex must be male, female, mixed or none");
}

double tone_rms(double amplitude) {
  return amplitude * std::sqrt((1.0 + kSecondHarmonicGain * kSecondHarmonicGain + kThirdHarmonicGain * kThirdHarmonicGain) / 2.0);
}

std::string clip_name(const std::string& dataset, const std::string& emotion, std::size_t index) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04zu", index);
  std::string e = emotion;
  for (char& c : e)
    if (c == ' ') c = '-';
  return dataset + "_" + e + "_" + buf;
}

}  // namespace

void SynthSpec::validate() const {
  if (datasets.empty()) throw Error(ErrorCode::InvalidArgument, "synth spec has no datasets");
  if (sample_rate < 8000) throw Error(ErrorCode::InvalidArgument, "sample rate must be at least 8000 Hz");
  if (!(duration_s > 0.1)) throw Error(ErrorCode::InvalidArgument, "duration must exceed 0.1 s");
  if (!(test_fraction >= 0.0 && test_fraction < 1.0)) throw Error(ErrorCode::InvalidArgument, "test_fraction must be in [0, 1)");
  if (!(min_gap_s > 0.0) || !(ramp_s >= 0.0)) throw Error(ErrorCode::InvalidArgument, "gap and ramp must be non-negative");
  auto check = [](const Range& r, const std::string& what, double lo_bound, double hi_bound) {
    if (!(r.lo > lo_bound) || !(r.hi >= r.lo) || !(r.hi <= hi_bound))
      throw Error(ErrorCode::InvalidArgument, what + " range [" + std::to_string(r.lo) + ", " + std::to_string(r.hi) + "] is invalid");
  };
  for (const auto& d : datasets) {
    if (d.name.empty() || d.classes.empty() || d.clips_per_class == 0)
      throw Error(ErrorCode::InvalidArgument, "dataset needs a name, classes and clips");
    for (const auto& c : d.classes) {
      const std::string tag = d.name + "/" + c.emotion + " ";
      if (c.emotion.empty()) throw Error(ErrorCode::InvalidArgument, "class emotion is empty");
      check(c.f0_hz, tag + "f0_hz", 0.0, sample_rate / 6.0);
      check(c.amplitude, tag + "amplitude", 0.0, 1.0 / (1.0 + kSecondHarmonicGain + kThirdHarmonicGain));
      check(c.bursts_per_second, tag + "bursts_per_second", 0.0, 1e3);
      check(c.burst_s, tag + "burst_s", 2.0 * ramp_s, duration_s);
      // The densest layout must still leave room for a burst and a gap.
      const double bursts = std::max(1.0, std::round(c.bursts_per_second.hi * duration_s));
      if (duration_s / bursts - min_gap_s < c.burst_s.lo)
        throw Error(ErrorCode::InvalidArgument, tag + "bursts do not fit: lower bursts_per_second or burst_s");
    }
  }
}

nlohmann::json SynthSpec::to_json() const {
  nlohmann::json ds = nlohmann::json::array();
  for (const auto& d : datasets) {
    nlohmann::json classes = nlohmann::json::array();
    for (const auto& c : d.classes)
      classes.push_back({{"emotion", c.emotion},
                         {"f0_hz", range_json(c.f0_hz)},
                         {"amplitude", range_json(c.amplitude)},
                         {"bursts_per_second", range_json(c.bursts_per_second)},
                         {"burst_s", range_json(c.burst_s)},
                         {"sex", to_string(c.sex)}});
    ds.push_back({{"name", d.name}, {"clips_per_class", d.clips_per_class}, {"classes", classes}});
  }
  return nlohmann::json{{"datasets", ds},         {"duration_s", duration_s}, {"sample_rate", sample_rate},
                        {"test_fraction", test_fraction}, {"min_gap_s", min_gap_s}, {"ramp_s", ramp_s},
                        {"seed", seed}};
}

SynthSpec SynthSpec::from_json(const nlohmann::json& j) {
  SynthSpec s;
  try {
    s.duration_s = j.value("duration_s", s.duration_s);
    s.sample_rate = j.value("sample_rate", s.sample_rate);
    s.test_fraction = j.value("test_fraction", s.test_fraction);
    s.min_gap_s = j.value("min_gap_s", s.min_gap_s);
    s.ramp_s = j.value("ramp_s", s.ramp_s);
    s.seed = j.value("seed", s.seed);
    for (const auto& dj : j.at("datasets")) {
      DatasetSpec d;
      d.name = dj.at("name").get<std::string>();
      d.clips_per_class = dj.value("clips_per_class", d.clips_per_class);
      for (const auto& cj : dj.at("classes")) {
        ClassArchetype c;
        c.emotion = normalize_text(cj.at("emotion").get<std::string>());
        c.f0_hz = range_from(cj, "f0_hz");
        c.amplitude = range_from(cj, "amplitude");
        c.bursts_per_second = range_from(cj, "bursts_per_second");
        c.burst_s = range_from(cj, "burst_s");
        c.sex = sex_mode_from(cj);
        d.classes.push_back(std::move(c));
      }
      s.datasets.push_back(std::move(d));
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::InvalidArgument, std::string("synth spec: ") + e.what());
  }
  s.validate();
  return s;
}

SynthSpec SynthSpec::default_spec() {
  SynthSpec s;
  DatasetSpec d;
  d.name = "synth";
  d.clips_per_class = 50;
  d.classes = {
      {"anger", {230.0, 260.0}, {0.2, 0.5}, {5.0, 6.0}, {0.06, 0.09}, SexMode::None},
      {"happy", {260.0, 320.0}, {0.1, 0.3}, {3.5, 4.5}, {0.08, 0.12}, SexMode::None},
      {"neutral", {140.0, 165.0}, {0.01, 0.02}, {2.0, 2.5}, {0.15, 0.2}, SexMode::None},
      {"sad", {110.0, 130.0}, {0.004, 0.01}, {1.5, 2.0}, {0.28, 0.35}, SexMode::None},
  };
  s.datasets.push_back(std::move(d));
  return s;
}

SynthSpec SynthSpec::varied_spec() {
  SynthSpec s;
  DatasetSpec d;
  d.name = "varied";
  d.clips_per_class = 100;
  d.classes = {
      {"anger", {240.0, 300.0}, {0.012, 0.04}, {2.5, 5.0}, {0.1, 0.4}, SexMode::None},
      {"happy", {185.0, 230.0}, {0.01, 0.04}, {2.25, 4.5}, {0.1, 0.4}, SexMode::None},
      {"neutral", {135.0, 165.0}, {0.008, 0.04}, {2.0, 4.25}, {0.12, 0.45}, SexMode::None},
      {"sad", {95.0, 125.0}, {0.006, 0.04}, {1.75, 4.0}, {0.15, 0.45}, SexMode::None},
  };
  s.datasets.push_back(std::move(d));
  return s;
}

nlohmann::json SynthTruth::to_json() const {
  return nlohmann::json{{"clip_id", clip_id},           {"f0_hz", f0_hz},
                        {"amplitude", amplitude},       {"intensity_db", intensity_db},
                        {"burst_count", burst_count},   {"phonation_time_s", phonation_time_s},
                        {"duration_s", duration_s}};
}

AudioClip render_burst_train(const std::string& id, int sample_rate, double duration_s, double f0_hz, double amplitude,
                             const std::vector<std::pair<double, double>>& bursts, double ramp_s) {
  AudioClip clip;
  clip.id = id;
  clip.sample_rate = sample_rate;
  clip.samples.assign(static_cast<std::size_t>(std::lround(duration_s * sample_rate)), 0.0);
  const auto ramp = static_cast<std::size_t>(std::lround(ramp_s * sample_rate));
  for (const auto& [start_s, len_s] : bursts) {
    const auto start = static_cast<std::size_t>(std::lround(start_s * sample_rate));
    const auto len = static_cast<std::size_t>(std::lround(len_s * sample_rate));
    for (std::size_t k = 0; k < len && start + k < clip.samples.size(); ++k) {
      double env = 1.0;
      if (ramp > 0 && k < ramp) env = 0.5 - 0.5 * std::cos(M_PI * static_cast<double>(k) / static_cast<double>(ramp));
      if (ramp > 0 && len - 1 - k < ramp)
        env = std::min(env, 0.5 - 0.5 * std::cos(M_PI * static_cast<double>(len - 1 - k) / static_cast<double>(ramp)));
      const double t = static_cast<double>(start + k) / sample_rate;
      const double ph = kTwoPi * f0_hz * t;
      clip.samples[start + k] =
          amplitude * env * (std::sin(ph) + kSecondHarmonicGain * std::sin(2.0 * ph) + kThirdHarmonicGain * std::sin(3.0 * ph));
    }
  }
  return clip;
}

std::vector<SynthClip> generate_clips(const SynthSpec& spec) {
  spec.validate();
  std::vector<SynthClip> out;
  for (const auto& d : spec.datasets) {
    const auto n_test = static_cast<std::size_t>(std::floor(static_cast<double>(d.clips_per_class) * spec.test_fraction + 1e-9));
    for (const auto& c : d.classes) {
      for (std::size_t i = 0; i < d.clips_per_class; ++i) {
        SynthClip sc;
        const std::string id = clip_name(d.name, c.emotion, i);
        Rng rng(spec.seed * 0x9E3779B97F4A7C15ULL + fnv1a64(id));

        const double f0 = rng.uniform(c.f0_hz.lo, c.f0_hz.hi);
        const double amp = rng.uniform(c.amplitude.lo, c.amplitude.hi);
        const double rate = rng.uniform(c.bursts_per_second.lo, c.bursts_per_second.hi);
        const auto count = static_cast<std::size_t>(std::max(1.0, std::round(rate * spec.duration_s)));
        const double slot = spec.duration_s / static_cast<double>(count);
        std::vector<std::pair<double, double>> bursts;
        double phonation = 0.0;
        for (std::size_t b = 0; b < count; ++b) {
          const double len = std::min(rng.uniform(c.burst_s.lo, c.burst_s.hi), slot - spec.min_gap_s);
          const double slack = slot - spec.min_gap_s - len;
          const double start = static_cast<double>(b) * slot + 0.5 * spec.min_gap_s + rng.uniform() * slack;
          bursts.emplace_back(start, len);
          phonation += std::lround(len * spec.sample_rate) / static_cast<double>(spec.sample_rate);
        }

        std::optional<Sex> sex;
        switch (c.sex) {
          case SexMode::Male: sex = Sex::Male; break;
          case SexMode::Female: sex = Sex::Female; break;
          case SexMode::Mixed: sex = rng.uniform() < 0.5 ? Sex::Male : Sex::Female; break;
          case SexMode::None: break;
        }

        sc.audio = render_burst_train(id, spec.sample_rate, spec.duration_s, f0, amp, bursts, spec.ramp_s);
        sc.record = ClipRecord{id, "audio/" + id + ".wav", d.name, i + n_test >= d.clips_per_class ? Split::Test : Split::Train,
                               c.emotion, sex};
        sc.truth = SynthTruth{id, f0, amp, 20.0 * std::log10(tone_rms(amp) / kDefaultPRef), count, phonation, spec.duration_s};
        out.push_back(std::move(sc));
      }
    }
  }
  return out;
}

SynthSummary synth_corpus(const SynthSpec& spec, const std::filesystem::path& out_dir) {
  namespace fs = std::filesystem;
  const auto clips = generate_clips(spec);
  std::error_code ec;
  fs::create_directories(out_dir / "audio", ec);
  if (ec) throw Error(ErrorCode::IoError, "cannot create '" + (out_dir / "audio").string() + "': " + ec.message());

  SynthSummary summary;
  summary.manifest = out_dir / "manifest.jsonl";
  summary.ground_truth = out_dir / "ground_truth.jsonl";
  std::ofstream manifest(summary.manifest, std::ios::trunc);
  std::ofstream truth(summary.ground_truth, std::ios::trunc);
  if (!manifest || !truth) throw Error(ErrorCode::IoError, "cannot write manifest in '" + out_dir.string() + "'");
  for (const auto& c : clips) {
    write_wav(c.audio, out_dir / c.record.audio_path);
    manifest << record_to_json(c.record).dump() << '\n';
    truth << c.truth.to_json().dump() << '\n';
    summary.records.push_back(c.record);
  }
  if (!manifest || !truth) throw Error(ErrorCode::IoError, "short write in '" + out_dir.string() + "'");
  return summary;
}

}  // namespace affect
