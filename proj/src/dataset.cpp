#include "affect/dataset.hpp"

#include <fstream>
#include <set>

#include <json.hpp>

#include "affect/error.hpp"

namespace affect {

FeatureSet FeatureSet::filter(const std::function<bool(const ClipData&)>& keep) const {
  FeatureSet out{featurizer_hash, {}};
  for (const auto& c : clips)
    if (keep(c)) out.clips.push_back(c);
  return out;
}

std::vector<std::string> FeatureSet::labels() const {
  std::set<std::string> s;
  for (const auto& c : clips) s.insert(c.record.emotion);
  return {s.begin(), s.end()};
}

ClipData featurize_clip(const ClipRecord& record, const AudioClip& clip, const FeaturizerConfig& cfg) {
  ClipData d{record, compute_profile(clip, cfg.profile), {}};
  d.audio_features = encode_audio(clip, d.profile, cfg);
  return d;
}

FeatureSet build_features(const std::vector<ClipRecord>& records, const FeaturizerConfig& cfg,
                          const std::optional<std::filesystem::path>& cache) {
  FeatureSet set{cfg.hash(), {}};
  std::map<std::string, CacheEntry> cached;
  if (cache && std::filesystem::exists(*cache)) cached = read_feature_cache(*cache, set.featurizer_hash);

  set.clips.reserve(records.size());
  for (const auto& r : records) {
    if (auto it = cached.find(r.clip_id); it != cached.end() && it->second.vector.size() == cfg.audio_dim()) {
      set.clips.push_back(ClipData{r, it->second.profile, it->second.vector});
      continue;
    }
    AudioClip clip = load_wav(r.audio_path);
    clip.id = r.clip_id;
    set.clips.push_back(featurize_clip(r, clip, cfg));
  }
  if (cache) write_feature_cache(set, *cache);
  return set;
}

void write_feature_cache(const FeatureSet& set, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoError, "cannot write feature cache '" + path.string() + "'");
  for (const auto& c : set.clips) {
    nlohmann::json j{{"clip_id", c.record.clip_id},
                     {"featurizer_hash", set.featurizer_hash},
                     {"vector", c.audio_features},
                     {"profile", profile_to_json(c.record.clip_id, c.profile)}};
    out << j.dump() << '\n';
  }
}

std::map<std::string, CacheEntry> read_feature_cache(const std::filesystem::path& path, const std::string& featurizer_hash) {
  std::map<std::string, CacheEntry> out;
  std::ifstream in(path);
  if (!in) return out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      if (j.at("featurizer_hash").get<std::string>() != featurizer_hash) continue;
      out[j.at("clip_id").get<std::string>()] =
          CacheEntry{profile_from_json(j.at("profile")), j.at("vector").get<std::vector<double>>()};
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorCode::MalformedLine, path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

std::vector<TrainingPair> make_training_pairs(const std::vector<ClipData>& clips, const PromptPolicy& policy,
                                              const FeaturizerConfig& cfg, const BinThresholds& t) {
  std::map<std::string, std::vector<double>> text_cache;
  std::vector<TrainingPair> pairs;
  for (const auto& c : clips) {
    for (auto& pp : augment_pairs(c.record.clip_id, c.profile, c.record.emotion, c.record.sex, policy, t)) {
      auto it = text_cache.find(pp.prompt.text);
      if (it == text_cache.end()) it = text_cache.emplace(pp.prompt.text, encode_text(pp.prompt.text, cfg)).first;
      pairs.push_back(TrainingPair{c.record.clip_id, pp.prompt.text, c.audio_features, it->second});
    }
  }
  return pairs;
}

}  // namespace affect
