#pragma once

#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "affect/acoustics.hpp"
#include "affect/featurizers.hpp"
#include "affect/manifest.hpp"
#include "affect/prompting.hpp"
#include "affect/trainer.hpp"

namespace affect {

// A manifest record with its measured profile and frozen audio features.
struct ClipData {
  ClipRecord record;
  AcousticProfile profile;
  std::vector<double> audio_features;
};

struct FeatureSet {
  std::string featurizer_hash;
  std::vector<ClipData> clips;

  FeatureSet filter(const std::function<bool(const ClipData&)>& keep) const;
  std::vector<std::string> labels() const;  // sorted, unique
};

ClipData featurize_clip(const ClipRecord& record, const AudioClip& clip, const FeaturizerConfig& cfg);

// Decodes every record's audio and featurizes it. With a cache path, clips
// already present in a cache written by the same featurizer are reused and
// the cache is rewritten afterwards.
FeatureSet build_features(const std::vector<ClipRecord>& records, const FeaturizerConfig& cfg,
                          const std::optional<std::filesystem::path>& cache = std::nullopt);

// Feature cache: JSONL of {clip_id, featurizer_hash, vector, profile}.
void write_feature_cache(const FeatureSet& set, const std::filesystem::path& path);

struct CacheEntry {
  AcousticProfile profile;
  std::vector<double> vector;
};
// Entries written by a different featurizer are skipped.
std::map<std::string, CacheEntry> read_feature_cache(const std::filesystem::path& path, const std::string& featurizer_hash);

// Prompt pairs for every clip under `policy`, with text features attached.
std::vector<TrainingPair> make_training_pairs(const std::vector<ClipData>& clips, const PromptPolicy& policy,
                                              const FeaturizerConfig& cfg, const BinThresholds& t = {});

}  // namespace affect
