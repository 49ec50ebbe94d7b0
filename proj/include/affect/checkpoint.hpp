#pragma once

#include <filesystem>
#include <optional>
#include <string>

#include <json.hpp>

#include "affect/clap_model.hpp"

namespace affect {

inline constexpr const char* kCheckpointFormat = "affect-clap/1";

nlohmann::json checkpoint_to_json(const ClapModel& model);
// Throws VersionMismatch or CorruptCheckpoint.
ClapModel checkpoint_from_json(const nlohmann::json& j);

void save_checkpoint(const ClapModel& model, const std::filesystem::path& path);

// When `expected_featurizer_hash` is given, a checkpoint produced with a
// different featurizer configuration is rejected with FeaturizerMismatch.
ClapModel load_checkpoint(const std::filesystem::path& path,
                          const std::optional<std::string>& expected_featurizer_hash = std::nullopt);

// Content hash of the serialized checkpoint.
std::string checkpoint_hash(const ClapModel& model);

void require_featurizer(const ClapModel& model, const std::string& featurizer_hash);

}  // namespace affect
