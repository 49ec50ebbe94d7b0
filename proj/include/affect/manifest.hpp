#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "affect/prompting.hpp"

namespace affect {

enum class Split { Train, Test };

std::string_view to_string(Split split);

// One manifest line: {"clip_id", "audio_path", "dataset", "split",
// "emotion", "sex"}; sex may be "male", "female", null or omitted.
struct ClipRecord {
  std::string clip_id;
  std::string audio_path;
  std::string dataset;
  Split split = Split::Train;
  std::string emotion;
  std::optional<Sex> sex;

  bool operator==(const ClipRecord&) const = default;
};

// Throws MalformedLine (with line number), MissingField or DuplicateClipId.
// Unknown fields are ignored and emotion labels are normalized.
std::vector<ClipRecord> parse_manifest_text(std::string_view text, const std::string& origin = "<manifest>");
std::vector<ClipRecord> parse_manifest(const std::filesystem::path& path);

// Concatenates several manifests, rejecting clip ids repeated across them.
std::vector<ClipRecord> parse_manifests(const std::vector<std::filesystem::path>& paths);

nlohmann::json record_to_json(const ClipRecord& record);
std::string serialize_manifest(const std::vector<ClipRecord>& records);

}  // namespace affect
