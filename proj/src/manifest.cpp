#include "affect/manifest.hpp"

#include <fstream>
#include <iterator>
#include <set>
#include <sstream>

#include <json.hpp>

#include "affect/error.hpp"

namespace affect {

std::string_view to_string(Split split) { return split == Split::Train ? "train" : "test"; }

namespace {

std::string where(const std::string& origin, std::size_t line) { return origin + ":" + std::to_string(line); }

std::string required_string(const nlohmann::json& j, const char* field, const std::string& at) {
  if (!j.contains(field) || j[field].is_null()) throw Error(ErrorCode::MissingField, at + ": missing \"" + field + "\"");
  if (!j[field].is_string()) throw Error(ErrorCode::MalformedLine, at + ": \"" + field + "\" must be a string");
  return j[field].get<std::string>();
}

ClipRecord parse_record(const nlohmann::json& j, const std::string& at) {
  if (!j.is_object()) throw Error(ErrorCode::MalformedLine, at + ": expected a JSON object");
  ClipRecord r;
  r.clip_id = required_string(j, "clip_id", at);
  r.audio_path = required_string(j, "audio_path", at);
  r.dataset = required_string(j, "dataset", at);
  const std::string split = required_string(j, "split", at);
  if (split == "train") r.split = Split::Train;
  else if (split == "test") r.split = Split::Test;
  else throw Error(ErrorCode::MalformedLine, at + ": split must be \"train\" or \"test\"");
  r.emotion = normalize_text(required_string(j, "emotion", at));
  if (r.clip_id.empty()) throw Error(ErrorCode::MalformedLine, at + ": clip_id is empty");
  if (r.emotion.empty()) throw Error(ErrorCode::MalformedLine, at + ": emotion is empty");
  if (j.contains("sex") && !j["sex"].is_null()) {
    const auto& sex = j["sex"];
    if (sex == "male") r.sex = Sex::Male;
    else if (sex == "female") r.sex = Sex::Female;
    else throw Error(ErrorCode::MalformedLine, at + ": sex must be \"male\", \"female\" or null");
  }
  return r;
}

}  // namespace

std::vector<ClipRecord> parse_manifest_text(std::string_view text, const std::string& origin) {
  std::vector<ClipRecord> records;
  std::set<std::string> seen;
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const std::string at = where(origin, line_no);
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw Error(ErrorCode::MalformedLine, at + ": " + e.what());
    }
    ClipRecord r = parse_record(j, at);
    if (!seen.insert(r.clip_id).second) throw Error(ErrorCode::DuplicateClipId, at + ": clip_id '" + r.clip_id + "' repeated");
    records.push_back(std::move(r));
  }
  return records;
}

std::vector<ClipRecord> parse_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::NotFound, "cannot open manifest '" + path.string() + "'");
  const std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return parse_manifest_text(text, path.string());
}

std::vector<ClipRecord> parse_manifests(const std::vector<std::filesystem::path>& paths) {
  std::vector<ClipRecord> all;
  std::set<std::string> seen;
  for (const auto& p : paths) {
    for (auto& r : parse_manifest(p)) {
      if (!seen.insert(r.clip_id).second)
        throw Error(ErrorCode::DuplicateClipId, p.string() + ": clip_id '" + r.clip_id + "' appears in another manifest");
      // Audio paths are stored relative to their manifest.
      const std::filesystem::path audio(r.audio_path);
      if (audio.is_relative()) r.audio_path = (p.parent_path() / audio).lexically_normal().string();
      all.push_back(std::move(r));
    }
  }
  return all;
}

nlohmann::json record_to_json(const ClipRecord& r) {
  nlohmann::json j{{"clip_id", r.clip_id},
                   {"audio_path", r.audio_path},
                   {"dataset", r.dataset},
                   {"split", to_string(r.split)},
                   {"emotion", r.emotion}};
  j["sex"] = r.sex ? nlohmann::json(to_string(*r.sex)) : nlohmann::json(nullptr);
  return j;
}

std::string serialize_manifest(const std::vector<ClipRecord>& records) {
  std::string out;
  for (const auto& r : records) out += record_to_json(r).dump() + "\n";
  return out;
}

}  // namespace affect
