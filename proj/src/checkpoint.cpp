#include "affect/checkpoint.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

#include "affect/error.hpp"
#include "affect/featurizers.hpp"

namespace affect {

namespace {

nlohmann::json matrix_to_json(const Matrix& m) {
  nlohmann::json rows = nlohmann::json::array();
  for (std::size_t r = 0; r < m.rows(); ++r) {
    const auto row = m.row(r);
    rows.push_back(std::vector<double>(row.begin(), row.end()));
  }
  return rows;
}

Matrix matrix_from_json(const nlohmann::json& j, std::size_t rows, std::size_t cols, const char* name) {
  if (!j.is_array() || j.size() != rows)
    throw Error(ErrorCode::CorruptCheckpoint, std::string(name) + " has wrong row count");
  Matrix m(rows, cols);
  for (std::size_t r = 0; r < rows; ++r) {
    const auto row = j[r].get<std::vector<double>>();
    if (row.size() != cols) throw Error(ErrorCode::CorruptCheckpoint, std::string(name) + " has wrong column count");
    std::copy(row.begin(), row.end(), m.row(r).begin());
  }
  return m;
}

}  // namespace

nlohmann::json checkpoint_to_json(const ClapModel& model) {
  const auto& c = model.config;
  return nlohmann::json{
      {"format", kCheckpointFormat},
      {"config",
       {{"audio_dim", c.audio_dim},
        {"text_dim", c.text_dim},
        {"embed_dim", c.embed_dim},
        {"tau_learnable", c.tau_learnable},
        {"tau_init", c.tau_init},
        {"tau_max", c.tau_max}}},
      {"featurizer_hash", c.featurizer_hash},
      {"seed", model.seed},
      {"W_a", matrix_to_json(model.w_audio)},
      {"b_a", model.b_audio},
      {"W_t", matrix_to_json(model.w_text)},
      {"b_t", model.b_text},
      {"log_tau", model.log_tau},
  };
}

ClapModel checkpoint_from_json(const nlohmann::json& j) {
  if (!j.is_object() || !j.contains("format") || !j["format"].is_string())
    throw Error(ErrorCode::CorruptCheckpoint, "missing format tag");
  const auto format = j["format"].get<std::string>();
  if (format != kCheckpointFormat)
    throw Error(ErrorCode::VersionMismatch, "checkpoint format '" + format + "', expected '" + kCheckpointFormat + "'");
  ClapModel m;
  try {
    const auto& c = j.at("config");
    m.config.audio_dim = c.at("audio_dim").get<std::size_t>();
    m.config.text_dim = c.at("text_dim").get<std::size_t>();
    m.config.embed_dim = c.at("embed_dim").get<std::size_t>();
    m.config.tau_learnable = c.at("tau_learnable").get<bool>();
    m.config.tau_init = c.at("tau_init").get<double>();
    m.config.tau_max = c.at("tau_max").get<double>();
    m.config.featurizer_hash = j.at("featurizer_hash").get<std::string>();
    m.seed = j.at("seed").get<std::uint64_t>();
    m.w_audio = matrix_from_json(j.at("W_a"), m.config.embed_dim, m.config.audio_dim, "W_a");
    m.b_audio = j.at("b_a").get<std::vector<double>>();
    m.w_text = matrix_from_json(j.at("W_t"), m.config.embed_dim, m.config.text_dim, "W_t");
    m.b_text = j.at("b_t").get<std::vector<double>>();
    m.log_tau = j.at("log_tau").get<double>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::CorruptCheckpoint, e.what());
  }
  try {
    m.validate();
  } catch (const Error& e) {
    throw Error(ErrorCode::CorruptCheckpoint, e.what());
  }
  return m;
}

void save_checkpoint(const ClapModel& model, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoError, "cannot write '" + path.string() + "'");
  out << checkpoint_to_json(model).dump(1) << '\n';
  if (!out) throw Error(ErrorCode::IoError, "short write to '" + path.string() + "'");
}

ClapModel load_checkpoint(const std::filesystem::path& path, const std::optional<std::string>& expected_featurizer_hash) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::NotFound, "cannot open checkpoint '" + path.string() + "'");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::CorruptCheckpoint, e.what());
  }
  ClapModel m = checkpoint_from_json(j);
  if (expected_featurizer_hash) require_featurizer(m, *expected_featurizer_hash);
  return m;
}

std::string checkpoint_hash(const ClapModel& model) { return hex64(fnv1a64(checkpoint_to_json(model).dump())); }

void require_featurizer(const ClapModel& model, const std::string& featurizer_hash) {
  if (model.config.featurizer_hash != featurizer_hash)
    throw Error(ErrorCode::FeaturizerMismatch, "checkpoint was trained with featurizer " + model.config.featurizer_hash +
                                                   ", features come from " + featurizer_hash);
}

}  // namespace affect
