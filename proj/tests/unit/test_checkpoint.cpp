#include <doctest.h>

#include <fstream>

#include "affect/checkpoint.hpp"
#include "affect/error.hpp"
#include "support.hpp"

using namespace affect;

namespace {

ClapModel sample_model() {
  ModelConfig cfg;
  cfg.audio_dim = 6;
  cfg.text_dim = 5;
  cfg.embed_dim = 3;
  cfg.featurizer_hash = "0123456789abcdef";
  ClapModel m = ClapModel::initialize(cfg, 12345);
  m.log_tau = 2.6592600369327779;
  m.w_audio(1, 2) = 1.0 / 3.0;
  m.b_text[0] = -1e-300;
  return m;
}

ErrorCode load_error(const std::filesystem::path& p, const std::optional<std::string>& hash = std::nullopt) {
  try {
    load_checkpoint(p, hash);
  } catch (const Error& e) {
    return e.code();
  }
  return ErrorCode::IoError;
}

}  // namespace

TEST_CASE("checkpoint round trip is bit exact") {
  testing::TempDir dir("ckpt");
  const ClapModel m = sample_model();
  save_checkpoint(m, dir.path() / "m.json");
  const ClapModel r = load_checkpoint(dir.path() / "m.json", m.config.featurizer_hash);
  CHECK(r == m);
  CHECK(r.flatten() == m.flatten());
  CHECK(checkpoint_hash(r) == checkpoint_hash(m));
  const auto j = checkpoint_to_json(m);
  CHECK(j.at("format") == kCheckpointFormat);
  for (const char* key : {"config", "W_a", "b_a", "W_t", "b_t", "log_tau", "featurizer_hash", "seed"}) CHECK(j.contains(key));
}

TEST_CASE("checkpoint guards") {
  testing::TempDir dir("ckpt_guard");
  const ClapModel m = sample_model();
  auto j = checkpoint_to_json(m);

  j["format"] = "affect-clap/0";
  std::ofstream(dir.path() / "v.json") << j.dump();
  CHECK(load_error(dir.path() / "v.json") == ErrorCode::VersionMismatch);

  j = checkpoint_to_json(m);
  j["W_a"][0] = "oops";
  std::ofstream(dir.path() / "c.json") << j.dump();
  CHECK(load_error(dir.path() / "c.json") == ErrorCode::CorruptCheckpoint);

  j = checkpoint_to_json(m);
  j["b_a"].erase(0);
  std::ofstream(dir.path() / "s.json") << j.dump();
  CHECK(load_error(dir.path() / "s.json") == ErrorCode::CorruptCheckpoint);

  std::ofstream(dir.path() / "t.json") << "{\"format\": \"affect";
  CHECK(load_error(dir.path() / "t.json") == ErrorCode::CorruptCheckpoint);

  save_checkpoint(m, dir.path() / "m.json");
  CHECK(load_error(dir.path() / "m.json", std::string("feedfacefeedface")) == ErrorCode::FeaturizerMismatch);
  CHECK(load_error(dir.path() / "missing.json") == ErrorCode::NotFound);
  CHECK_THROWS_AS(require_featurizer(m, "other"), Error);
  CHECK_NOTHROW(require_featurizer(m, m.config.featurizer_hash));
}

TEST_CASE("checkpoint hash sees every parameter") {
  const ClapModel m = sample_model();
  auto flat = m.flatten();
  for (std::size_t k = 0; k < flat.size(); k += 7) {
    ClapModel t = m;
    auto f = flat;
    f[k] = std::nextafter(f[k], 1e9);
    t.assign(f);
    CHECK(checkpoint_hash(t) != checkpoint_hash(m));
  }
}
