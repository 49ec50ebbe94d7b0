#include <algorithm>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "affect/acoustics.hpp"
#include "affect/audio.hpp"
#include "affect/checkpoint.hpp"
#include "affect/dataset.hpp"
#include "affect/error.hpp"
#include "affect/evaluation.hpp"
#include "affect/finetune.hpp"
#include "affect/manifest.hpp"
#include "affect/prompting.hpp"
#include "affect/protocols.hpp"
#include "affect/report.hpp"
#include "affect/synth.hpp"

namespace fs = std::filesystem;
using namespace affect;

namespace {

struct Options {
  std::vector<std::string> manifests;
  std::vector<std::string> wavs;
  std::string out;
  std::string profiles;
  std::string prompts = "augment";
  std::vector<std::string> policies;
  std::string checkpoint;
  std::string hold_out;
  std::string query;
  std::string spec;
  std::string loss_csv;
  std::string cache;
  std::string train_split = "train";
  std::string eval_split = "test";
  std::string retrieve_split = "all";
  std::string template_ = "{label}";
  std::vector<std::string> labels;
  std::vector<std::string> inputs;
  std::vector<std::size_t> ks = {10};
  std::size_t k = 10;
  std::size_t epochs = 30;
  std::size_t batch_size = 128;
  double lr = 1e-4;
  std::size_t embed_dim = 32;
  bool fixed_tau = false;
  bool sex_blind = false;
  std::size_t head_epochs = 100;
  std::size_t head_batch = 32;
  double head_lr = 1e-3;
  std::uint64_t seed = 0;
};

void write_file(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  const fs::path p(path);
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoError, "cannot write '" + path + "'");
  out << text;
}

std::vector<fs::path> as_paths(const std::vector<std::string>& v) { return {v.begin(), v.end()}; }

ExperimentConfig experiment(const Options& o) {
  ExperimentConfig cfg;
  cfg.train.learning_rate = o.lr;
  cfg.train.batch_size = o.batch_size;
  cfg.train.epochs = o.epochs;
  cfg.train.seed = o.seed;
  cfg.embed_dim = o.embed_dim;
  cfg.tau_learnable = !o.fixed_tau;
  cfg.label_template = o.template_;
  cfg.retrieval_ks = o.ks;
  cfg.head.epochs = o.head_epochs;
  cfg.head.batch_size = o.head_batch;
  cfg.head.learning_rate = o.head_lr;
  cfg.head.seed = o.seed;
  return cfg;
}

std::optional<fs::path> cache_path(const Options& o) {
  if (o.cache.empty()) return std::nullopt;
  return fs::path(o.cache);
}

FeatureSet load_features(const Options& o, const ExperimentConfig& cfg) {
  if (o.manifests.empty()) throw Error(ErrorCode::InvalidArgument, "--manifests is required");
  return build_features(parse_manifests(as_paths(o.manifests)), cfg.featurizer, cache_path(o));
}

FeatureSet select_split(const FeatureSet& all, const std::string& split) {
  if (split == "all") return all;
  if (split != "train" && split != "test") throw Error(ErrorCode::InvalidArgument, "--split must be train, test or all");
  const Split want = split == "train" ? Split::Train : Split::Test;
  return all.filter([&](const ClipData& c) { return c.record.split == want; });
}

void emit_report(const EvalReport& report, const std::string& out) { write_file(out, report.to_json().dump(2) + "\n"); }

void print_summary(const EvalReport& r) {
  std::fprintf(stderr, "%s: %zu/%zu correct (accuracy %.4f)\n", r.protocol.c_str(), r.correct, r.total, r.accuracy);
}

int cmd_extract(const Options& o) {
  std::ostringstream out;
  const ProfileConfig pcfg;
  if (!o.manifests.empty() && cache_path(o)) {
    // Fills the feature cache as a side effect.
    for (const auto& c : load_features(o, ExperimentConfig{}).clips)
      out << profile_to_json(c.record.clip_id, c.profile).dump() << '\n';
  } else if (!o.manifests.empty()) {
    for (const auto& rec : parse_manifests(as_paths(o.manifests)))
      out << profile_to_json(rec.clip_id, compute_profile(load_wav(rec.audio_path), pcfg)).dump() << '\n';
  }
  for (const auto& w : o.wavs) {
    const AudioClip clip = load_wav(w);
    out << profile_to_json(clip.id, compute_profile(clip, pcfg)).dump() << '\n';
  }
  if (o.manifests.empty() && o.wavs.empty()) throw Error(ErrorCode::InvalidArgument, "give --manifests or WAV files");
  write_file(o.out, out.str());
  return 0;
}

int cmd_prompt(const Options& o) {
  const auto records = parse_manifests(as_paths(o.manifests));
  std::map<std::string, AcousticProfile> profiles;
  if (!o.profiles.empty()) {
    std::ifstream in(o.profiles);
    if (!in) throw Error(ErrorCode::NotFound, "cannot open '" + o.profiles + "'");
    std::string line;
    while (std::getline(in, line)) {
      if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
      const auto j = nlohmann::json::parse(line);
      profiles[j.at("clip_id").get<std::string>()] = profile_from_json(j);
    }
  }
  const PromptPolicy policy = PromptPolicy::parse(o.prompts, !o.sex_blind);
  std::ostringstream out;
  for (const auto& rec : records) {
    auto it = profiles.find(rec.clip_id);
    const AcousticProfile profile = it != profiles.end() ? it->second : compute_profile(load_wav(rec.audio_path));
    for (const auto& pair : augment_pairs(rec.clip_id, profile, rec.emotion, rec.sex, policy))
      out << pair_to_json(pair).dump() << '\n';
  }
  write_file(o.out, out.str());
  return 0;
}

int cmd_train(const Options& o) {
  const ExperimentConfig cfg = experiment(o);
  const FeatureSet all = load_features(o, cfg);
  const FeatureSet data = select_split(all, o.train_split);
  const PromptPolicy policy = PromptPolicy::parse(o.prompts, !o.sex_blind);
  const TrainResult result = train_policy(data.clips, policy, cfg);
  if (o.out.empty()) throw Error(ErrorCode::InvalidArgument, "--out is required");
  save_checkpoint(result.model, o.out);
  if (!o.loss_csv.empty()) write_file(o.loss_csv, loss_history_csv(result.history));
  if (!result.history.empty())
    std::fprintf(stderr, "trained %zu batches, final loss %.6f, tau %.4f\n", result.history.size(),
                 result.history.back().loss, result.history.back().tau);
  return 0;
}

int cmd_eval_zeroshot(const Options& o) {
  const ExperimentConfig cfg = experiment(o);
  const ClapModel model = load_checkpoint(o.checkpoint, cfg.featurizer.hash());
  const FeatureSet data = select_split(load_features(o, cfg), o.eval_split);
  const auto labels = o.labels.empty() ? data.labels() : o.labels;
  auto result = zero_shot_classify(model, data, labels, o.template_);
  result.report.metadata["checkpoint_hash"] = checkpoint_hash(model);
  print_summary(result.report);
  emit_report(result.report, o.out);
  return 0;
}

int cmd_eval_loo(const Options& o) {
  const ExperimentConfig cfg = experiment(o);
  const FeatureSet all = load_features(o, cfg);
  const auto result = leave_one_out_run(all, o.hold_out, PromptPolicy::parse(o.prompts, !o.sex_blind), cfg);
  if (!o.checkpoint.empty()) save_checkpoint(result.model, o.checkpoint);
  print_summary(result.report);
  emit_report(result.report, o.out);
  return 0;
}

int cmd_finetune(const Options& o) {
  const ExperimentConfig cfg = experiment(o);
  const ClapModel model = load_checkpoint(o.checkpoint, cfg.featurizer.hash());
  const FeatureSet data = load_features(o, cfg);
  const auto result = finetune_run(model, data, cfg.head);
  if (result.checkpoint_hash_before != result.checkpoint_hash_after)
    throw Error(ErrorCode::LeakageDetected, "frozen checkpoint changed during finetuning");
  print_summary(result.report);
  emit_report(result.report, o.out);
  return 0;
}

int cmd_retrieve(const Options& o) {
  const ExperimentConfig cfg = experiment(o);
  const ClapModel model = load_checkpoint(o.checkpoint, cfg.featurizer.hash());
  const FeatureSet corpus = select_split(load_features(o, cfg), o.retrieve_split);
  const RetrievalQuery query = RetrievalQuery::parse(o.query);
  const RetrievalResult result = retrieve_top_k(model, corpus, query, o.k);
  if (result.clamped)
    std::fprintf(stderr, "warning: K=%zu exceeds corpus size, clamped to %zu\n", result.k_requested, result.k);
  nlohmann::json j{{"query", result.query}, {"k", result.k}, {"k_requested", result.k_requested}};
  nlohmann::json ranked = nlohmann::json::array();
  for (const auto& r : result.ranked) ranked.push_back({{"clip_id", r.clip_id}, {"score", r.score}});
  j["ranked"] = std::move(ranked);
  j["precision"] = precision_at_k(result, query, ground_truth(corpus), cfg.thresholds);
  write_file(o.out, j.dump(2) + "\n");
  return 0;
}

int cmd_run_matrix(const Options& o) {
  const ExperimentConfig cfg = experiment(o);
  const FeatureSet data = load_features(o, cfg);
  std::vector<PromptPolicy> policies;
  if (o.policies.empty()) {
    policies = canonical_policies();
  } else {
    for (const auto& p : o.policies) policies.push_back(PromptPolicy::parse(p, !o.sex_blind));
  }
  if (o.out.empty()) throw Error(ErrorCode::InvalidArgument, "--out directory is required");
  const auto reports = run_matrix(data, policies, cfg);
  for (std::size_t i = 0; i < reports.size(); ++i) {
    print_summary(reports[i]);
    std::string name = policies[i].name();
    std::replace(name.begin(), name.end(), ',', '+');
    emit_report(reports[i], (fs::path(o.out) / ("matrix_" + name + ".json")).string());
  }
  return 0;
}

int cmd_synth(const Options& o, bool seed_given) {
  SynthSpec spec = SynthSpec::default_spec();
  if (!o.spec.empty()) {
    std::ifstream in(o.spec);
    if (!in) throw Error(ErrorCode::NotFound, "cannot open spec '" + o.spec + "'");
    nlohmann::json j;
    try {
      in >> j;
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorCode::InvalidArgument, o.spec + ": " + e.what());
    }
    spec = SynthSpec::from_json(j);
  }
  if (seed_given) spec.seed = o.seed;
  if (o.out.empty()) throw Error(ErrorCode::InvalidArgument, "--out is required");
  const auto summary = synth_corpus(spec, o.out);
  std::fprintf(stderr, "wrote %zu clips to %s\n", summary.records.size(), o.out.c_str());
  return 0;
}

int cmd_report(const Options& o) {
  std::vector<NamedReport> reports;
  for (const auto& p : o.inputs) reports.push_back(load_report(p));
  for (const auto& path : render_reports(reports, o.out)) std::fprintf(stderr, "wrote %s\n", path.string().c_str());
  return 0;
}

void add_training_flags(CLI::App* app, Options& o) {
  app->add_option("--prompts", o.prompts, "class|pitch|intensity|speech-rate|articulation-rate|augment");
  app->add_option("--epochs", o.epochs, "Training epochs");
  app->add_option("--batch-size", o.batch_size, "Pairs per batch");
  app->add_option("--lr", o.lr, "Adam learning rate");
  app->add_option("--embed-dim", o.embed_dim, "Joint embedding dimension");
  app->add_flag("--fixed-tau", o.fixed_tau, "Keep the temperature at its initial value");
}

}  // namespace

int main(int argc, char** argv) {
  Options o;
  CLI::App app{"Contrastive audio-text emotion models on acoustic prompts"};
  app.require_subcommand(1);
  app.fallthrough();
  auto* seed_opt = app.add_option("--seed", o.seed, "Seed for all randomness");
  app.add_option("--cache", o.cache, "Feature cache JSONL");
  app.add_flag("--sex-blind", o.sex_blind, "Pitch prompts ignore speaker sex");

  auto* extract = app.add_subcommand("extract", "WAV files to acoustic profiles JSONL");
  extract->add_option("--manifests", o.manifests);
  extract->add_option("wavs", o.wavs, "WAV files");
  extract->add_option("--out", o.out, "Output JSONL (default stdout)");

  auto* prompt = app.add_subcommand("prompt", "Profiles and manifest to prompt pairs JSONL");
  prompt->add_option("--manifests", o.manifests)->required();
  prompt->add_option("--profiles", o.profiles, "Profiles JSONL from extract");
  prompt->add_option("--prompts", o.prompts, "Prompt policy");
  prompt->add_option("--out", o.out, "Output JSONL (default stdout)");

  auto* train = app.add_subcommand("train", "Train a model");
  train->add_option("--manifests", o.manifests)->required();
  add_training_flags(train, o);
  train->add_option("--split", o.train_split, "train|test|all")->capture_default_str();
  train->add_option("--out", o.out, "Checkpoint path")->required();
  train->add_option("--loss-csv", o.loss_csv, "Per-batch loss history CSV");

  auto* zs = app.add_subcommand("eval-zeroshot", "Zero-shot classification");
  zs->add_option("--checkpoint", o.checkpoint)->required();
  zs->add_option("--manifests,--manifest", o.manifests)->required();
  zs->add_option("--template", o.template_, "Candidate text template containing {label}");
  zs->add_option("--labels", o.labels, "Candidate labels (default: labels in the data)");
  zs->add_option("--split", o.eval_split, "train|test|all")->capture_default_str();
  zs->add_option("--out", o.out, "Report JSON (default stdout)");

  auto* loo = app.add_subcommand("eval-loo", "Leave-one-dataset-out zero-shot evaluation");
  loo->add_option("--manifests", o.manifests)->required();
  loo->add_option("--hold-out", o.hold_out)->required();
  add_training_flags(loo, o);
  loo->add_option("--template", o.template_);
  loo->add_option("--checkpoint-out", o.checkpoint, "Save the trained checkpoint");
  loo->add_option("--out", o.out, "Report JSON (default stdout)");

  auto* ft = app.add_subcommand("finetune", "Train a classifier head on a frozen model");
  ft->add_option("--checkpoint", o.checkpoint)->required();
  ft->add_option("--manifests,--manifest", o.manifests)->required();
  ft->add_option("--head-epochs", o.head_epochs);
  ft->add_option("--head-batch-size", o.head_batch);
  ft->add_option("--head-lr", o.head_lr);
  ft->add_option("--out", o.out, "Report JSON (default stdout)");

  auto* ret = app.add_subcommand("retrieve", "Top-K clips for a text query");
  ret->add_option("--checkpoint", o.checkpoint)->required();
  ret->add_option("--manifests,--manifest", o.manifests)->required();
  ret->add_option("--query", o.query)->required();
  ret->add_option("--k", o.k);
  ret->add_option("--split", o.retrieve_split, "train|test|all")->capture_default_str();
  ret->add_option("--out", o.out, "Result JSON (default stdout)");

  auto* matrix = app.add_subcommand("run-matrix", "One model per prompt policy, evaluated on the test split");
  matrix->add_option("--manifests", o.manifests)->required();
  matrix->add_option("--policies", o.policies, "Policies (default: the six canonical ones)");
  add_training_flags(matrix, o);
  matrix->add_option("--template", o.template_);
  matrix->add_option("--k", o.ks, "Precision@K cutoffs");
  matrix->add_option("--out", o.out, "Output directory")->required();

  auto* synth = app.add_subcommand("synth-corpus", "Generate the synthetic burst-train corpus");
  synth->add_option("--spec", o.spec, "Spec JSON (default: built-in four-class spec)");
  synth->add_option("--out", o.out, "Output directory")->required();

  auto* report = app.add_subcommand("report", "Render report JSONs to CSV and SVG");
  report->add_option("--in", o.inputs)->required();
  report->add_option("--out", o.out, "Output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 1;
  }

  try {
    if (*extract) return cmd_extract(o);
    if (*prompt) return cmd_prompt(o);
    if (*train) return cmd_train(o);
    if (*zs) return cmd_eval_zeroshot(o);
    if (*loo) return cmd_eval_loo(o);
    if (*ft) return cmd_finetune(o);
    if (*ret) return cmd_retrieve(o);
    if (*matrix) return cmd_run_matrix(o);
    if (*synth) return cmd_synth(o, seed_opt->count() > 0);
    if (*report) return cmd_report(o);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return is_validation_error(e.code()) ? 1 : 2;
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 1;
}
