#pragma once

#include <set>
#include <string>
#include <vector>

#include "affect/clap_model.hpp"
#include "affect/dataset.hpp"
#include "affect/evaluation.hpp"
#include "affect/finetune.hpp"
#include "affect/trainer.hpp"

namespace affect {

// Everything one experiment needs besides the data.
struct ExperimentConfig {
  FeaturizerConfig featurizer;
  TrainConfig train;
  std::size_t embed_dim = 32;
  bool tau_learnable = true;
  double tau_init = 1.0 / 0.07;
  double tau_max = 100.0;
  BinThresholds thresholds;
  std::string label_template = "{label}";
  std::vector<std::size_t> retrieval_ks = {10};
  HeadConfig head;

  ModelConfig model_config() const;
  nlohmann::json to_json() const;
};

// Trains from a fresh initialization (seeded by cfg.train.seed) on pairs
// built from `clips` under `policy`.
TrainResult train_policy(const std::vector<ClipData>& clips, const PromptPolicy& policy, const ExperimentConfig& cfg);

struct LeaveOneOutResult {
  ClapModel model;
  EvalReport report;
  std::set<std::string> training_clip_ids;
  std::vector<Prediction> predictions;
};

// Trains on every dataset except `held_out` and classifies the held-out
// clips zero-shot with the held-out class list. Evaluation uses the
// held-out test split when it has one, otherwise every held-out clip.
// Throws UnknownDataset or LeakageDetected.
LeaveOneOutResult leave_one_out_run(const FeatureSet& all, const std::string& held_out, const PromptPolicy& policy,
                                    const ExperimentConfig& cfg);

// Held-out clips used for evaluation by leave_one_out_run.
FeatureSet held_out_eval_split(const FeatureSet& all, const std::string& held_out);

struct FinetuneRunResult {
  FinetuneHead head;
  EvalReport report;
  std::string checkpoint_hash_before;
  std::string checkpoint_hash_after;
};

// Trains a head on the train split of `data` and evaluates on its test
// split. The model's checkpoint hash is recorded before and after.
FinetuneRunResult finetune_run(const ClapModel& model, const FeatureSet& data, const HeadConfig& head_cfg);

// One model per policy on the train split, each evaluated zero-shot and by
// precision@K retrieval on the test split. Identical seeds and data for
// every policy.
std::vector<EvalReport> run_matrix(const FeatureSet& data, const std::vector<PromptPolicy>& policies,
                                   const ExperimentConfig& cfg);

}  // namespace affect
