#include "affect/protocols.hpp"

#include <algorithm>

#include <json.hpp>

#include "affect/checkpoint.hpp"
#include "affect/error.hpp"

namespace affect {

ModelConfig ExperimentConfig::model_config() const {
  ModelConfig m;
  m.audio_dim = featurizer.audio_dim();
  m.text_dim = featurizer.text_dim;
  m.embed_dim = embed_dim;
  m.featurizer_hash = featurizer.hash();
  m.tau_learnable = tau_learnable;
  m.tau_init = tau_init;
  m.tau_max = tau_max;
  return m;
}

nlohmann::json ExperimentConfig::to_json() const {
  return nlohmann::json{{"featurizer_hash", featurizer.hash()},
                        {"learning_rate", train.learning_rate},
                        {"batch_size", train.batch_size},
                        {"epochs", train.epochs},
                        {"seed", train.seed},
                        {"embed_dim", embed_dim},
                        {"tau_learnable", tau_learnable},
                        {"tau_init", tau_init},
                        {"tau_max", tau_max},
                        {"template", label_template},
                        {"head", head.to_json()}};
}

TrainResult train_policy(const std::vector<ClipData>& clips, const PromptPolicy& policy, const ExperimentConfig& cfg) {
  const auto pairs = make_training_pairs(clips, policy, cfg.featurizer, cfg.thresholds);
  const ClapModel init = ClapModel::initialize(cfg.model_config(), cfg.train.seed);
  return train(pairs, cfg.train, init);
}

FeatureSet held_out_eval_split(const FeatureSet& all, const std::string& held_out) {
  FeatureSet held = all.filter([&](const ClipData& c) { return c.record.dataset == held_out; });
  FeatureSet test = held.filter([](const ClipData& c) { return c.record.split == Split::Test; });
  return test.clips.empty() ? held : test;
}

LeaveOneOutResult leave_one_out_run(const FeatureSet& all, const std::string& held_out, const PromptPolicy& policy,
                                    const ExperimentConfig& cfg) {
  const bool known = std::any_of(all.clips.begin(), all.clips.end(),
                                 [&](const ClipData& c) { return c.record.dataset == held_out; });
  if (!known) throw Error(ErrorCode::UnknownDataset, "dataset '" + held_out + "' is not in the manifests");

  const FeatureSet training = all.filter([&](const ClipData& c) { return c.record.dataset != held_out; });
  if (training.clips.empty()) throw Error(ErrorCode::UnknownDataset, "no datasets left for training after holding out '" + held_out + "'");
  const FeatureSet held = all.filter([&](const ClipData& c) { return c.record.dataset == held_out; });
  const FeatureSet eval = held_out_eval_split(all, held_out);

  LeaveOneOutResult out;
  for (const auto& c : training.clips) out.training_clip_ids.insert(c.record.clip_id);
  for (const auto& c : held.clips)
    if (out.training_clip_ids.count(c.record.clip_id))
      throw Error(ErrorCode::LeakageDetected, "held-out clip '" + c.record.clip_id + "' is in the training set");

  auto trained = train_policy(training.clips, policy, cfg);
  out.model = std::move(trained.model);

  // Candidates come from the held-out dataset's own class list.
  const auto candidates = held.labels();
  auto result = zero_shot_classify(out.model, eval, candidates, cfg.label_template);
  out.predictions = std::move(result.predictions);
  out.report = std::move(result.report);
  out.report.protocol = "leave-one-out";

  const auto seen = training.labels();
  for (const auto& label : candidates)
    if (!std::binary_search(seen.begin(), seen.end(), label)) out.report.unseen_classes.push_back(label);
  std::size_t unseen_total = 0, unseen_correct = 0;
  for (const auto& p : out.predictions) {
    if (!std::binary_search(out.report.unseen_classes.begin(), out.report.unseen_classes.end(), p.truth)) continue;
    ++unseen_total;
    unseen_correct += p.truth == p.predicted ? 1 : 0;
  }
  if (unseen_total > 0) out.report.unseen_recall = static_cast<double>(unseen_correct) / static_cast<double>(unseen_total);

  out.report.metadata["held_out"] = held_out;
  out.report.metadata["policy"] = policy.name();
  out.report.metadata["training_clips"] = training.clips.size();
  out.report.metadata["checkpoint_hash"] = checkpoint_hash(out.model);
  out.report.metadata["config"] = cfg.to_json();
  return out;
}

FinetuneRunResult finetune_run(const ClapModel& model, const FeatureSet& data, const HeadConfig& head_cfg) {
  FinetuneRunResult out;
  out.checkpoint_hash_before = checkpoint_hash(model);
  const FeatureSet train_fold = data.filter([](const ClipData& c) { return c.record.split == Split::Train; });
  const FeatureSet test_fold = data.filter([](const ClipData& c) { return c.record.split == Split::Test; });
  if (test_fold.clips.empty()) throw Error(ErrorCode::InsufficientData, "no test clips to evaluate the finetuned head");
  out.head = finetune_head(model, train_fold, head_cfg);
  out.report = finetune_classify(model, out.head, test_fold).report;
  out.checkpoint_hash_after = checkpoint_hash(model);
  out.report.metadata["checkpoint_hash"] = out.checkpoint_hash_after;
  out.report.metadata["head"] = head_cfg.to_json();
  out.report.metadata["train_clips"] = train_fold.clips.size();
  return out;
}

std::vector<EvalReport> run_matrix(const FeatureSet& data, const std::vector<PromptPolicy>& policies,
                                   const ExperimentConfig& cfg) {
  if (policies.empty()) throw Error(ErrorCode::InvalidArgument, "run matrix needs at least one policy");
  const FeatureSet train_fold = data.filter([](const ClipData& c) { return c.record.split == Split::Train; });
  const FeatureSet test_fold = data.filter([](const ClipData& c) { return c.record.split == Split::Test; });
  if (test_fold.clips.empty()) throw Error(ErrorCode::InsufficientData, "run matrix needs test clips");
  const auto candidates = test_fold.labels();
  const auto queries = acoustic_queries(test_fold, cfg.thresholds);

  std::vector<EvalReport> reports;
  for (const auto& policy : policies) {
    const TrainResult trained = train_policy(train_fold.clips, policy, cfg);
    auto zs = zero_shot_classify(trained.model, test_fold, candidates, cfg.label_template);
    EvalReport report = std::move(zs.report);
    report.protocol = "matrix";
    const EvalReport retrieval = retrieval_report(trained.model, test_fold, queries, cfg.retrieval_ks, cfg.thresholds);
    report.precision_at_k = retrieval.precision_at_k;
    report.metadata["mean_precision_at_k"] = retrieval.metadata["mean_precision_at_k"];
    report.metadata["policy"] = policy.name();
    report.metadata["checkpoint_hash"] = checkpoint_hash(trained.model);
    report.metadata["train_clips"] = train_fold.clips.size();
    report.metadata["final_loss"] = trained.history.empty() ? 0.0 : trained.history.back().loss;
    report.metadata["config"] = cfg.to_json();
    reports.push_back(std::move(report));
  }
  return reports;
}

}  // namespace affect
