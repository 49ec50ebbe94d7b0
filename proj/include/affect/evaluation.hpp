#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "affect/clap_model.hpp"
#include "affect/dataset.hpp"
#include "affect/prompting.hpp"

namespace affect {

inline constexpr const char* kReportSchema = "affect-clap-report/1";

struct ClassStats {
  std::size_t support = 0;
  std::size_t correct = 0;

  double accuracy() const { return support ? static_cast<double>(correct) / static_cast<double>(support) : 0.0; }
  bool operator==(const ClassStats&) const = default;
};

struct PrecisionEntry {
  std::string query;
  std::size_t k = 0;
  std::size_t relevant = 0;
  double precision = 0.0;

  bool operator==(const PrecisionEntry&) const = default;
};

struct EvalReport {
  std::string protocol;
  std::size_t total = 0;
  std::size_t correct = 0;
  double accuracy = 0.0;
  std::map<std::string, ClassStats> per_class;
  std::map<std::string, std::map<std::string, std::size_t>> confusion;  // truth -> predicted -> count
  std::vector<PrecisionEntry> precision_at_k;
  std::vector<std::string> unseen_classes;
  std::optional<double> unseen_recall;
  nlohmann::json metadata = nlohmann::json::object();

  // Mean precision over all entries with the given K; 0 when none.
  double mean_precision(std::size_t k) const;

  nlohmann::json to_json() const;
  // Throws SchemaMismatch.
  static EvalReport from_json(const nlohmann::json& j);
  bool operator==(const EvalReport&) const = default;
};

struct Prediction {
  std::string clip_id;
  std::string truth;
  std::string predicted;
  double score = 0.0;
};

struct ClassificationResult {
  EvalReport report;
  std::vector<Prediction> predictions;
};

// Accuracy, per-class accuracy and confusion counts from predictions.
EvalReport classification_report(const std::string& protocol, const std::vector<Prediction>& predictions);

// Checks that `features` were produced by the featurizer the model expects.
void require_compatible(const ClapModel& model, const FeatureSet& features);

// Predicts, for every clip, the candidate label whose templated text
// embedding has the highest cosine with the clip's audio embedding. The
// template must contain "{label}". Ties go to the first label in sorted
// order.
ClassificationResult zero_shot_classify(const ClapModel& model, const FeatureSet& clips,
                                        const std::vector<std::string>& candidate_labels,
                                        const std::string& label_template = "{label}");

std::string apply_template(const std::string& label_template, const std::string& label);

struct RetrievalQuery {
  std::string text;  // normalized
  ParsedPrompt parsed;

  static RetrievalQuery parse(std::string_view text);
};

struct RankedClip {
  std::string clip_id;
  double score = 0.0;
};

struct RetrievalResult {
  std::string query;
  std::size_t k_requested = 0;
  std::size_t k = 0;
  bool clamped = false;
  std::vector<RankedClip> ranked;
};

// Top-K clips by cosine between audio embedding and query embedding, ties
// broken by ascending clip id. K larger than the corpus is clamped and
// flagged. Throws EmptyCorpus.
RetrievalResult retrieve_top_k(const ClapModel& model, const FeatureSet& corpus, const RetrievalQuery& query,
                               std::size_t k);

// Ranking over precomputed unit audio embeddings; used by retrieve_top_k.
RetrievalResult rank_by_cosine(const std::vector<std::string>& clip_ids, const std::vector<std::vector<double>>& embeddings,
                               std::span<const double> query_embedding, const std::string& query_text, std::size_t k);

struct GroundTruth {
  AcousticProfile profile;
  std::string emotion;
  std::optional<Sex> sex;
};

std::map<std::string, GroundTruth> ground_truth(const FeatureSet& clips);

// A clip is relevant when its own prompt of the query's kind equals the
// query text; CLASS queries compare emotion only.
bool is_relevant(const RetrievalQuery& query, const GroundTruth& truth, const BinThresholds& t = {});

// Throws MissingGroundTruth.
double precision_at_k(const RetrievalResult& result, const RetrievalQuery& query,
                      const std::map<std::string, GroundTruth>& truth, const BinThresholds& t = {});

// Every distinct acoustic prompt realised by at least one clip in `clips`,
// sorted. Sex-aware pitch queries are added for clips with a known sex.
std::vector<std::string> acoustic_queries(const FeatureSet& clips, const BinThresholds& t = {});

// Precision@K for each query and K; the report's metadata carries the mean
// per K under "mean_precision_at_k".
EvalReport retrieval_report(const ClapModel& model, const FeatureSet& corpus, const std::vector<std::string>& queries,
                            const std::vector<std::size_t>& ks, const BinThresholds& t = {});

}  // namespace affect
