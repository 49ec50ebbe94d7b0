#include "affect/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "affect/checkpoint.hpp"
#include "affect/error.hpp"
#include "affect/featurizers.hpp"

namespace affect {

double EvalReport::mean_precision(std::size_t k) const {
  double sum = 0.0;
  std::size_t n = 0;
  for (const auto& e : precision_at_k) {
    if (e.k != k) continue;
    sum += e.precision;
    ++n;
  }
  return n ? sum / static_cast<double>(n) : 0.0;
}

nlohmann::json EvalReport::to_json() const {
  nlohmann::json j;
  j["schema"] = kReportSchema;
  j["protocol"] = protocol;
  j["total"] = total;
  j["correct"] = correct;
  j["accuracy"] = accuracy;
  nlohmann::json classes = nlohmann::json::object();
  for (const auto& [label, s] : per_class)
    classes[label] = {{"support", s.support}, {"correct", s.correct}, {"accuracy", s.accuracy()}};
  j["per_class"] = classes;
  j["confusion"] = confusion;
  nlohmann::json pk = nlohmann::json::array();
  for (const auto& e : precision_at_k)
    pk.push_back({{"query", e.query}, {"k", e.k}, {"relevant", e.relevant}, {"precision", e.precision}});
  j["precision_at_k"] = pk;
  j["unseen_classes"] = unseen_classes;
  j["unseen_recall"] = unseen_recall ? nlohmann::json(*unseen_recall) : nlohmann::json(nullptr);
  j["metadata"] = metadata;
  return j;
}

EvalReport EvalReport::from_json(const nlohmann::json& j) {
  if (!j.is_object() || j.value("schema", std::string()) != kReportSchema)
    throw Error(ErrorCode::SchemaMismatch, std::string("report schema must be '") + kReportSchema + "'");
  EvalReport r;
  try {
    r.protocol = j.at("protocol").get<std::string>();
    r.total = j.at("total").get<std::size_t>();
    r.correct = j.at("correct").get<std::size_t>();
    r.accuracy = j.at("accuracy").get<double>();
    for (const auto& [label, s] : j.at("per_class").items())
      r.per_class[label] = ClassStats{s.at("support").get<std::size_t>(), s.at("correct").get<std::size_t>()};
    r.confusion = j.at("confusion").get<std::map<std::string, std::map<std::string, std::size_t>>>();
    for (const auto& e : j.at("precision_at_k"))
      r.precision_at_k.push_back(PrecisionEntry{e.at("query").get<std::string>(), e.at("k").get<std::size_t>(),
                                                e.at("relevant").get<std::size_t>(), e.at("precision").get<double>()});
    r.unseen_classes = j.at("unseen_classes").get<std::vector<std::string>>();
    if (!j.at("unseen_recall").is_null()) r.unseen_recall = j.at("unseen_recall").get<double>();
    r.metadata = j.at("metadata");
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::SchemaMismatch, e.what());
  }
  return r;
}

EvalReport classification_report(const std::string& protocol, const std::vector<Prediction>& predictions) {
  EvalReport r;
  r.protocol = protocol;
  for (const auto& p : predictions) {
    auto& s = r.per_class[p.truth];
    s.support += 1;
    r.total += 1;
    if (p.truth == p.predicted) {
      s.correct += 1;
      r.correct += 1;
    }
    r.confusion[p.truth][p.predicted] += 1;
  }
  r.accuracy = r.total ? static_cast<double>(r.correct) / static_cast<double>(r.total) : 0.0;
  return r;
}

void require_compatible(const ClapModel& model, const FeatureSet& features) {
  require_featurizer(model, features.featurizer_hash);
  for (const auto& c : features.clips)
    if (c.audio_features.size() != model.config.audio_dim)
      throw Error(ErrorCode::FeaturizerMismatch, "clip '" + c.record.clip_id + "' has " +
                                                     std::to_string(c.audio_features.size()) + " audio features");
}

std::string apply_template(const std::string& label_template, const std::string& label) {
  const std::string slot = "{label}";
  const auto pos = label_template.find(slot);
  if (pos == std::string::npos) throw Error(ErrorCode::InvalidArgument, "template must contain {label}");
  std::string out = label_template;
  out.replace(pos, slot.size(), label);
  return normalize_text(out);
}

ClassificationResult zero_shot_classify(const ClapModel& model, const FeatureSet& clips,
                                        const std::vector<std::string>& candidate_labels,
                                        const std::string& label_template) {
  require_compatible(model, clips);
  std::set<std::string> unique;
  for (const auto& l : candidate_labels) {
    const std::string n = normalize_text(l);
    if (!n.empty()) unique.insert(n);
  }
  if (unique.empty()) throw Error(ErrorCode::EmptyCandidates, "no candidate labels");
  const std::vector<std::string> labels(unique.begin(), unique.end());

  std::vector<std::vector<double>> text_emb;
  for (const auto& l : labels)
    text_emb.push_back(project_text(model, encode_text(apply_template(label_template, l), model.config.text_dim)));

  ClassificationResult out;
  for (const auto& c : clips.clips) {
    const auto audio = project_audio(model, c.audio_features);
    std::size_t best = 0;
    double best_score = dot(audio, text_emb[0]);
    for (std::size_t i = 1; i < labels.size(); ++i) {
      const double s = dot(audio, text_emb[i]);
      if (s > best_score) {
        best_score = s;
        best = i;
      }
    }
    out.predictions.push_back(Prediction{c.record.clip_id, c.record.emotion, labels[best], best_score});
  }
  out.report = classification_report("zero-shot", out.predictions);
  out.report.metadata["candidates"] = labels;
  out.report.metadata["template"] = label_template;
  return out;
}

RetrievalQuery RetrievalQuery::parse(std::string_view text) {
  RetrievalQuery q;
  q.text = normalize_text(text);
  if (q.text.empty()) throw Error(ErrorCode::EmptyText, "retrieval query is empty");
  q.parsed = parse_prompt(q.text);
  return q;
}

RetrievalResult rank_by_cosine(const std::vector<std::string>& clip_ids, const std::vector<std::vector<double>>& embeddings,
                               std::span<const double> query_embedding, const std::string& query_text, std::size_t k) {
  if (clip_ids.empty()) throw Error(ErrorCode::EmptyCorpus, "retrieval corpus is empty");
  if (k == 0) throw Error(ErrorCode::InvalidArgument, "K must be at least 1");
  RetrievalResult r;
  r.query = query_text;
  r.k_requested = k;
  r.k = std::min(k, clip_ids.size());
  r.clamped = k > clip_ids.size();
  std::vector<RankedClip> all;
  all.reserve(clip_ids.size());
  for (std::size_t i = 0; i < clip_ids.size(); ++i) all.push_back(RankedClip{clip_ids[i], dot(embeddings[i], query_embedding)});
  auto order = [](const RankedClip& a, const RankedClip& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.clip_id < b.clip_id;
  };
  std::partial_sort(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(r.k), all.end(), order);
  all.resize(r.k);
  r.ranked = std::move(all);
  return r;
}

namespace {

struct AudioIndex {
  std::vector<std::string> ids;
  std::vector<std::vector<double>> embeddings;
};

AudioIndex index_corpus(const ClapModel& model, const FeatureSet& corpus) {
  AudioIndex idx;
  for (const auto& c : corpus.clips) {
    idx.ids.push_back(c.record.clip_id);
    idx.embeddings.push_back(project_audio(model, c.audio_features));
  }
  return idx;
}

}  // namespace

RetrievalResult retrieve_top_k(const ClapModel& model, const FeatureSet& corpus, const RetrievalQuery& query,
                               std::size_t k) {
  require_compatible(model, corpus);
  if (corpus.clips.empty()) throw Error(ErrorCode::EmptyCorpus, "retrieval corpus is empty");
  const AudioIndex idx = index_corpus(model, corpus);
  const auto q = project_text(model, encode_text(query.text, model.config.text_dim));
  return rank_by_cosine(idx.ids, idx.embeddings, q, query.text, k);
}

std::map<std::string, GroundTruth> ground_truth(const FeatureSet& clips) {
  std::map<std::string, GroundTruth> out;
  for (const auto& c : clips.clips) out[c.record.clip_id] = GroundTruth{c.profile, c.record.emotion, c.record.sex};
  return out;
}

bool is_relevant(const RetrievalQuery& query, const GroundTruth& truth, const BinThresholds& t) {
  const auto& q = query.parsed;
  if (q.kind == PromptKind::Class) return truth.emotion == q.emotion;
  if (q.kind == PromptKind::Pitch && !truth.profile.mean_pitch_hz) return false;
  const PromptPolicy policy({q.kind}, q.sex.has_value());
  return render_prompt(q.kind, truth.profile, truth.emotion, truth.sex, policy, t).text == query.text;
}

double precision_at_k(const RetrievalResult& result, const RetrievalQuery& query,
                      const std::map<std::string, GroundTruth>& truth, const BinThresholds& t) {
  if (result.k == 0) return 0.0;
  std::size_t relevant = 0;
  for (std::size_t i = 0; i < result.k && i < result.ranked.size(); ++i) {
    const auto it = truth.find(result.ranked[i].clip_id);
    if (it == truth.end())
      throw Error(ErrorCode::MissingGroundTruth, "no ground truth for clip '" + result.ranked[i].clip_id + "'");
    if (is_relevant(query, it->second, t)) ++relevant;
  }
  return static_cast<double>(relevant) / static_cast<double>(result.k);
}

std::vector<std::string> acoustic_queries(const FeatureSet& clips, const BinThresholds& t) {
  std::set<std::string> out;
  const PromptPolicy agnostic(std::vector<PromptKind>(kAllPromptKinds.begin(), kAllPromptKinds.end()), false);
  const PromptPolicy aware(std::vector<PromptKind>(kAllPromptKinds.begin(), kAllPromptKinds.end()), true);
  for (const auto& c : clips.clips) {
    for (const auto& p : augment_pairs(c.record.clip_id, c.profile, c.record.emotion, c.record.sex, agnostic, t))
      if (p.prompt.kind != PromptKind::Class) out.insert(p.prompt.text);
    if (c.record.sex && c.profile.mean_pitch_hz)
      out.insert(render_prompt(PromptKind::Pitch, c.profile, c.record.emotion, c.record.sex, aware, t).text);
  }
  return {out.begin(), out.end()};
}

EvalReport retrieval_report(const ClapModel& model, const FeatureSet& corpus, const std::vector<std::string>& queries,
                            const std::vector<std::size_t>& ks, const BinThresholds& t) {
  require_compatible(model, corpus);
  if (corpus.clips.empty()) throw Error(ErrorCode::EmptyCorpus, "retrieval corpus is empty");
  const AudioIndex idx = index_corpus(model, corpus);
  const auto truth = ground_truth(corpus);
  EvalReport r;
  r.protocol = "retrieval";
  for (const auto& text : queries) {
    const RetrievalQuery q = RetrievalQuery::parse(text);
    const auto emb = project_text(model, encode_text(q.text, model.config.text_dim));
    for (std::size_t k : ks) {
      const RetrievalResult res = rank_by_cosine(idx.ids, idx.embeddings, emb, q.text, k);
      const double p = precision_at_k(res, q, truth, t);
      r.precision_at_k.push_back(
          PrecisionEntry{q.text, res.k, static_cast<std::size_t>(std::lround(p * static_cast<double>(res.k))), p});
    }
  }
  nlohmann::json means = nlohmann::json::object();
  for (std::size_t k : ks) {
    const std::size_t kk = std::min(k, corpus.clips.size());
    means[std::to_string(kk)] = r.mean_precision(kk);
  }
  r.metadata["mean_precision_at_k"] = means;
  r.metadata["queries"] = queries.size();
  return r;
}

}  // namespace affect
