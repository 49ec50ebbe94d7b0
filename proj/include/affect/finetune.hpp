#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "affect/clap_model.hpp"
#include "affect/dataset.hpp"
#include "affect/evaluation.hpp"

namespace affect {

struct HeadConfig {
  std::size_t hidden1 = 0;  // 0: embedding dimension
  std::size_t hidden2 = 0;  // 0: half the embedding dimension
  std::size_t epochs = 100;
  std::size_t batch_size = 32;
  double learning_rate = 1e-3;
  std::uint64_t seed = 0;

  nlohmann::json to_json() const;
};

// Three fully connected layers with ReLU between them and a softmax output,
// trained on frozen audio embeddings.
struct FinetuneHead {
  std::vector<std::string> classes;  // sorted, unique
  Matrix w1, w2, w3;
  std::vector<double> b1, b2, b3;

  static FinetuneHead initialize(std::size_t input_dim, std::vector<std::string> classes, const HeadConfig& cfg);

  std::size_t input_dim() const { return w1.cols(); }
  std::vector<double> logits(std::span<const double> x) const;
  std::vector<double> probabilities(std::span<const double> x) const;
  std::size_t predict(std::span<const double> x) const;

  // Mean softmax cross-entropy over the rows of `x`; fills `grad` (flattened
  // like flatten()) when non-null.
  double loss(const Matrix& x, const std::vector<std::size_t>& labels, std::vector<double>* grad = nullptr) const;

  std::size_t parameter_count() const;
  std::vector<double> flatten() const;
  void assign(std::span<const double> flat);
};

// Trains a head on E_a of `train` with Adam; `model` is only read. Throws
// InsufficientData when there are fewer samples than classes.
FinetuneHead finetune_head(const ClapModel& model, const FeatureSet& train, const HeadConfig& cfg);

// Frozen audio embeddings, one row per clip.
Matrix audio_embeddings(const ClapModel& model, const FeatureSet& clips);

ClassificationResult finetune_classify(const ClapModel& model, const FinetuneHead& head, const FeatureSet& test);

}  // namespace affect
