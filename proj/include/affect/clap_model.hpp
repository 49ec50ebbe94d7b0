#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "affect/matrix.hpp"

namespace affect {

struct ModelConfig {
  std::size_t audio_dim = 68;
  std::size_t text_dim = 48;
  std::size_t embed_dim = 32;
  std::string featurizer_hash;
  bool tau_learnable = true;
  double tau_init = 1.0 / 0.07;
  double tau_max = 100.0;

  bool operator==(const ModelConfig&) const = default;
};

// Learnable part of the model: one affine projection per modality into the
// joint space, and the logit temperature tau = exp(log_tau).
struct ClapModel {
  ModelConfig config;
  Matrix w_audio;                // embed_dim x audio_dim
  std::vector<double> b_audio;   // embed_dim
  Matrix w_text;                 // embed_dim x text_dim
  std::vector<double> b_text;    // embed_dim
  double log_tau = 0.0;
  std::uint64_t seed = 0;

  // Uniform(+-1/sqrt(fan_in)) weights and biases, tau at config.tau_init.
  static ClapModel initialize(const ModelConfig& config, std::uint64_t seed);

  double tau() const;
  // Throws DimensionMismatch / InvalidArgument on inconsistent state.
  void validate() const;

  std::size_t parameter_count() const;
  // Layout: w_audio, b_audio, w_text, b_text, log_tau.
  std::vector<double> flatten() const;
  void assign(std::span<const double> flat);

  bool operator==(const ClapModel&) const = default;
};

struct EmbeddingBatch {
  Matrix audio;  // N x d, unit rows
  Matrix text;   // N x d, unit rows
};

// Rows of `audio_features` (N x V) and `text_features` (N x U) are projected
// and L2-normalized. Throws DimensionMismatch or DegenerateEmbedding.
EmbeddingBatch project(const ClapModel& model, const Matrix& audio_features, const Matrix& text_features);

std::vector<double> project_audio(const ClapModel& model, std::span<const double> features);
std::vector<double> project_text(const ClapModel& model, std::span<const double> features);

// C[i][j] = tau * <text_i, audio_j>.
Matrix similarity(const ClapModel& model, const EmbeddingBatch& batch);
Matrix similarity(double tau, const EmbeddingBatch& batch);

struct LossValue {
  double loss = 0.0;
  double text = 0.0;   // cross-entropy along rows (text -> audio)
  double audio = 0.0;  // cross-entropy along columns (audio -> text)
};

// Symmetric cross-entropy with the diagonal as targets. Throws
// NonFiniteLogits; requires a square matrix with N >= 2.
LossValue contrastive_loss(const Matrix& logits);

struct Gradients {
  Matrix w_audio;
  std::vector<double> b_audio;
  Matrix w_text;
  std::vector<double> b_text;
  double log_tau = 0.0;
  LossValue loss;

  std::vector<double> flatten() const;
};

// Exact gradients of contrastive_loss(similarity(project(...))) with respect
// to every model parameter.
Gradients loss_gradients(const ClapModel& model, const Matrix& audio_features, const Matrix& text_features);

struct AdamConfig {
  double learning_rate = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

struct AdamState {
  std::vector<double> m;
  std::vector<double> v;
  std::uint64_t t = 0;

  static AdamState zeros(std::size_t n) { return AdamState{std::vector<double>(n, 0.0), std::vector<double>(n, 0.0), 0}; }
  bool operator==(const AdamState&) const = default;
};

// One bias-corrected Adam update in place.
void adam_step(std::span<double> params, std::span<const double> grads, AdamState& state, const AdamConfig& cfg);

// Adam on the whole model followed by clamping tau to (0, tau_max].
void adam_step(ClapModel& model, const Gradients& grads, AdamState& state, const AdamConfig& cfg);

}  // namespace affect
