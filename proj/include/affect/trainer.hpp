#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "affect/clap_model.hpp"

namespace affect {

class Rng;

struct TrainConfig {
  double learning_rate = 1e-4;
  std::size_t batch_size = 128;
  std::size_t epochs = 30;
  std::uint64_t seed = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  // Keep pairs that share a clip out of the same batch.
  bool one_pair_per_clip = true;

  void validate() const;
  AdamConfig adam() const { return AdamConfig{learning_rate, beta1, beta2, epsilon}; }
};

// One audio-text pair with both feature vectors precomputed.
struct TrainingPair {
  std::string clip_id;
  std::string text;
  std::vector<double> audio;
  std::vector<double> text_features;
};

struct LossRecord {
  std::size_t batch_index = 0;
  std::size_t epoch = 0;
  double loss = 0.0;
  double l_text = 0.0;
  double l_audio = 0.0;
  double tau = 0.0;
};

struct TrainResult {
  ClapModel model;
  std::vector<LossRecord> history;
};

// Shuffles `clip_ids` indices with `rng` and packs them into full batches
// of `batch_size`, each holding at most one index per clip id when
// `one_pair_per_clip` is set. Indices that cannot complete a batch are
// dropped.
std::vector<std::vector<std::size_t>> make_batches(const std::vector<std::string>& clip_ids, std::size_t batch_size,
                                                   bool one_pair_per_clip, Rng& rng);

// Throws InsufficientPairs or NonFiniteLoss.
TrainResult train(const std::vector<TrainingPair>& pairs, const TrainConfig& cfg, const ClapModel& model_init);

std::string loss_history_csv(const std::vector<LossRecord>& history);

}  // namespace affect
