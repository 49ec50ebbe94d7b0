#include "affect/trainer.hpp"

#include <cmath>
#include <iomanip>
#include <set>
#include <sstream>
#include <unordered_set>

#include "affect/error.hpp"
#include "affect/rng.hpp"

namespace affect {

void TrainConfig::validate() const {
  if (!(learning_rate > 0.0)) throw Error(ErrorCode::InvalidArgument, "learning rate must be positive");
  if (batch_size < 2) throw Error(ErrorCode::InvalidArgument, "batch size must be at least 2");
  if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0) || !(epsilon > 0.0))
    throw Error(ErrorCode::InvalidArgument, "Adam hyperparameters out of range");
}

std::vector<std::vector<std::size_t>> make_batches(const std::vector<std::string>& clip_ids, std::size_t batch_size,
                                                   bool one_pair_per_clip, Rng& rng) {
  std::vector<std::size_t> order(clip_ids.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  rng.shuffle(order);

  std::vector<std::vector<std::size_t>> batches;
  std::vector<std::size_t> pending;
  std::size_t next = 0;
  while (true) {
    std::vector<std::size_t> batch;
    std::unordered_set<std::string> used;
    std::vector<std::size_t> deferred;
    auto offer = [&](std::size_t idx) {
      if (batch.size() < batch_size && (!one_pair_per_clip || used.insert(clip_ids[idx]).second)) {
        batch.push_back(idx);
      } else {
        deferred.push_back(idx);
      }
    };
    // Earlier deferrals go first so no pair waits indefinitely.
    for (std::size_t idx : pending) offer(idx);
    while (batch.size() < batch_size && next < order.size()) offer(order[next++]);
    pending = std::move(deferred);
    if (batch.size() < batch_size) break;
    batches.push_back(std::move(batch));
  }
  return batches;
}

TrainResult train(const std::vector<TrainingPair>& pairs, const TrainConfig& cfg, const ClapModel& model_init) {
  cfg.validate();
  model_init.validate();
  const auto& mc = model_init.config;

  TrainResult result{model_init, {}};
  if (cfg.epochs == 0) return result;

  if (pairs.size() < cfg.batch_size)
    throw Error(ErrorCode::InsufficientPairs, std::to_string(pairs.size()) + " pairs for batch size " +
                                                  std::to_string(cfg.batch_size));
  std::vector<std::string> clip_ids;
  clip_ids.reserve(pairs.size());
  for (const auto& p : pairs) {
    if (p.audio.size() != mc.audio_dim || p.text_features.size() != mc.text_dim)
      throw Error(ErrorCode::DimensionMismatch, "training pair '" + p.clip_id + "' has wrong feature dimensions");
    clip_ids.push_back(p.clip_id);
  }
  if (cfg.one_pair_per_clip) {
    const std::set<std::string> distinct(clip_ids.begin(), clip_ids.end());
    if (distinct.size() < cfg.batch_size)
      throw Error(ErrorCode::InsufficientPairs, std::to_string(distinct.size()) + " distinct clips for batch size " +
                                                    std::to_string(cfg.batch_size));
  }

  Rng rng(cfg.seed);
  AdamState state = AdamState::zeros(model_init.parameter_count());
  const AdamConfig adam = cfg.adam();
  ClapModel& model = result.model;
  Matrix audio(cfg.batch_size, mc.audio_dim);
  Matrix text(cfg.batch_size, mc.text_dim);
  std::size_t batch_index = 0;

  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    for (const auto& batch : make_batches(clip_ids, cfg.batch_size, cfg.one_pair_per_clip, rng)) {
      for (std::size_t r = 0; r < batch.size(); ++r) {
        const auto& p = pairs[batch[r]];
        std::copy(p.audio.begin(), p.audio.end(), audio.row(r).begin());
        std::copy(p.text_features.begin(), p.text_features.end(), text.row(r).begin());
      }
      const Gradients g = loss_gradients(model, audio, text);
      if (!std::isfinite(g.loss.loss))
        throw Error(ErrorCode::NonFiniteLoss, "loss became non-finite at epoch " + std::to_string(epoch) + ", batch " +
                                                  std::to_string(batch_index) + " (tau=" + std::to_string(model.tau()) + ")");
      result.history.push_back(LossRecord{batch_index++, epoch, g.loss.loss, g.loss.text, g.loss.audio, model.tau()});
      adam_step(model, g, state, adam);
    }
  }
  for (double v : model.flatten())
    if (!std::isfinite(v)) throw Error(ErrorCode::NonFiniteLoss, "training produced non-finite parameters");
  return result;
}

std::string loss_history_csv(const std::vector<LossRecord>& history) {
  std::ostringstream out;
  out << "batch_index,epoch,loss,l_text,l_audio,tau\n";
  out << std::setprecision(17);
  for (const auto& r : history)
    out << r.batch_index << ',' << r.epoch << ',' << r.loss << ',' << r.l_text << ',' << r.l_audio << ',' << r.tau << '\n';
  return out.str();
}

}  // namespace affect
