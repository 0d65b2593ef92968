#pragma once

#include "sockweave/episode.hpp"
#include "sockweave/policy/model.hpp"
#include "sockweave/trainer/loss.hpp"

#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

namespace sockweave::trainer {

class NumericalAbort : public std::runtime_error {
 public:
  NumericalAbort(int epoch, int group, const std::string& what)
      : std::runtime_error(what), epoch(epoch), group(group) {}
  int epoch;
  int group;
};

struct TrainConfig {
  int epochs = 2000;
  double lr = 1e-3;
  std::uint64_t seed = 0;
  // Episodes per Adam update; 0 means the whole dataset (full batch).
  int batch_episodes = 0;
  std::optional<std::filesystem::path> loss_log;
  std::function<void(int epoch, const LossBreakdown&)> on_epoch;
};

struct TrainResult {
  policy::ModelParams<float> params;
  std::vector<LossBreakdown> curve;  // one entry per epoch
};

/// Configuration for one of the ablation variants.
policy::ModelConfig build_variant(policy::Variant kind);
policy::ModelConfig build_variant(const std::string& kind);

void write_loss_header(std::ostream& out);
void write_loss_row(std::ostream& out, int epoch, const LossBreakdown& l);

TrainResult train(std::span<const EpisodeRecord> episodes, const policy::ModelConfig& cfg, const TrainConfig& tc);

}  // namespace sockweave::trainer
