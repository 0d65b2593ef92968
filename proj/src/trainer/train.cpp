#include "sockweave/trainer/train.hpp"

#include "sockweave/diff/adam.hpp"
#include "sockweave/diff/fpenv.hpp"
#include "sockweave/trainer/dataset.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>

namespace sockweave::trainer {

policy::ModelConfig build_variant(policy::Variant kind) { return policy::ModelConfig::for_variant(kind); }

policy::ModelConfig build_variant(const std::string& kind) { return build_variant(policy::parse_variant(kind)); }

void write_loss_header(std::ostream& out) { out << "epoch,L_img,L_angle,L_torque,L_tactile,L_pt,L_train\n"; }

void write_loss_row(std::ostream& out, int epoch, const LossBreakdown& l) {
  char buf[256];
  std::snprintf(buf, sizeof buf, "%d,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g\n", epoch, l.img, l.angle, l.torque, l.tactile, l.pt,
                l.total);
  out << buf;
}

TrainResult train(std::span<const EpisodeRecord> episodes, const policy::ModelConfig& cfg, const TrainConfig& tc) {
  if (episodes.empty()) throw std::invalid_argument("train: empty dataset");
  diff::FlushDenormalsGuard ftz;
  TrainResult result;
  const auto stats = compute_stats(episodes);
  result.params = policy::ModelParams<float>::init(cfg, tc.seed);
  result.params.stats = stats;

  const int n = static_cast<int>(episodes.size());
  const int per = tc.batch_episodes > 0 ? std::min(tc.batch_episodes, n) : n;
  std::vector<policy::SequenceBatch<float>> groups;
  for (int start = 0; start < n; start += per) {
    std::vector<const EpisodeRecord*> members;
    for (int i = start; i < std::min(n, start + per); ++i) members.push_back(&episodes[i]);
    groups.push_back(make_batch(members, cfg, stats));
  }

  std::ofstream log;
  if (tc.loss_log) {
    log.open(*tc.loss_log);
    if (!log) throw std::runtime_error("cannot write " + tc.loss_log->string());
    write_loss_header(log);
  }

  auto params = result.params.parameters();
  diff::AdamState<float> adam({tc.lr, 0.9, 0.999, 1e-8}, params);
  for (int epoch = 0; epoch < tc.epochs; ++epoch) {
    LossBreakdown epoch_loss;
    for (std::size_t g = 0; g < groups.size(); ++g) {
      const auto& seq = groups[g];
      auto terms = sequence_loss(seq, result.params);
      const auto v = values(terms);
      if (!std::isfinite(v.total)) {
        release_graph(terms.total);
        throw NumericalAbort(epoch, static_cast<int>(g),
                             "non-finite loss at epoch " + std::to_string(epoch) + ", batch " + std::to_string(g));
      }
      diff::backward(terms.total);
      diff::release_graph(terms.total);
      diff::adam_step(params, adam);
      epoch_loss += v.scaled(static_cast<double>(seq.batch) / (n * cfg.control_stride));
    }
    result.curve.push_back(epoch_loss);
    if (log) {
      write_loss_row(log, epoch, epoch_loss);
      log.flush();
    }
    if (tc.on_epoch) tc.on_epoch(epoch, epoch_loss);
  }
  return result;
}

}  // namespace sockweave::trainer
