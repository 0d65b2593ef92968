#pragma once

#include "sockweave/policy/model.hpp"
#include "sockweave/sim/sim.hpp"

#include <json.hpp>

#include <array>
#include <functional>
#include <span>
#include <vector>

namespace sockweave::policy {

using Targets = std::array<sim::Vec2, 2>;
/// Maps the current sensation to the next gripper targets.
using Controller = std::function<Targets(const sim::Sensation&)>;

struct RolloutSpec {
  double foot_angle = 40.0;
  double foot_size = 2.5;
  std::uint64_t seed = 0;
};

struct Rollout {
  RolloutSpec spec;
  sim::PhaseReport report;
  std::vector<Targets> actions;
  sim::SimState final_state;
};

/// Drives the simulator for `steps` ticks. A non-finite command aborts the
/// rollout and marks it failed.
Rollout run_loop(const RolloutSpec& spec, const Controller& controller, int steps,
                 const sim::SimConfig& config = {});

/// Stateful policy wrapper: one hlstm_step every `control_stride` sensations,
/// recurrent state carried across calls, targets held in between.
class PolicyController {
 public:
  explicit PolicyController(const ModelParams<float>& params, sim::SimConfig config = {});
  Targets operator()(const sim::Sensation& s);

 private:
  const ModelParams<float>* params_;
  RecurrentState<float> state_;
  sim::SimConfig sim_config_;
  Targets held_{};
  long tick_ = 0;
};

/// Episode i uses angles[i % A], sizes[(i / A) % S] and the i-th draw of a
/// generator seeded with `seed`.
std::vector<RolloutSpec> rollout_specs(std::span<const double> angles, std::span<const double> sizes, int count,
                                       std::uint64_t seed);

Rollout act_closed_loop(const ModelParams<float>& params, const RolloutSpec& spec, int steps = 300,
                        const sim::SimConfig& config = {});

/// Worker count: SOCKWEAVE_THREADS if set, else the hardware concurrency.
int thread_budget();

/// Independent rollouts run in parallel; results keep the order of `specs`.
std::vector<Rollout> evaluate(const ModelParams<float>& params, std::span<const RolloutSpec> specs, int steps = 300,
                              const sim::SimConfig& config = {});

nlohmann::ordered_json rollout_json(const Rollout& r);
nlohmann::ordered_json report_json(std::span<const Rollout> rollouts);

}  // namespace sockweave::policy
