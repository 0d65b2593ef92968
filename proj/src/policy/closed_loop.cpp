#include "sockweave/policy/closed_loop.hpp"

#include "sockweave/diff/fpenv.hpp"
#include "sockweave/diff/random.hpp"
#include "sockweave/policy/inputs.hpp"

#include <atomic>
#include <cstdlib>
#include <thread>

namespace sockweave::policy {

Rollout run_loop(const RolloutSpec& spec, const Controller& controller, int steps, const sim::SimConfig& config) {
  Rollout r;
  r.spec = spec;
  const auto foot = sim::make_foot(spec.foot_angle, spec.foot_size, config);
  auto state = sim::initial_state(foot, spec.seed, config);
  for (int t = 0; t < steps; ++t) {
    const auto targets = controller(sim::sense(state));
    if (!targets[0].allFinite() || !targets[1].allFinite()) {
      state.non_finite = true;
      break;
    }
    r.actions.push_back(targets);
    sim::step_sim(state, targets);
    if (state.non_finite) break;
  }
  r.report = sim::judge(state);
  r.final_state = std::move(state);
  return r;
}

PolicyController::PolicyController(const ModelParams<float>& params, sim::SimConfig config)
    : params_(&params), state_(RecurrentState<float>::zeros(params.config, 1)), sim_config_(std::move(config)) {}

Targets PolicyController::operator()(const sim::Sensation& s) {
  if (tick_++ % params_->config.control_stride != 0) return held_;
  diff::NoGradGuard no_grad;
  const auto& p = *params_;
  const auto& cfg = p.config;
  const diff::Index H = s.depth.rows(), W = s.depth.cols();
  const auto img = image_channels(s.sock_mask, s.foot_mask, s.depth, s.gray, cfg);
  diff::Tensor<float> frames({1, 2, H, W}, Eigen::Map<const Eigen::VectorXf>(img.data(), diff::Index(img.size())));
  diff::Tensor<float> depth({1, 1, H, W}, Eigen::Map<const Eigen::VectorXf>(s.depth.data(), H * W));
  const auto seen = perceive(frames, depth, p);

  auto row = [](const Eigen::VectorXd& v) {
    return diff::Tensor<float>({1, v.size()}, Eigen::VectorXf(v.cast<float>()));
  };
  ModalityInput<float> in{{seen.keypoints, row(normalize(s.body.angles, p.stats.angles)),
                           row(normalize(s.body.torques, p.stats.torques)),
                           row(normalize(s.body.tactile, p.stats.tactile))}};
  auto [next, out] = hlstm_step(in, state_, p);
  state_ = std::move(next);

  const Eigen::VectorXd angles = denormalize(out.pred[kAngles].value(), p.stats.angles);
  Targets t;
  for (int i = 0; i < 2; ++i) {
    const int off = sim::kAngleDims / 2 * i;
    t[i] = sim::forward_kinematics(sim::arm_geom(sim_config_, i), Eigen::Vector2d(angles[off], angles[off + 1]));
  }
  held_ = t;
  return t;
}

std::vector<RolloutSpec> rollout_specs(std::span<const double> angles, std::span<const double> sizes, int count,
                                       std::uint64_t seed) {
  if (angles.empty() || sizes.empty() || count < 0) {
    throw std::invalid_argument("rollout_specs: need at least one angle and size and a non-negative count");
  }
  diff::Rng rng(seed);
  std::vector<RolloutSpec> out;
  const auto A = angles.size(), S = sizes.size();
  for (int i = 0; i < count; ++i) {
    const auto k = static_cast<std::size_t>(i);
    out.push_back({angles[k % A], sizes[(k / A) % S], rng.next()});
  }
  return out;
}

Rollout act_closed_loop(const ModelParams<float>& params, const RolloutSpec& spec, int steps,
                        const sim::SimConfig& config) {
  diff::FlushDenormalsGuard ftz;
  PolicyController controller(params, config);
  return run_loop(spec, std::ref(controller), steps, config);
}

int thread_budget() {
  int n = static_cast<int>(std::thread::hardware_concurrency());
  if (const char* env = std::getenv("SOCKWEAVE_THREADS")) {
    const int cap = std::atoi(env);
    if (cap > 0) n = cap;
  }
  return std::max(n, 1);
}

std::vector<Rollout> evaluate(const ModelParams<float>& params, std::span<const RolloutSpec> specs, int steps,
                              const sim::SimConfig& config) {
  std::vector<Rollout> results(specs.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i; (i = next++) < specs.size();) results[i] = act_closed_loop(params, specs[i], steps, config);
  };
  const int n = std::min<int>(thread_budget(), static_cast<int>(specs.size()));
  if (n <= 1) {
    worker();
    return results;
  }
  std::vector<std::jthread> pool;
  for (int i = 0; i < n; ++i) pool.emplace_back(worker);
  return results;
}

nlohmann::ordered_json rollout_json(const Rollout& r) {
  const auto& pk = r.report.peak_tactile;
  return {{"seed", r.spec.seed},
          {"foot_angle", r.spec.foot_angle},
          {"foot_size", r.spec.foot_size},
          {"success", r.report.success},
          {"failure_reason", sim::to_string(r.report.failure)},
          {"phase_peaks_N", {pk[0], pk[1], pk[2]}}};
}

nlohmann::ordered_json report_json(std::span<const Rollout> rollouts) {
  int successes = 0;
  auto episodes = nlohmann::ordered_json::array();
  for (const auto& r : rollouts) {
    successes += r.report.success;
    episodes.push_back(rollout_json(r));
  }
  const double rate = rollouts.empty() ? 0.0 : double(successes) / double(rollouts.size());
  return {{"episodes", rollouts.size()}, {"successes", successes}, {"success_rate", rate}, {"rollouts", episodes}};
}

}  // namespace sockweave::policy
