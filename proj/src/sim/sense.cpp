#include "sockweave/diff/random.hpp"
#include "sockweave/perception/perception.hpp"
#include "sockweave/sim/sim.hpp"

#include <algorithm>
#include <cmath>

namespace sockweave::sim {

namespace {

float quantized(float d) { return static_cast<float>(std::lround(std::clamp(d, 0.0f, 1.0f) * 65535.0) / 65535.0); }

}  // namespace

Sensation sense(const SimState& state) {
  Sensation out;
  auto view = perception::oracle_view(state);
  out.sock_mask = std::move(view.sock);
  out.foot_mask = std::move(view.foot);
  out.depth = view.depth.unaryExpr(&quantized);
  out.gray = render_gray(state);
  out.body = sense_body(state);
  return out;
}

perception::GrayImage render_gray(const SimState& state) {
  using perception::kImageSize;
  const auto sock = perception::oracle_segment(state, perception::Target::sock);
  const auto foot = perception::oracle_segment(state, perception::Target::foot);
  const auto& look = state.appearance;
  perception::GrayImage img(kImageSize, kImageSize);
  for (int r = 0; r < kImageSize; ++r) {
    for (int c = 0; c < kImageSize; ++c) {
      const Vec2 p = perception::pixel_center(r, c);
      double g;
      if (sock(r, c)) {
        g = look.sock_gray;
      } else if (foot(r, c)) {
        g = look.foot_gray;
      } else {
        g = look.background + look.gradient.dot(p - Vec2(3.2, 3.2));
        for (const auto& b : look.blobs) {
          if ((p - b.center).norm() < b.radius) g = b.gray;
        }
      }
      img(r, c) = static_cast<std::uint8_t>(std::lround(std::clamp(g, 0.0, 1.0) * 255.0));
    }
  }
  return img;
}

// ---------------------------------------------------------------------------
// Scripted demonstrator

namespace {

struct Waypoint {
  int tick;
  Vec2 top;   // (u, w) of gripper 0
  Vec2 sole;  // (u, w) of gripper 1
};

std::vector<Waypoint> expert_plan(const FootGeom& foot, diff::Rng& rng, double noise_scale) {
  const double L = foot.length;
  constexpr double clear = 0.15;
  const double open_w = 0.55;
  auto top_w = [&](double u) { return foot.top_half_width(std::max(u, 0.0)) + clear; };
  auto sole_w = [&](double u) { return foot.sole_half_width(std::max(u, 0.0)) + clear; };

  std::vector<Waypoint> plan{
      {0, {-0.9, 0.3}, {-0.9, -0.3}},
      {15, {-0.9, open_w}, {-0.9, -open_w}},
      {40, {-0.2, open_w}, {-0.2, -open_w}},
      {110, {0.6 * L, top_w(0.6 * L)}, {0.6 * L, -sole_w(0.6 * L)}},
      {135, {0.85 * L, top_w(0.85 * L)}, {0.85 * L, -(sole_w(0.85 * L) + 0.1)}},
      {160, {L + 0.3, top_w(L)}, {L + 0.3, -sole_w(L)}},
  };
  const double sigma = 0.02 * L * noise_scale;
  for (std::size_t k = 1; k < plan.size(); ++k) {
    for (Vec2* p : {&plan[k].top, &plan[k].sole}) {
      (*p)[0] += sigma * rng.normal();
      (*p)[1] += sigma * rng.normal();
    }
  }
  return plan;
}

std::array<Vec2, 2> plan_targets(const FootGeom& foot, const std::vector<Waypoint>& plan, int tick) {
  const Waypoint* a = &plan.front();
  const Waypoint* b = &plan.front();
  for (std::size_t k = 0; k < plan.size(); ++k) {
    if (plan[k].tick <= tick) a = &plan[k];
    if (plan[k].tick >= tick) {
      b = &plan[k];
      break;
    }
    b = &plan[k];
  }
  double t = 0.0;
  if (b->tick > a->tick) t = static_cast<double>(tick - a->tick) / (b->tick - a->tick);
  const Vec2 top = (1.0 - t) * a->top + t * b->top;
  const Vec2 sole = (1.0 - t) * a->sole + t * b->sole;
  return {foot.from_frame(top[0], top[1]), foot.from_frame(sole[0], sole[1])};
}

}  // namespace

ExpertTrace run_expert(const FootGeom& foot, std::uint64_t seed, double noise_scale, const SimConfig& config,
                       int ticks) {
  if (ticks < 0) ticks = config.demo_ticks;
  diff::Rng rng(seed);
  const auto plan = expert_plan(foot, rng, noise_scale);

  ExpertTrace trace;
  SimState state = initial_state(foot, seed, config);
  int jitter = 0;
  for (int t = 0; t < ticks; ++t) {
    trace.frames.push_back(sense(state));
    auto targets = plan_targets(foot, plan, t + 1);
    if (jitter > 0) {
      // Alternating mode: the arms take turns nudging forward.
      const double sign = (jitter % 2 == 0) ? 1.0 : -1.0;
      targets[0] += sign * 0.1 * foot.axis();
      targets[1] -= sign * 0.1 * foot.axis();
      --jitter;
    }
    trace.targets.push_back(targets);
    const auto flags = step_sim(state, targets);
    if (flags.snag) jitter = 6;
  }
  trace.report = judge(state);
  trace.final_state = std::move(state);
  return trace;
}

}  // namespace sockweave::sim
