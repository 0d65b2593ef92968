#include "sockweave/sim/sim.hpp"

#include "sockweave/diff/random.hpp"

#include <algorithm>
#include <cmath>

namespace sockweave::sim {

// ---------------------------------------------------------------------------
// Kinematics

ArmGeom arm_geom(const SimConfig& config, int arm) {
  return {arm == 0 ? config.base0 : config.base1, config.link1, config.link2};
}

Vec2 forward_kinematics(const ArmGeom& arm, const Eigen::Vector2d& q) {
  return arm.base + Vec2(arm.link1 * std::cos(q[0]) + arm.link2 * std::cos(q[0] + q[1]),
                         arm.link1 * std::sin(q[0]) + arm.link2 * std::sin(q[0] + q[1]));
}

Vec2 clamp_reachable(const ArmGeom& arm, const Vec2& p, bool* clamped) {
  // Keep the elbow strictly inside (0, pi) so IK stays smooth.
  const double max_r = (arm.link1 + arm.link2) * 0.999;
  const double min_r = std::abs(arm.link1 - arm.link2) + 0.05;
  Vec2 d = p - arm.base;
  const double r = d.norm();
  bool c = false;
  if (r > max_r) {
    d *= max_r / r;
    c = true;
  } else if (r < min_r) {
    d = r > 1e-12 ? Vec2(d * (min_r / r)) : Vec2(min_r, 0.0);
    c = true;
  }
  if (clamped) *clamped = c;
  return arm.base + d;
}

Eigen::Vector2d inverse_kinematics(const ArmGeom& arm, const Vec2& p, bool* clamped) {
  const Vec2 d = clamp_reachable(arm, p, clamped) - arm.base;
  const double l1 = arm.link1, l2 = arm.link2;
  const double c2 = std::clamp((d.squaredNorm() - l1 * l1 - l2 * l2) / (2.0 * l1 * l2), -1.0, 1.0);
  const double q2 = std::acos(c2);
  const double q1 = std::atan2(d.y(), d.x()) - std::atan2(l2 * std::sin(q2), l1 + l2 * std::cos(q2));
  return {q1, q2};
}

Eigen::Matrix2d jacobian(const ArmGeom& arm, const Eigen::Vector2d& q) {
  const double s1 = std::sin(q[0]), c1 = std::cos(q[0]);
  const double s12 = std::sin(q[0] + q[1]), c12 = std::cos(q[0] + q[1]);
  Eigen::Matrix2d j;
  j << -arm.link1 * s1 - arm.link2 * s12, -arm.link2 * s12,
        arm.link1 * c1 + arm.link2 * c12,  arm.link2 * c12;
  return j;
}

// ---------------------------------------------------------------------------
// Sock chain

Vec2 SockChain::toe_end() const {
  const int mid = size() / 2;
  return 0.5 * (particles[mid - 1] + particles[mid]);
}

double link_tension(const SockChain& sock, int link) {
  const double len = (sock.particles[link + 1] - sock.particles[link]).norm();
  const double strain = (len - sock.rest_length[link]) / sock.rest_length[link];
  return strain > 0.0 ? sock.stiffness[link] * strain : 0.0;
}

double cuff_tension(const SockChain& sock) {
  const double len = (sock.particles[sock.opening[1]] - sock.particles[sock.opening[0]]).norm();
  const double strain = (len - sock.cuff_rest_length) / sock.cuff_rest_length;
  return strain > 0.0 ? sock.cuff_stiffness * strain : 0.0;
}

namespace {

// Energy of a tension-only spring with force k * strain.
double spring_energy_term(double len, double rest, double k) {
  const double strain = (len - rest) / rest;
  return strain > 0.0 ? 0.5 * k * rest * strain * strain : 0.0;
}

double energy_of(const SockChain& sock, const std::vector<Vec2>& x) {
  double e = 0.0;
  for (std::size_t i = 0; i + 1 < x.size(); ++i) {
    e += spring_energy_term((x[i + 1] - x[i]).norm(), sock.rest_length[i], sock.stiffness[i]);
  }
  e += spring_energy_term((x[sock.opening[1]] - x[sock.opening[0]]).norm(), sock.cuff_rest_length,
                          sock.cuff_stiffness);
  return e;
}

void add_spring_forces(const Vec2& a, const Vec2& b, double rest, double k, Vec2& fa, Vec2& fb) {
  const Vec2 d = b - a;
  const double len = d.norm();
  if (len <= rest || len <= 0.0) return;
  const Vec2 f = (k * (len - rest) / rest / len) * d;  // pulls a toward b
  fa += f;
  fb -= f;
}

std::vector<Vec2> forces_of(const SockChain& sock, const std::vector<Vec2>& x) {
  std::vector<Vec2> f(x.size(), Vec2::Zero());
  for (std::size_t i = 0; i + 1 < x.size(); ++i) {
    add_spring_forces(x[i], x[i + 1], sock.rest_length[i], sock.stiffness[i], f[i], f[i + 1]);
  }
  add_spring_forces(x[sock.opening[0]], x[sock.opening[1]], sock.cuff_rest_length, sock.cuff_stiffness,
                    f[sock.opening[0]], f[sock.opening[1]]);
  return f;
}

}  // namespace

double spring_energy(const SockChain& sock) { return energy_of(sock, sock.particles); }

Vec2 spring_force_on(const SockChain& sock, int particle) {
  return forces_of(sock, sock.particles)[particle];
}

// ---------------------------------------------------------------------------
// State

Appearance make_appearance(std::uint64_t seed) {
  diff::Rng rng(seed ^ 0xA5A5F00DCAFEull);
  Appearance a;
  a.foot_gray = rng.uniform(0.55, 0.85);
  a.sock_gray = rng.uniform(0.15, 0.45);
  a.background = rng.uniform(0.3, 0.7);
  a.gradient = Vec2(rng.uniform(-0.06, 0.06), rng.uniform(-0.06, 0.06));
  for (int i = 0; i < 4; ++i) {
    a.blobs.push_back({Vec2(rng.uniform(0.0, kSceneExtent), rng.uniform(0.0, kSceneExtent)),
                       rng.uniform(0.3, 0.9), rng.uniform(0.1, 0.95)});
  }
  return a;
}

std::array<Vec2, 2> start_targets(const FootGeom& foot) {
  return {foot.from_frame(-0.9, 0.3), foot.from_frame(-0.9, -0.3)};
}

SimState initial_state(const FootGeom& foot, std::uint64_t seed, const SimConfig& config) {
  SimState s;
  s.config = config;
  s.foot = foot;
  s.foot_outline = foot_polygon(foot);
  s.appearance = make_appearance(seed);
  s.seed = seed;

  const auto targets = start_targets(foot);
  for (int i = 0; i < 2; ++i) {
    const auto arm = arm_geom(config, i);
    s.arms.gripper[i] = clamp_reachable(arm, targets[i]);
    s.arms.target[i] = s.arms.gripper[i];
    s.arms.joints[i] = inverse_kinematics(arm, s.arms.gripper[i]);
  }

  const int n = config.particles;
  const double rest = config.sock_rest_length / (n - 1);
  auto& sock = s.sock;
  sock.rest_length.assign(n - 1, rest);
  sock.stiffness.assign(n - 1, config.k_long);
  sock.cuff_rest_length = config.cuff_rest_length;
  sock.cuff_stiffness = config.k_trans;
  sock.friction = config.friction;
  sock.opening = {0, n - 1};

  // Slightly slack V trailing away from the foot, apex = toe end of the sock.
  const Vec2 g0 = s.arms.gripper[0], g1 = s.arms.gripper[1];
  const Vec2 a = foot.axis(), nrm = foot.normal();
  const int half = n / 2;
  const double side = (half - 1) * rest * 0.97;
  const double gap = 0.5 * (g0 - g1).dot(nrm) - 0.5 * rest;
  const double depth = std::sqrt(std::max(side * side - gap * gap, 0.0));
  const Vec2 mid = 0.5 * (g0 + g1);
  const Vec2 apex_top = mid - depth * a + 0.5 * rest * nrm;
  const Vec2 apex_bottom = mid - depth * a - 0.5 * rest * nrm;
  sock.particles.resize(n);
  for (int i = 0; i < half; ++i) {
    const double t = static_cast<double>(i) / (half - 1);
    sock.particles[i] = (1.0 - t) * g0 + t * apex_top;
    sock.particles[n - 1 - i] = (1.0 - t) * g1 + t * apex_bottom;
  }
  return s;
}

// ---------------------------------------------------------------------------
// Stepping

namespace {

// Coulomb-style filter: a particle pressed onto the foot only slides when the
// tangential pull exceeds mu times the pressing force.
Vec2 frictional_step(const Vec2& force, const Vec2& outward, double mu, double eta) {
  const double fn = force.dot(outward);
  if (fn >= 0.0) return eta * force;
  const Vec2 ft = force - fn * outward;
  const double t = ft.norm();
  const double limit = mu * -fn;
  if (t <= limit) return Vec2::Zero();
  return eta * (1.0 - limit / t) * ft;
}

void relax(SimState& s, const std::array<bool, 2>& pinned) {
  auto& sock = s.sock;
  const int n = sock.size();
  std::vector<bool> fixed(n, false);
  for (int i = 0; i < 2; ++i) fixed[sock.opening[i]] = pinned[i];

  std::vector<double> eta(n, 0.0);
  for (int i = 0; i + 1 < n; ++i) {
    const double k = sock.stiffness[i] / sock.rest_length[i];
    eta[i] += k;
    eta[i + 1] += k;
  }
  const double kc = sock.cuff_stiffness / sock.cuff_rest_length;
  eta[sock.opening[0]] += kc;
  eta[sock.opening[1]] += kc;
  for (double& e : eta) e = 0.5 / e;

  double energy = energy_of(sock, sock.particles);
  std::vector<Vec2> candidate(n);
  for (int it = 0; it < s.config.relax_iterations; ++it) {
    const auto force = forces_of(sock, sock.particles);
    std::vector<Vec2> step(n, Vec2::Zero());
    bool moving = false;
    for (int i = 0; i < n; ++i) {
      if (fixed[i]) continue;
      const auto contact = closest_boundary_point(s.foot_outline, sock.particles[i]);
      if (contact.distance < s.config.contact_epsilon) {
        step[i] = frictional_step(force[i], contact.outward, sock.friction, eta[i]);
      } else {
        step[i] = eta[i] * force[i];
      }
      moving = moving || step[i].squaredNorm() > 1e-24;
    }
    if (!moving) break;
    bool accepted = false;
    for (int attempt = 0; attempt < 8 && !accepted; ++attempt) {
      for (int i = 0; i < n; ++i) {
        candidate[i] = sock.particles[i] + step[i];
        if (!fixed[i] && point_in_polygon(s.foot_outline, candidate[i])) {
          candidate[i] = closest_boundary_point(s.foot_outline, candidate[i]).point;
        }
      }
      const double e = energy_of(sock, candidate);
      if (e <= energy) {
        sock.particles = candidate;
        energy = e;
        accepted = true;
      } else {
        for (auto& d : step) d *= 0.5;
      }
    }
    if (!accepted) break;
  }
}

bool near_heel(const SimState& s, const Vec2& p) {
  const double u = s.foot.to_frame(p).x();
  const double spread = 0.18 * s.foot.length;
  return std::abs(u - s.foot.heel_center()) <= spread && signed_distance(s.foot_outline, p) < 0.15;
}

bool all_finite(const SimState& s) {
  for (const auto& p : s.sock.particles) {
    if (!p.allFinite()) return false;
  }
  for (int i = 0; i < 2; ++i) {
    if (!s.arms.gripper[i].allFinite() || !s.arms.joints[i].allFinite()) return false;
  }
  return true;
}

TickRecord record_tick(const SimState& s) {
  TickRecord r;
  const auto& sock = s.sock;
  const Vec2 p0 = sock.particles[sock.opening[0]], p1 = sock.particles[sock.opening[1]];
  const Vec2 mid = 0.5 * (p0 + p1);
  r.progress = s.foot.to_frame(mid).x();
  const auto body = sense_body(s);
  r.tactile_peak = body.tactile.maxCoeff();
  const Vec2 toe = s.foot.to_frame(sock.toe_end());
  r.toe_ok = toe.x() <= 0.25 * s.foot.length && signed_distance(s.foot_outline, sock.toe_end()) <= 0.3;
  r.progress_ok = r.progress >= s.foot.length;
  r.sides_ok = s.held[0] && s.held[1] && s.foot.to_frame(p0).y() > 0.0 && s.foot.to_frame(p1).y() < 0.0;
  r.snag = s.snagged;
  return r;
}

}  // namespace

StepFlags step_sim(SimState& s, const std::array<Vec2, 2>& targets) {
  StepFlags flags;
  ++s.tick;
  const auto& cfg = s.config;

  for (int i = 0; i < 2; ++i) {
    const auto arm = arm_geom(cfg, i);
    bool clamped = false;
    const Vec2 goal = targets[i].allFinite() ? clamp_reachable(arm, targets[i], &clamped) : s.arms.gripper[i];
    flags.clamped[i] = clamped || !targets[i].allFinite();
    s.arms.target[i] = goal;
    s.arms.clamped[i] = flags.clamped[i];
    Vec2 delta = goal - s.arms.gripper[i];
    const double dist = delta.norm();
    if (dist > cfg.v_max) delta *= cfg.v_max / dist;
    Vec2 g = s.arms.gripper[i] + delta;

    s.arms.contact_force[i].setZero();
    const double sd = signed_distance(s.foot_outline, g);
    if (sd < cfg.gripper_margin) {
      const auto c = closest_boundary_point(s.foot_outline, g);
      const Vec2 out = sd < 0.0 ? Vec2((c.point - g).normalized()) : (c.distance > 1e-12 ? Vec2((g - c.point) / c.distance) : c.outward);
      const Vec2 pushed = c.point + cfg.gripper_margin * out;
      s.arms.contact_force[i] = cfg.contact_stiffness * (cfg.gripper_margin - sd) * out;
      g = clamp_reachable(arm, pushed);
    }
    s.arms.gripper[i] = g;
    s.arms.joints[i] = inverse_kinematics(arm, g);
  }

  auto& sock = s.sock;
  bool snag = false;
  for (int i = 0; i < 2; ++i) {
    const int idx = sock.opening[i];
    if (s.held[i] && near_heel(s, sock.particles[idx]) && spring_force_on(sock, idx).norm() < cfg.snag_tension) {
      snag = true;
    }
  }
  s.snagged = snag;
  flags.snag = snag;

  for (int i = 0; i < 2; ++i) {
    if (!s.held[i]) continue;
    const int idx = sock.opening[i];
    if ((sock.particles[idx] - s.arms.gripper[i]).norm() > cfg.grip_slip) {
      s.held[i] = false;  // the sock slipped out of the hand
    } else if (!snag) {
      sock.particles[idx] = s.arms.gripper[i];
    }
  }

  if (!snag) relax(s, s.held);

  s.non_finite = s.non_finite || !all_finite(s);
  s.history.push_back(record_tick(s));
  return flags;
}

// ---------------------------------------------------------------------------
// Proprioception

Proprioception sense_body(const SimState& s) {
  Proprioception body;
  body.angles.setZero();
  body.torques.setZero();
  body.tactile.setZero();
  for (int i = 0; i < 2; ++i) {
    const auto arm = arm_geom(s.config, i);
    const int off = 7 * i;
    body.angles[off] = s.arms.joints[i][0];
    body.angles[off + 1] = s.arms.joints[i][1];
    for (int k = 0; k < 5; ++k) body.angles[off + 2 + k] = kPostureJoints[k];

    Vec2 pull = Vec2::Zero();
    if (s.held[i]) pull = spring_force_on(s.sock, s.sock.opening[i]);
    if (s.held[i]) body.tactile[i] = link_tension(s.sock, i == 0 ? 0 : s.sock.size() - 2);
    const Vec2 external = pull + s.arms.contact_force[i];
    const Eigen::Vector2d tau = jacobian(arm, s.arms.joints[i]).transpose() * external;
    body.torques[off] = tau[0];
    body.torques[off + 1] = tau[1];
  }
  return body;
}

// ---------------------------------------------------------------------------
// Evaluation

std::string to_string(FailureReason r) {
  switch (r) {
    case FailureReason::none: return "none";
    case FailureReason::snag: return "snag";
    case FailureReason::misalignment: return "misalignment";
    case FailureReason::timeout: return "timeout";
    case FailureReason::nan: return "nan";
  }
  return "unknown";
}

int phase_of(double fraction) {
  if (fraction < 0.3) return 0;
  if (fraction <= 0.7) return 1;
  return 2;
}

PhaseReport judge(const SimState& s) {
  PhaseReport report;
  for (const auto& rec : s.history) {
    const int phase = phase_of(rec.progress / s.foot.length);
    report.peak_tactile[phase] = std::max(report.peak_tactile[phase], rec.tactile_peak);
  }
  if (s.non_finite) {
    report.failure = FailureReason::nan;
    return report;
  }
  if (!s.held[0] || !s.held[1]) {
    report.failure = FailureReason::snag;
    return report;
  }
  const int n = static_cast<int>(s.history.size());
  const int window = s.config.hold_ticks;
  if (n < window) {
    report.failure = FailureReason::timeout;
    return report;
  }
  bool toe = true, sides = true, progress = true;
  for (int t = n - window; t < n; ++t) {
    toe = toe && s.history[t].toe_ok;
    sides = sides && s.history[t].sides_ok;
    progress = progress && s.history[t].progress_ok;
  }
  if (!toe || !sides) {
    report.failure = FailureReason::misalignment;
  } else if (!progress) {
    report.failure = FailureReason::timeout;
  } else {
    report.success = true;
  }
  return report;
}

}  // namespace sockweave::sim
