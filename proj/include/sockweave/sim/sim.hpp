#pragma once

#include "sockweave/perception/image.hpp"
#include "sockweave/sim/geometry.hpp"

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace sockweave::sim {

// Scene units: 1 unit = 10 cm. The camera frames [0, 6.4] x [0, 6.4].
inline constexpr double kSceneExtent = 6.4;
inline constexpr int kAngleDims = 14;
inline constexpr int kTorqueDims = 14;
inline constexpr int kTactileDims = 2;

struct SimConfig {
  int particles = 20;
  double timestep = 0.05;  // 20 Hz
  double v_max = 0.06;     // gripper travel per tick
  double k_long = 20.0;    // N per unit strain, sock sides
  double k_trans = 5.0;    // N per unit strain, opening cuff
  double sock_rest_length = 3.1;
  double cuff_rest_length = 0.35;
  double friction = 0.4;
  double snag_tension = 2.0;  // N
  double grip_slip = 0.3;
  int relax_iterations = 40;
  double gripper_margin = 0.08;
  double contact_stiffness = 100.0;  // N per unit penetration
  double contact_epsilon = 0.02;
  double link1 = 3.2;
  double link2 = 2.8;
  Vec2 base0{-0.5, 5.0};
  Vec2 base1{3.5, -0.8};
  Vec2 ankle_anchor{4.3, 3.9};
  double leg_length = 1.0;
  int hold_ticks = 20;
  int demo_ticks = 210;
  int eval_ticks = 300;
};

/// Straight-axis side view of a foot: toe tip at u = 0, ankle at u = length,
/// leg continuing to u = length + leg_length. w > 0 is the dorsal side.
struct FootGeom {
  double angle_deg = 40.0;
  double length = 2.5;
  double heel_radius = 0.3;
  double toe_radius = 0.25;
  Vec2 ankle_anchor{4.3, 3.9};
  double leg_length = 1.0;

  Vec2 axis() const;    // unit, toe -> ankle
  Vec2 normal() const;  // unit, dorsal side
  Vec2 toe() const;
  Vec2 to_frame(const Vec2& p) const;  // (u, w)
  Vec2 from_frame(double u, double w) const;
  double top_half_width(double u) const;
  double sole_half_width(double u) const;
  double heel_center() const { return 0.85 * length; }
  /// 0 on the axis, 1 at (and beyond) the silhouette edge.
  double cross_section_profile(const Vec2& p) const;
};

FootGeom make_foot(double angle_deg, double length, const SimConfig& config = {});
/// Counter-clockwise outline sampled along the axis.
Polygon foot_polygon(const FootGeom& foot);

struct SockChain {
  std::vector<Vec2> particles;
  std::vector<double> rest_length;  // link i joins particles i, i+1
  std::vector<double> stiffness;
  double cuff_rest_length = 0.35;   // spring joining the two opening particles
  double cuff_stiffness = 5.0;
  double friction = 0.4;
  std::array<int, 2> opening{0, 19};

  int size() const { return static_cast<int>(particles.size()); }
  Vec2 toe_end() const;
};

struct ArmState {
  std::array<Vec2, 2> gripper;
  std::array<Vec2, 2> target;
  std::array<Eigen::Vector2d, 2> joints;  // (shoulder, elbow)
  std::array<Vec2, 2> contact_force{Vec2::Zero(), Vec2::Zero()};
  std::array<bool, 2> clamped{false, false};
};

struct Appearance {
  double foot_gray = 0.7;
  double sock_gray = 0.3;
  double background = 0.5;
  Vec2 gradient = Vec2::Zero();
  struct Blob {
    Vec2 center;
    double radius;
    double gray;
  };
  std::vector<Blob> blobs;
};

Appearance make_appearance(std::uint64_t seed);

struct TickRecord {
  double progress = 0.0;  // opening midpoint u
  double tactile_peak = 0.0;
  bool toe_ok = false;
  bool progress_ok = false;
  bool sides_ok = false;
  bool snag = false;
};

struct SimState {
  SimConfig config;
  FootGeom foot;
  Polygon foot_outline;
  SockChain sock;
  ArmState arms;
  Appearance appearance;
  int tick = 0;
  std::uint64_t seed = 0;
  std::array<bool, 2> held{true, true};
  bool snagged = false;
  bool non_finite = false;
  std::vector<TickRecord> history;
};

SimState initial_state(const FootGeom& foot, std::uint64_t seed, const SimConfig& config = {});

/// Gripper targets for the rest pose the demonstrations start from.
std::array<Vec2, 2> start_targets(const FootGeom& foot);

struct StepFlags {
  std::array<bool, 2> clamped{false, false};
  bool snag = false;
};

/// Advances one 0.05 s tick toward the gripper targets.
StepFlags step_sim(SimState& state, const std::array<Vec2, 2>& targets);

double link_tension(const SockChain& sock, int link);  // N, tension-only
double cuff_tension(const SockChain& sock);
double spring_energy(const SockChain& sock);
/// Net elastic force the sock applies to particle i.
Vec2 spring_force_on(const SockChain& sock, int particle);

// Two-link planar arm kinematics.
struct ArmGeom {
  Vec2 base;
  double link1;
  double link2;
};
ArmGeom arm_geom(const SimConfig& config, int arm);
Vec2 forward_kinematics(const ArmGeom& arm, const Eigen::Vector2d& q);
/// Elbow-positive solution; unreachable points are clamped onto the annulus.
Eigen::Vector2d inverse_kinematics(const ArmGeom& arm, const Vec2& p, bool* clamped = nullptr);
Eigen::Matrix2d jacobian(const ArmGeom& arm, const Eigen::Vector2d& q);
Vec2 clamp_reachable(const ArmGeom& arm, const Vec2& p, bool* clamped = nullptr);

inline constexpr std::array<double, 5> kPostureJoints{0.3, -0.2, 0.5, 0.0, 0.1};

struct Proprioception {
  Eigen::Matrix<double, kAngleDims, 1> angles;
  Eigen::Matrix<double, kTorqueDims, 1> torques;
  Eigen::Vector2d tactile;
};

Proprioception sense_body(const SimState& state);

struct Sensation {
  perception::MaskImage sock_mask;
  perception::MaskImage foot_mask;
  perception::DepthMap depth;
  perception::GrayImage gray;
  Proprioception body;
};

Sensation sense(const SimState& state);

perception::GrayImage render_gray(const SimState& state);

// ---------------------------------------------------------------------------
// Evaluation.

enum class FailureReason { none, snag, misalignment, timeout, nan };
std::string to_string(FailureReason r);

struct PhaseReport {
  std::array<double, 3> peak_tactile{0.0, 0.0, 0.0};  // toe, toe-heel, heel-ankle
  bool success = false;
  FailureReason failure = FailureReason::none;
};

/// Phase index from the opening progress fraction along the foot.
int phase_of(double progress_fraction);
PhaseReport judge(const SimState& state);

// ---------------------------------------------------------------------------
// Scripted demonstrator.

struct ExpertTrace {
  std::vector<Sensation> frames;
  std::vector<std::array<Vec2, 2>> targets;
  SimState final_state;
  PhaseReport report;
};

/// One scripted rollout of `ticks` steps; noise_scale multiplies the
/// waypoint jitter (0.02 * foot length).
ExpertTrace run_expert(const FootGeom& foot, std::uint64_t seed, double noise_scale = 1.0,
                       const SimConfig& config = {}, int ticks = -1);

}  // namespace sockweave::sim
