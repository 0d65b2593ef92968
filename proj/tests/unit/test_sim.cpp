#include "sockweave/policy/closed_loop.hpp"
#include "sockweave/sim/sim.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>

using namespace sockweave;
using namespace sockweave::sim;

TEST_CASE("stretched two-particle chain pulls with k times strain") {
  SockChain chain;
  chain.particles = {Vec2(0, 0), Vec2(1.25, 0)};
  chain.rest_length = {1.0};
  chain.stiffness = {8.0};
  chain.opening = {0, 1};
  chain.cuff_stiffness = 0.0;
  CHECK(link_tension(chain, 0) == doctest::Approx(2.0));
  CHECK((spring_force_on(chain, 0) - Vec2(2.0, 0)).norm() < 1e-9);
  CHECK((spring_force_on(chain, 1) - Vec2(-2.0, 0)).norm() < 1e-9);
  chain.particles[1] = Vec2(0.9, 0);  // slack: tension only
  CHECK(link_tension(chain, 0) == 0.0);
  CHECK(spring_force_on(chain, 0).norm() == 0.0);
}

TEST_CASE("forward and inverse kinematics agree") {
  const SimConfig cfg;
  const auto arm = arm_geom(cfg, 0);
  const Eigen::Vector2d q(0.3, 1.1);
  const Vec2 p = forward_kinematics(arm, q);
  bool clamped = true;
  const auto back = inverse_kinematics(arm, p, &clamped);
  CHECK(!clamped);
  CHECK((back - q).norm() < 1e-9);
  const Vec2 expected = arm.base + arm.link1 * Vec2(std::cos(0.3), std::sin(0.3)) +
                        arm.link2 * Vec2(std::cos(1.4), std::sin(1.4));
  CHECK((p - expected).norm() < 1e-12);
  inverse_kinematics(arm, arm.base + Vec2(100, 0), &clamped);
  CHECK(clamped);
}

TEST_CASE("joint torques are the Jacobian transpose of the held-link pull") {
  const auto foot = make_foot(40, 2.5);
  auto s = initial_state(foot, 1);
  SockChain chain;
  chain.particles = {Vec2(0, 0), Vec2(1.2, 0), Vec2(0, 0.1)};
  chain.rest_length = {1.0, 10.0};
  chain.stiffness = {10.0, 10.0};
  chain.opening = {0, 2};
  chain.cuff_rest_length = 0.35;
  s.sock = chain;
  s.held = {true, false};
  s.arms.contact_force = {Vec2::Zero(), Vec2::Zero()};
  s.arms.joints[0] = Eigen::Vector2d(0.0, std::numbers::pi / 2);
  const auto body = sense_body(s);
  const double l2 = s.config.link2;
  // f = (2, 0); J = [[-l2, -l2], [l1, 0]] at this pose
  CHECK(body.torques[0] == doctest::Approx(-2.0 * l2));
  CHECK(body.torques[1] == doctest::Approx(-2.0 * l2));
  CHECK(body.tactile[0] == doctest::Approx(2.0));
  CHECK(body.tactile[1] == 0.0);
  CHECK(body.angles[0] == 0.0);
  CHECK(body.angles[1] == doctest::Approx(std::numbers::pi / 2));
}

TEST_CASE("the scripted expert dresses each training foot") {
  for (double angle : {30.0, 40.0, 50.0}) {
    CAPTURE(angle);
    const auto trace = run_expert(make_foot(angle, 2.4), 7);
    CHECK(trace.report.success);
    CHECK(trace.frames.size() == 210);
    CHECK(trace.report.peak_tactile[0] <= trace.report.peak_tactile[2]);
  }
}

TEST_CASE("expert runs are deterministic per seed") {
  const auto foot = make_foot(45, 2.6);
  const auto a = run_expert(foot, 3);
  const auto b = run_expert(foot, 3);
  REQUIRE(a.frames.size() == b.frames.size());
  CHECK(a.frames.back().body.angles == b.frames.back().body.angles);
  CHECK(a.final_state.sock.particles == b.final_state.sock.particles);
}

TEST_CASE("never touching the foot is a misalignment") {
  const auto foot = make_foot(40, 2.5);
  const auto rest = start_targets(foot);
  const auto r = policy::run_loop({40, 2.5, 2}, [&](const Sensation&) { return rest; }, 300);
  CHECK(!r.report.success);
  CHECK(r.report.failure == FailureReason::misalignment);
}

TEST_CASE("judge needs enough history") {
  const auto foot = make_foot(40, 2.5);
  auto s = initial_state(foot, 1);
  const auto rest = start_targets(foot);
  for (int t = 0; t < 5; ++t) step_sim(s, rest);
  CHECK(judge(s).failure == FailureReason::timeout);
  s.non_finite = true;
  CHECK(judge(s).failure == FailureReason::nan);
}

TEST_CASE("phase boundaries") {
  CHECK(phase_of(0.0) == 0);
  CHECK(phase_of(0.29) == 0);
  CHECK(phase_of(0.5) == 1);
  CHECK(phase_of(0.71) == 2);
  CHECK(phase_of(1.2) == 2);
}

TEST_CASE("polygon helpers") {
  const Polygon square{Vec2(0, 0), Vec2(1, 0), Vec2(1, 1), Vec2(0, 1)};
  CHECK(polygon_area(square) == doctest::Approx(1.0));
  CHECK(point_in_polygon(square, Vec2(0.5, 0.5)));
  CHECK(!point_in_polygon(square, Vec2(1.5, 0.5)));
  CHECK(signed_distance(square, Vec2(0.5, 0.25)) == doctest::Approx(-0.25));
  CHECK(signed_distance(square, Vec2(2, 0.5)) == doctest::Approx(1.0));
}
