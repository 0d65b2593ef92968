#include "sockweave/diff/random.hpp"
#include "sockweave/perception/perception.hpp"
#include "sockweave/sim/sim.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>

using namespace sockweave;
using namespace sockweave::perception;

namespace {

MaskImage random_mask(diff::Rng& rng, int h, int w) {
  MaskImage m(h, w);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = rng.uniform() < 0.5 ? 0 : 255;
  return m;
}

DepthMap random_depth(diff::Rng& rng, int h, int w) {
  DepthMap d(h, w);
  for (Eigen::Index i = 0; i < d.size(); ++i) d.data()[i] = static_cast<float>(rng.uniform());
  return d;
}

// Independent even-odd scanline fill: count pixel centers between sorted
// edge crossings on each row.
int scanline_count(const sim::Polygon& poly) {
  int count = 0;
  for (int r = 0; r < kImageSize; ++r) {
    const double y = pixel_center(r, 0).y();
    std::vector<double> xs;
    for (std::size_t i = 0, j = poly.size() - 1; i < poly.size(); j = i++) {
      const auto& a = poly[i];
      const auto& b = poly[j];
      if ((a.y() > y) != (b.y() > y)) xs.push_back(a.x() + (y - a.y()) * (b.x() - a.x()) / (b.y() - a.y()));
    }
    std::sort(xs.begin(), xs.end());
    for (std::size_t k = 0; k + 1 < xs.size(); k += 2) {
      for (int c = 0; c < kImageSize; ++c) {
        const double x = pixel_center(r, c).x();
        count += x > xs[k] && x < xs[k + 1];
      }
    }
  }
  return count;
}

std::filesystem::path temp_path(const std::string& name) {
  return std::filesystem::temp_directory_path() / ("sockweave_test_" + name);
}

}  // namespace

TEST_CASE("masked depth equals a per-pixel loop") {
  diff::Rng rng(11);
  for (int trial = 0; trial < 50; ++trial) {
    const auto d = random_depth(rng, 8, 8);
    const auto m = random_mask(rng, 8, 8);
    const auto md = masked_depth(d, m);
    const auto nan = masked_depth(d, m, FillMode::nan);
    for (int r = 0; r < 8; ++r) {
      for (int c = 0; c < 8; ++c) {
        CHECK(md.values(r, c) == (m(r, c) == 255 ? d(r, c) : 0.0f));
        CHECK(std::isnan(nan.values(r, c)) == (m(r, c) == 0));
      }
    }
  }
}

TEST_CASE("masked depth rejects bad masks and shapes") {
  DepthMap d = DepthMap::Constant(4, 4, 0.5f);
  MaskImage m = MaskImage::Zero(4, 4);
  m(1, 1) = 7;
  CHECK_THROWS_AS(masked_depth(d, m), PerceptionError);
  CHECK_THROWS_AS(masked_depth(d, MaskImage::Zero(3, 4)), PerceptionError);
}

TEST_CASE("all-ones mask keeps depth, all-zero mask clears it") {
  diff::Rng rng(2);
  const auto d = random_depth(rng, 5, 6);
  CHECK((masked_depth(d, MaskImage::Constant(5, 6, 255)).values == d).all());
  CHECK((masked_depth(d, MaskImage::Zero(5, 6)).values == 0.0f).all());
}

TEST_CASE("pgm round trips") {
  diff::Rng rng(5);
  const auto m = random_mask(rng, 16, 12);
  const auto p8 = temp_path("mask.pgm");
  write_pgm8(p8.string(), m);
  CHECK((read_mask_pgm(p8.string()) == m).all());

  const auto d = random_depth(rng, 16, 12);
  const auto p16 = temp_path("depth.pgm");
  write_depth_pgm(p16.string(), d);
  const auto back = read_depth_pgm(p16.string());
  CHECK(((back - d).abs() <= 0.5f / 65535.0f + 1e-7f).all());
  CHECK(read_pgm(p16.string()).maxval == 65535);
  std::filesystem::remove(p8);
  std::filesystem::remove(p16);
}

TEST_CASE("reading a missing or malformed pgm throws") {
  CHECK_THROWS(read_pgm(temp_path("does_not_exist.pgm").string()));
  const auto p = temp_path("bad.pgm");
  std::ofstream(p) << "P2\n2 2\n255\n0 0 0 0\n";
  CHECK_THROWS(read_pgm(p.string()));
  std::filesystem::remove(p);
}

TEST_CASE("oracle masks are binary and the sock occludes the foot") {
  const auto foot = sim::make_foot(40, 2.5);
  auto state = sim::initial_state(foot, 3);
  const auto v = oracle_view(state);
  CHECK(is_binary(v.sock));
  CHECK(is_binary(v.foot));
  CHECK(((v.sock == 255) && (v.foot == 255)).count() == 0);
  CHECK((oracle_segment(state, Target::sock) == v.sock).all());
  CHECK((oracle_segment(state, Target::foot) == v.foot).all());
  CHECK((oracle_depth(state) == v.depth).all());
  CHECK(((v.depth >= 0.0f) && (v.depth <= 1.0f)).all());
  CHECK((((v.sock == 0) && (v.foot == 0)).select(v.depth, 1.0f) == 1.0f).all());
}

TEST_CASE("foot mask pixel count matches a scanline fill with the sock moved away") {
  const auto foot = sim::make_foot(30, 2.4);
  auto state = sim::initial_state(foot, 1);
  for (auto& p : state.sock.particles) p = sim::Vec2(-50.0, -50.0);
  const auto mask = oracle_segment(state, Target::foot);
  const int expected = scanline_count(state.foot_outline);
  CHECK(expected > 100);
  CHECK((mask == 255).count() == expected);
  // Area cross-check: pixel count times pixel area tracks the polygon area.
  const double px = sim::kSceneExtent / kImageSize;
  CHECK(std::abs(expected * px * px - sim::polygon_area(state.foot_outline)) < 0.1 * sim::polygon_area(state.foot_outline));
}

TEST_CASE("average_pool averages blocks and rejects ragged sizes") {
  Image<float> img(4, 4);
  for (int i = 0; i < 16; ++i) img.data()[i] = float(i);
  const auto p = average_pool(img, 2);
  CHECK(p(0, 0) == doctest::Approx(2.5));
  CHECK(p(1, 1) == doctest::Approx(12.5));
  CHECK_THROWS_AS(average_pool(img, 3), PerceptionError);
}
