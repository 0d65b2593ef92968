#include "sockweave/attention/attention.hpp"
#include "sockweave/diff/random.hpp"

#include <doctest.h>

#include <cmath>

using namespace sockweave;
using namespace sockweave::attention;
using Tf = diff::Tensor<float>;
using Td = diff::Tensor<double>;

namespace {

Td peaked(Index h, Index w, Index i0, Index j0, double height) {
  auto t = Td::zeros({1, 1, h, w});
  t.mutable_value()[i0 * w + j0] = height;
  return t;
}

}  // namespace

TEST_CASE("spatial softmax sums to one per channel") {
  diff::Rng rng(4);
  auto f = diff::random_tensor<double>({2, 3, 5, 7}, rng, -10, 10);
  auto a = spatial_softmax(f);
  for (Index k = 0; k < 6; ++k) {
    double s = 0;
    for (Index i = 0; i < 35; ++i) s += a[k * 35 + i];
    CHECK(std::abs(s - 1.0) < 1e-6);
  }
  CHECK((a.value().array() >= 0).all());
}

TEST_CASE("uniform features give the centroid keypoint") {
  auto a = spatial_softmax(Td::full({1, 2, 6, 9}, 0.7));
  auto kp = expect_keypoints(a);
  for (Index i = 0; i < kp.size(); ++i) CHECK(std::abs(kp[i]) < 1e-6);
}

TEST_CASE("constant depth is reproduced exactly") {
  diff::Rng rng(8);
  auto a = spatial_softmax(diff::random_tensor<double>({1, 3, 4, 4}, rng, -3, 3));
  auto kp = expect_keypoints(a, Td::full({1, 1, 4, 4}, 0.42));
  REQUIRE(kp.shape() == diff::Shape{1, 3, 3});
  for (Index k = 0; k < 3; ++k) CHECK(std::abs(kp[3 * k + 2] - 0.42) < 1e-6);
}

TEST_CASE("near one-hot attention lands on the pixel") {
  const Index h = 8, w = 8, i0 = 2, j0 = 5;
  auto a = spatial_softmax(peaked(h, w, i0, j0, 60.0));
  diff::Rng rng(3);
  auto depth = diff::random_tensor<double>({1, 1, h, w}, rng, 0, 1);
  auto kp = expect_keypoints(a, depth);
  CHECK(std::abs(kp[0] - grid_coord<double>(j0, w)) < 1e-4);
  CHECK(std::abs(kp[1] - grid_coord<double>(i0, h)) < 1e-4);
  CHECK(std::abs(kp[2] - depth[i0 * w + j0]) < 1e-4);
}

TEST_CASE("circular shift by one column moves x by one grid spacing") {
  const Index h = 8, w = 8;
  diff::Rng rng(12);
  auto base = diff::random_tensor<double>({1, 1, h, w}, rng, -0.5, 0.5);
  base.mutable_value()[3 * w + 3] = 40.0;
  auto shifted = Td::zeros({1, 1, h, w});
  for (Index i = 0; i < h; ++i) {
    for (Index j = 0; j < w; ++j) shifted.mutable_value()[i * w + (j + 1) % w] = base[i * w + j];
  }
  auto k0 = expect_keypoints(spatial_softmax(base));
  auto k1 = expect_keypoints(spatial_softmax(shifted));
  CHECK(std::abs((k1[0] - k0[0]) - 2.0 / (w - 1)) < 1e-6);
  CHECK(std::abs(k1[1] - k0[1]) < 1e-6);
}

TEST_CASE("lower temperature sharpens attention") {
  diff::Rng rng(9);
  auto f = diff::random_tensor<double>({1, 1, 4, 4}, rng, -1, 1);
  const auto hot = spatial_softmax(f, 2.0).value().maxCoeff();
  const auto cold = spatial_softmax(f, 0.25).value().maxCoeff();
  CHECK(cold > hot);
  CHECK_THROWS(spatial_softmax(f, 0.0));
}

TEST_CASE("heatmap peaks at the keypoint") {
  auto pts = Td({1, 1, 2}, Eigen::VectorXd::Zero(2));
  auto hm = keypoints_to_heatmap(pts, 9, 9, 0.1);
  CHECK(hm[4 * 9 + 4] == doctest::Approx(1.0));
  CHECK(hm.value().maxCoeff() == hm[4 * 9 + 4]);
  CHECK(hm[0] < 1e-10);
}

TEST_CASE("sknet selection weights are a softmax over the two branches") {
  diff::Rng rng(21);
  auto p = SKNetParams<double>::init(rng, 4, 2);
  auto x = diff::random_tensor<double>({3, 14}, rng, 0, 1);
  auto r = sknet_attend(x, p);
  REQUIRE(r.out.shape() == diff::Shape{3, 14});
  REQUIRE(r.select.shape() == diff::Shape{3, 2, 4});
  for (Index n = 0; n < 3; ++n) {
    for (Index c = 0; c < 4; ++c) CHECK(std::abs(r.select[n * 8 + c] + r.select[n * 8 + 4 + c] - 1.0) < 1e-12);
  }
  CHECK_THROWS_AS(sknet_attend(diff::random_tensor<double>({1, 3}, rng), p), diff::ShapeError);
}

TEST_CASE("sknet with identical branches reduces to one branch") {
  diff::Rng rng(5);
  auto p = SKNetParams<double>::init(rng, 4, 2);
  // kernel-5 weights = kernel-3 weights padded with zero taps
  auto w5 = Td::zeros({4, 4, 5});
  for (Index o = 0; o < 4; ++o) {
    for (Index i = 0; i < 4; ++i) {
      for (Index k = 0; k < 3; ++k) w5.mutable_value()[(o * 4 + i) * 5 + k + 1] = p.w3[(o * 4 + i) * 3 + k];
    }
  }
  p.w5 = w5;
  p.b5 = Td(p.b3.shape(), p.b3.value());
  auto x = diff::random_tensor<double>({2, 14}, rng, 0, 1);
  auto r = sknet_attend(x, p);
  auto direct = diff::reshape(diff::conv1d(r.branch3, p.proj_w, p.proj_b), {2, 14});
  for (Index i = 0; i < direct.size(); ++i) CHECK(std::abs(r.out[i] - direct[i]) < 1e-12);
}

TEST_CASE("decoder output lives in (0, 1) at four times the feature size") {
  diff::Rng rng(6);
  auto dp = DecoderParams<float>::init(rng, 3, 4, 2);
  auto feats = diff::random_tensor<float>({1, 3, 4, 4}, rng);
  auto pts = diff::random_tensor<float>({1, 3, 2}, rng, -0.9, 0.9);
  auto img = decode_image(feats, keypoints_to_heatmap(pts, 4, 4), dp);
  REQUIRE(img.shape() == diff::Shape{1, 2, 16, 16});
  CHECK((img.value().array() > 0).all());
  CHECK((img.value().array() < 1).all());
}

TEST_CASE("encoder maps 2-channel frames to keypoint feature maps") {
  diff::Rng rng(7);
  auto ep = EncoderParams<float>::init(rng, 2, 4, 4, 6);
  auto f = encode_image(diff::random_tensor<float>({2, 2, 16, 16}, rng), ep);
  CHECK(f.shape() == diff::Shape{2, 6, 4, 4});
  CHECK_THROWS_AS(encode_image(diff::random_tensor<float>({1, 3, 16, 16}, rng), ep), diff::ShapeError);
}
