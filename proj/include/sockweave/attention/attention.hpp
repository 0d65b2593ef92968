#pragma once

#include "sockweave/diff/conv.hpp"
#include "sockweave/diff/ops.hpp"
#include "sockweave/diff/random.hpp"

#include <string>

namespace sockweave::attention {

using diff::Index;
using diff::Shape;
using diff::Tensor;

// ---------------------------------------------------------------------------
// Encoder: 3 same-padded convs, stride 2 on the first two.

template <typename Scalar>
struct EncoderParams {
  Tensor<Scalar> w1, b1, w2, b2, w3, b3;

  static EncoderParams init(diff::Rng& rng, Index in_ch = 2, Index c1 = 8, Index c2 = 16, Index keypoints = 6) {
    EncoderParams p;
    p.w1 = diff::uniform_param<Scalar>({c1, in_ch, 3, 3}, in_ch * 9, rng);
    p.b1 = diff::uniform_param<Scalar>({c1}, in_ch * 9, rng);
    p.w2 = diff::uniform_param<Scalar>({c2, c1, 3, 3}, c1 * 9, rng);
    p.b2 = diff::uniform_param<Scalar>({c2}, c1 * 9, rng);
    p.w3 = diff::uniform_param<Scalar>({keypoints, c2, 3, 3}, c2 * 9, rng);
    p.b3 = diff::uniform_param<Scalar>({keypoints}, c2 * 9, rng);
    return p;
  }

  template <typename F>
  void visit(const std::string& prefix, F&& f) {
    f(prefix + "w1", w1); f(prefix + "b1", b1);
    f(prefix + "w2", w2); f(prefix + "b2", b2);
    f(prefix + "w3", w3); f(prefix + "b3", b3);
  }
};

/// frames[N, 2, H, W] -> features[N, K, H/4, W/4]
template <typename Scalar>
Tensor<Scalar> encode_image(const Tensor<Scalar>& frames, const EncoderParams<Scalar>& p) {
  if (frames.rank() != 4 || frames.dim(1) != p.w1.dim(1)) {
    throw diff::shape_error("encode_image", frames.shape(), p.w1.shape(), "frame channel count must match the encoder");
  }
  auto h = diff::relu(diff::conv2d(frames, p.w1, p.b1, 2));
  h = diff::relu(diff::conv2d(h, p.w2, p.b2, 2));
  return diff::conv2d(h, p.w3, p.b3, 1);
}

// ---------------------------------------------------------------------------
// Spatial softmax and expected keypoints.

/// Softmax over the spatial positions of each channel: [N,C,H,W] -> same.
template <typename Scalar>
Tensor<Scalar> spatial_softmax(const Tensor<Scalar>& features, Scalar tau = Scalar(1)) {
  if (!(tau > Scalar(0))) throw std::invalid_argument("spatial_softmax: temperature must be positive");
  if (features.rank() != 4) throw diff::ShapeError("spatial_softmax: expected [N,C,H,W], got " + diff::to_string(features.shape()));
  const Index n = features.dim(0), c = features.dim(1), h = features.dim(2), w = features.dim(3);
  auto logits = tau == Scalar(1) ? features : diff::scale(features, Scalar(1) / tau);
  return diff::reshape(diff::softmax(diff::reshape(logits, {n, c, h * w}), 2), {n, c, h, w});
}

/// Grid value of column j (x) or row i (y), spanning [-1, 1].
template <typename Scalar>
Scalar grid_coord(Index i, Index extent) {
  return extent == 1 ? Scalar(0) : Scalar(-1) + Scalar(2) * Scalar(i) / Scalar(extent - 1);
}

/// [H*W, 2] table of (x, y); x over columns, y over rows top to bottom.
template <typename Scalar>
Tensor<Scalar> coordinate_grid(Index h, Index w) {
  typename Tensor<Scalar>::Vector v(h * w * 2);
  for (Index i = 0; i < h; ++i) {
    for (Index j = 0; j < w; ++j) {
      v[2 * (i * w + j)] = grid_coord<Scalar>(j, w);
      v[2 * (i * w + j) + 1] = grid_coord<Scalar>(i, h);
    }
  }
  return Tensor<Scalar>({h * w, 2}, std::move(v));
}

/// attention[N,C,H,W] -> [N,C,2] expected (x, y), or [N,C,3] with the
/// attention-weighted depth appended when `depth` ([N,1,H,W]) is given.
template <typename Scalar>
Tensor<Scalar> expect_keypoints(const Tensor<Scalar>& attn, const Tensor<Scalar>& depth = {}) {
  if (attn.rank() != 4) throw diff::ShapeError("expect_keypoints: expected [N,C,H,W], got " + diff::to_string(attn.shape()));
  const Index n = attn.dim(0), c = attn.dim(1), h = attn.dim(2), w = attn.dim(3);
  auto xy = diff::reshape(diff::matmul(diff::reshape(attn, {n * c, h * w}), coordinate_grid<Scalar>(h, w)), {n, c, 2});
  if (!depth) return xy;
  if (depth.shape() != Shape{n, 1, h, w}) throw diff::shape_error("expect_keypoints", attn.shape(), depth.shape(), "depth must be [N,1,H,W]");
  auto z = diff::bmm(diff::reshape(attn, {n, c, h * w}), diff::reshape(depth, {n, h * w, 1}));
  return diff::concat<Scalar>({xy, z}, 2);
}

/// Mean over factor x factor blocks of [N,C,H,W]; no gradient.
template <typename Scalar>
Tensor<Scalar> pool_constant(const Tensor<Scalar>& x, Index factor) {
  if (x.rank() != 4 || x.dim(2) % factor != 0 || x.dim(3) % factor != 0) {
    throw diff::ShapeError("pool_constant: " + diff::to_string(x.shape()) + " not divisible by " + std::to_string(factor));
  }
  const Index n = x.dim(0) * x.dim(1), h = x.dim(2), w = x.dim(3), ho = h / factor, wo = w / factor;
  typename Tensor<Scalar>::Vector v = Tensor<Scalar>::Vector::Zero(n * ho * wo);
  const Scalar inv = Scalar(1) / Scalar(factor * factor);
  for (Index k = 0; k < n; ++k) {
    for (Index i = 0; i < h; ++i) {
      for (Index j = 0; j < w; ++j) v[(k * ho + i / factor) * wo + j / factor] += x[(k * h + i) * w + j] * inv;
    }
  }
  return Tensor<Scalar>({x.dim(0), x.dim(1), ho, wo}, std::move(v));
}

/// points[N,K,2] in [-1,1]^2 -> Gaussian bumps [N,K,H,W], peak 1.
template <typename Scalar>
Tensor<Scalar> keypoints_to_heatmap(const Tensor<Scalar>& points, Index h, Index w, Scalar sigma = Scalar(0.1)) {
  return diff::gaussian_heatmap(points, h, w, sigma);
}

// ---------------------------------------------------------------------------
// Decoder: heatmap-gated features -> two stride-2 transposed convs.

template <typename Scalar>
struct DecoderParams {
  Tensor<Scalar> w1, b1, w2, b2;

  static DecoderParams init(diff::Rng& rng, Index keypoints = 6, Index hidden = 8, Index out_ch = 2) {
    DecoderParams p;
    p.w1 = diff::uniform_param<Scalar>({keypoints, hidden, 3, 3}, keypoints * 9, rng);
    p.b1 = diff::uniform_param<Scalar>({hidden}, keypoints * 9, rng);
    p.w2 = diff::uniform_param<Scalar>({hidden, out_ch, 3, 3}, hidden * 9, rng);
    p.b2 = diff::uniform_param<Scalar>({out_ch}, hidden * 9, rng);
    return p;
  }

  template <typename F>
  void visit(const std::string& prefix, F&& f) {
    f(prefix + "w1", w1); f(prefix + "b1", b1);
    f(prefix + "w2", w2); f(prefix + "b2", b2);
  }
};

/// features, heatmaps [N,K,h,w] -> image [N,2,4h,4w] in (0,1).
template <typename Scalar>
Tensor<Scalar> decode_image(const Tensor<Scalar>& features, const Tensor<Scalar>& heatmaps, const DecoderParams<Scalar>& p) {
  if (features.shape() != heatmaps.shape()) throw diff::shape_error("decode_image", features.shape(), heatmaps.shape(), "features and heatmaps must align");
  auto gated = diff::mul(features, heatmaps);
  auto h = diff::relu(diff::conv_transpose2d(gated, p.w1, p.b1, 2));
  return diff::sigmoid(diff::conv_transpose2d(h, p.w2, p.b2, 2));
}

// ---------------------------------------------------------------------------
// Selective-kernel attention over a 1-D somatosensory signal.

template <typename Scalar>
struct SKNetParams {
  Tensor<Scalar> lift_w, lift_b;  // [C,1,1]
  Tensor<Scalar> w3, b3;          // [C,C,3]
  Tensor<Scalar> w5, b5;          // [C,C,5]
  Tensor<Scalar> fuse_w, fuse_b;  // [C,R]
  Tensor<Scalar> sel3_w, sel3_b;  // [R,C]
  Tensor<Scalar> sel5_w, sel5_b;
  Tensor<Scalar> proj_w, proj_b;  // [1,C,1]

  static SKNetParams init(diff::Rng& rng, Index channels = 8, Index reduced = 4) {
    SKNetParams p;
    const Index c = channels, r = reduced;
    p.lift_w = diff::uniform_param<Scalar>({c, 1, 1}, 1, rng);
    p.lift_b = diff::uniform_param<Scalar>({c}, 1, rng);
    p.w3 = diff::uniform_param<Scalar>({c, c, 3}, c * 3, rng);
    p.b3 = diff::uniform_param<Scalar>({c}, c * 3, rng);
    p.w5 = diff::uniform_param<Scalar>({c, c, 5}, c * 5, rng);
    p.b5 = diff::uniform_param<Scalar>({c}, c * 5, rng);
    p.fuse_w = diff::uniform_param<Scalar>({c, r}, c, rng);
    p.fuse_b = diff::uniform_param<Scalar>({r}, c, rng);
    p.sel3_w = diff::uniform_param<Scalar>({r, c}, r, rng);
    p.sel3_b = diff::uniform_param<Scalar>({c}, r, rng);
    p.sel5_w = diff::uniform_param<Scalar>({r, c}, r, rng);
    p.sel5_b = diff::uniform_param<Scalar>({c}, r, rng);
    p.proj_w = diff::uniform_param<Scalar>({1, c, 1}, c, rng);
    p.proj_b = diff::uniform_param<Scalar>({1}, c, rng);
    return p;
  }

  template <typename F>
  void visit(const std::string& prefix, F&& f) {
    f(prefix + "lift_w", lift_w); f(prefix + "lift_b", lift_b);
    f(prefix + "w3", w3); f(prefix + "b3", b3);
    f(prefix + "w5", w5); f(prefix + "b5", b5);
    f(prefix + "fuse_w", fuse_w); f(prefix + "fuse_b", fuse_b);
    f(prefix + "sel3_w", sel3_w); f(prefix + "sel3_b", sel3_b);
    f(prefix + "sel5_w", sel5_w); f(prefix + "sel5_b", sel5_b);
    f(prefix + "proj_w", proj_w); f(prefix + "proj_b", proj_b);
  }
};

template <typename Scalar>
struct SKNetOutput {
  Tensor<Scalar> out;     // [N, L]
  Tensor<Scalar> select;  // [N, 2, C]; row 0 weights the kernel-3 branch
  Tensor<Scalar> branch3, branch5;  // [N, C, L]
};

/// x[N, L] -> [N, L]: split (kernels 3 and 5), fuse (sum, pool, project),
/// select (softmax across the two branches per channel), project back.
template <typename Scalar>
SKNetOutput<Scalar> sknet_attend(const Tensor<Scalar>& x, const SKNetParams<Scalar>& p) {
  if (x.rank() != 2) throw diff::ShapeError("sknet_attend: expected [N,L], got " + diff::to_string(x.shape()));
  const Index n = x.dim(0), len = x.dim(1), c = p.w3.dim(0);
  if (len < p.w5.dim(2)) {
    throw diff::ShapeError("sknet_attend: signal length " + std::to_string(len) + " is shorter than the kernel extent " +
                           std::to_string(p.w5.dim(2)));
  }
  auto lifted = diff::relu(diff::conv1d(diff::reshape(x, {n, 1, len}), p.lift_w, p.lift_b));
  SKNetOutput<Scalar> r;
  r.branch3 = diff::relu(diff::conv1d(lifted, p.w3, p.b3));
  r.branch5 = diff::relu(diff::conv1d(lifted, p.w5, p.b5));
  auto s = diff::global_avg_pool(diff::add(r.branch3, r.branch5));     // [N,C]
  auto z = diff::relu(diff::linear(s, p.fuse_w, p.fuse_b));            // [N,R]
  auto a3 = diff::reshape(diff::linear(z, p.sel3_w, p.sel3_b), {n, 1, c});
  auto a5 = diff::reshape(diff::linear(z, p.sel5_w, p.sel5_b), {n, 1, c});
  r.select = diff::softmax(diff::concat<Scalar>({a3, a5}, 1), 1);
  auto parts = diff::split(r.select, 1, {1, 1});
  const auto ones = Tensor<Scalar>::full({1, len}, Scalar(1));
  auto spread = [&](const Tensor<Scalar>& wgt) {
    return diff::reshape(diff::matmul(diff::reshape(wgt, {n * c, 1}), ones), {n, c, len});
  };
  auto mixed = diff::add(diff::mul(r.branch3, spread(parts[0])), diff::mul(r.branch5, spread(parts[1])));
  r.out = diff::reshape(diff::conv1d(mixed, p.proj_w, p.proj_b), {n, len});
  return r;
}

}  // namespace sockweave::attention
