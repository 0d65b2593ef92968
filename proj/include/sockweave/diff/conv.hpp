#pragma once

#include "sockweave/diff/ops.hpp"

namespace sockweave::diff {

namespace detail {

// Geometry of a "same"-padded strided convolution over one sample:
// input [c, h, w] -> output [o, ho, wo] with ho = ceil(h / sh).
struct ConvGeom {
  Index c = 0, h = 0, w = 0;
  Index o = 0, kh = 1, kw = 1;
  Index sh = 1, sw = 1;
  Index ph = 0, pw = 0;
  Index ho = 0, wo = 0;

  Index patch() const { return c * kh * kw; }
  Index out_area() const { return ho * wo; }
  Index in_size() const { return c * h * w; }
  Index out_size() const { return o * ho * wo; }
};

inline ConvGeom same_geom(Index c, Index h, Index w, Index o, Index kh, Index kw, Index sh, Index sw) {
  ConvGeom g;
  g.c = c;
  g.h = h;
  g.w = w;
  g.o = o;
  g.kh = kh;
  g.kw = kw;
  g.sh = sh;
  g.sw = sw;
  g.ph = kh / 2;
  g.pw = kw / 2;
  g.ho = (h + sh - 1) / sh;
  g.wo = (w + sw - 1) / sw;
  return g;
}

// Output columns [lo, hi) whose input column oj*s - p + k lies in [0, w).
inline std::pair<Index, Index> valid_span(Index w, Index wo, Index s, Index p, Index k) {
  const Index off = p - k;  // jj = oj*s - off
  Index lo = off <= 0 ? 0 : (off + s - 1) / s;
  Index hi = (w - 1 + off) < 0 ? 0 : (w - 1 + off) / s + 1;
  return {std::min(lo, wo), std::clamp(hi, std::min(lo, wo), wo)};
}

template <typename Scalar>
void im2col(const Scalar* x, const ConvGeom& g, Scalar* cols) {
  const Index area = g.out_area();
  for (Index c = 0; c < g.c; ++c) {
    for (Index ki = 0; ki < g.kh; ++ki) {
      for (Index kj = 0; kj < g.kw; ++kj) {
        Scalar* row = cols + ((c * g.kh + ki) * g.kw + kj) * area;
        const auto [lo, hi] = valid_span(g.w, g.wo, g.sw, g.pw, kj);
        for (Index oi = 0; oi < g.ho; ++oi) {
          Scalar* out = row + oi * g.wo;
          const Index ii = oi * g.sh - g.ph + ki;
          if (ii < 0 || ii >= g.h) {
            std::fill(out, out + g.wo, Scalar(0));
            continue;
          }
          std::fill(out, out + lo, Scalar(0));
          std::fill(out + hi, out + g.wo, Scalar(0));
          const Scalar* src = x + (c * g.h + ii) * g.w;
          const Index shift = kj - g.pw;
          if (g.sw == 1) {
            std::copy(src + lo + shift, src + hi + shift, out + lo);
          } else {
            for (Index oj = lo; oj < hi; ++oj) out[oj] = src[oj * g.sw + shift];
          }
        }
      }
    }
  }
}

template <typename Scalar>
void col2im_add(const Scalar* cols, const ConvGeom& g, Scalar* x) {
  const Index area = g.out_area();
  for (Index c = 0; c < g.c; ++c) {
    for (Index ki = 0; ki < g.kh; ++ki) {
      for (Index kj = 0; kj < g.kw; ++kj) {
        const Scalar* row = cols + ((c * g.kh + ki) * g.kw + kj) * area;
        const auto [lo, hi] = valid_span(g.w, g.wo, g.sw, g.pw, kj);
        for (Index oi = 0; oi < g.ho; ++oi) {
          const Index ii = oi * g.sh - g.ph + ki;
          if (ii < 0 || ii >= g.h) continue;
          const Scalar* in = row + oi * g.wo;
          Scalar* dst = x + (c * g.h + ii) * g.w;
          const Index shift = kj - g.pw;
          for (Index oj = lo; oj < hi; ++oj) dst[oj * g.sw + shift] += in[oj];
        }
      }
    }
  }
}

// y[n] = W * im2col(x[n])   (no bias)
template <typename Scalar>
void conv_forward(const Scalar* x, const Scalar* w, Index n, const ConvGeom& g, Scalar* y) {
  RowMatrix<Scalar> cols(g.patch(), g.out_area());
  ConstMatMap<Scalar> wm(w, g.o, g.patch());
  for (Index i = 0; i < n; ++i) {
    im2col(x + i * g.in_size(), g, cols.data());
    MatMap<Scalar>(y + i * g.out_size(), g.o, g.out_area()).noalias() = wm * cols;
  }
}

// gx[n] += col2im(W^T * gy[n])
template <typename Scalar>
void conv_backward_input(const Scalar* gy, const Scalar* w, Index n, const ConvGeom& g, Scalar* gx) {
  RowMatrix<Scalar> cols(g.patch(), g.out_area());
  ConstMatMap<Scalar> wm(w, g.o, g.patch());
  for (Index i = 0; i < n; ++i) {
    cols.noalias() = wm.transpose() * ConstMatMap<Scalar>(gy + i * g.out_size(), g.o, g.out_area());
    col2im_add(cols.data(), g, gx + i * g.in_size());
  }
}

// gw += sum_n gy[n] * im2col(x[n])^T
template <typename Scalar>
void conv_backward_weight(const Scalar* x, const Scalar* gy, Index n, const ConvGeom& g, Scalar* gw) {
  RowMatrix<Scalar> cols(g.patch(), g.out_area());
  MatMap<Scalar> gwm(gw, g.o, g.patch());
  for (Index i = 0; i < n; ++i) {
    im2col(x + i * g.in_size(), g, cols.data());
    gwm.noalias() += ConstMatMap<Scalar>(gy + i * g.out_size(), g.o, g.out_area()) * cols.transpose();
  }
}

template <typename Scalar>
void add_channel_bias(Scalar* y, const Scalar* b, Index n, Index channels, Index area) {
  for (Index i = 0; i < n * channels; ++i) {
    const Scalar bias = b[i % channels];
    Scalar* row = y + i * area;
    for (Index k = 0; k < area; ++k) row[k] += bias;
  }
}

template <typename Scalar>
void channel_bias_grad(const Scalar* gy, Index n, Index channels, Index area, Scalar* gb) {
  for (Index i = 0; i < n * channels; ++i) {
    const Scalar* row = gy + i * area;
    Scalar acc = 0;
    for (Index k = 0; k < area; ++k) acc += row[k];
    gb[i % channels] += acc;
  }
}

template <typename Scalar>
Tensor<Scalar> conv_generic(const char* op, const Tensor<Scalar>& x, const Tensor<Scalar>& w, const Tensor<Scalar>& b,
                            const ConvGeom& g, Index n, Shape out_shape) {
  if (b && (b.rank() != 1 || b.dim(0) != g.o)) throw shape_error(op, w.shape(), b.shape(), "bias must be [out_channels]");
  typename Tensor<Scalar>::Vector y(n * g.out_size());
  conv_forward(x.data(), w.data(), n, g, y.data());
  if (b) add_channel_bias(y.data(), b.data(), n, g.o, g.out_area());
  TensorList<Scalar> inputs{x, w};
  if (b) inputs.push_back(b);
  return Tensor<Scalar>::make_result(std::move(out_shape), std::move(y), inputs, [g, n](Node<Scalar>& self) {
    auto& px = *self.parents[0];
    auto& pw = *self.parents[1];
    if (px.requires_grad) {
      px.ensure_grad();
      conv_backward_input(self.grad.data(), pw.value.data(), n, g, px.grad.data());
    }
    if (pw.requires_grad) {
      pw.ensure_grad();
      conv_backward_weight(px.value.data(), self.grad.data(), n, g, pw.grad.data());
    }
    if (self.parents.size() > 2 && self.parents[2]->requires_grad) {
      auto& pb = *self.parents[2];
      pb.ensure_grad();
      channel_bias_grad(self.grad.data(), n, g.o, g.out_area(), pb.grad.data());
    }
  });
}

}  // namespace detail

/// x[N,C,H,W] (*) w[O,C,k,k] + b[O], zero "same" padding, square odd kernel.
template <typename Scalar>
Tensor<Scalar> conv2d(const Tensor<Scalar>& x, const Tensor<Scalar>& w, const Tensor<Scalar>& b, Index stride = 1) {
  if (x.rank() != 4 || w.rank() != 4 || w.dim(1) != x.dim(1)) throw shape_error("conv2d", x.shape(), w.shape());
  if (w.dim(2) % 2 == 0 || w.dim(3) % 2 == 0) throw shape_error("conv2d", x.shape(), w.shape(), "kernel extent must be odd");
  if (stride < 1) throw ShapeError("conv2d: stride must be positive");
  const auto g = detail::same_geom(x.dim(1), x.dim(2), x.dim(3), w.dim(0), w.dim(2), w.dim(3), stride, stride);
  return detail::conv_generic("conv2d", x, w, b, g, x.dim(0), {x.dim(0), g.o, g.ho, g.wo});
}

/// x[N,C,L] (*) w[O,C,k] + b[O], zero "same" padding, stride 1.
template <typename Scalar>
Tensor<Scalar> conv1d(const Tensor<Scalar>& x, const Tensor<Scalar>& w, const Tensor<Scalar>& b) {
  if (x.rank() != 3 || w.rank() != 3 || w.dim(1) != x.dim(1)) throw shape_error("conv1d", x.shape(), w.shape());
  if (w.dim(2) % 2 == 0) throw shape_error("conv1d", x.shape(), w.shape(), "kernel extent must be odd");
  const auto g = detail::same_geom(x.dim(1), 1, x.dim(2), w.dim(0), 1, w.dim(2), 1, 1);
  return detail::conv_generic("conv1d", x, w, b, g, x.dim(0), {x.dim(0), g.o, x.dim(2)});
}

/// Adjoint of a same-padded strided conv2d: x[N,Cin,H,W], w[Cin,Cout,k,k]
/// -> [N, Cout, H*stride, W*stride].
template <typename Scalar>
Tensor<Scalar> conv_transpose2d(const Tensor<Scalar>& x, const Tensor<Scalar>& w, const Tensor<Scalar>& b,
                                Index stride = 2) {
  if (x.rank() != 4 || w.rank() != 4 || w.dim(0) != x.dim(1)) {
    throw shape_error("conv_transpose2d", x.shape(), w.shape());
  }
  if (w.dim(2) % 2 == 0 || w.dim(3) % 2 == 0) {
    throw shape_error("conv_transpose2d", x.shape(), w.shape(), "kernel extent must be odd");
  }
  const Index n = x.dim(0), cout = w.dim(1);
  // Geometry of the forward conv whose input-gradient this op computes.
  const auto g = detail::same_geom(cout, x.dim(2) * stride, x.dim(3) * stride, x.dim(1), w.dim(2), w.dim(3), stride, stride);
  if (b && (b.rank() != 1 || b.dim(0) != cout)) throw shape_error("conv_transpose2d", w.shape(), b.shape());
  typename Tensor<Scalar>::Vector y = Tensor<Scalar>::Vector::Zero(n * g.in_size());
  detail::conv_backward_input(x.data(), w.data(), n, g, y.data());
  if (b) detail::add_channel_bias(y.data(), b.data(), n, cout, g.h * g.w);
  TensorList<Scalar> inputs{x, w};
  if (b) inputs.push_back(b);
  return Tensor<Scalar>::make_result({n, cout, g.h, g.w}, std::move(y), inputs, [g, n](Node<Scalar>& self) {
    auto& px = *self.parents[0];
    auto& pw = *self.parents[1];
    if (px.requires_grad) {
      typename Node<Scalar>::Vector gx(n * g.out_size());
      detail::conv_forward(self.grad.data(), pw.value.data(), n, g, gx.data());
      detail::accumulate(px, gx);
    }
    if (pw.requires_grad) {
      pw.ensure_grad();
      detail::conv_backward_weight(self.grad.data(), px.value.data(), n, g, pw.grad.data());
    }
    if (self.parents.size() > 2 && self.parents[2]->requires_grad) {
      auto& pb = *self.parents[2];
      pb.ensure_grad();
      detail::channel_bias_grad(self.grad.data(), n, g.c, g.h * g.w, pb.grad.data());
    }
  });
}

/// Isotropic Gaussian bumps: points[N,K,2] holding (x, y) in [-1,1] ->
/// maps[N,K,H,W] with value exp(-|p - grid(i,j)|^2 / (2 sigma^2)).
/// Grid x runs left to right over columns, y top to bottom over rows.
template <typename Scalar>
Tensor<Scalar> gaussian_heatmap(const Tensor<Scalar>& points, Index height, Index width, Scalar sigma) {
  if (points.rank() != 3 || points.dim(2) != 2) {
    throw ShapeError("gaussian_heatmap: expected [N,K,2] points, got " + to_string(points.shape()));
  }
  if (!(sigma > Scalar(0))) throw std::invalid_argument("gaussian_heatmap: sigma must be positive");
  const Index nk = points.dim(0) * points.dim(1), area = height * width;
  auto gx = [width](Index j) { return width == 1 ? Scalar(0) : Scalar(-1) + Scalar(2) * Scalar(j) / Scalar(width - 1); };
  auto gy = [height](Index i) { return height == 1 ? Scalar(0) : Scalar(-1) + Scalar(2) * Scalar(i) / Scalar(height - 1); };
  const Scalar inv = Scalar(1) / (Scalar(2) * sigma * sigma);
  typename Tensor<Scalar>::Vector y(nk * area);
  for (Index k = 0; k < nk; ++k) {
    const Scalar px = points[2 * k], py = points[2 * k + 1];
    for (Index i = 0; i < height; ++i) {
      for (Index j = 0; j < width; ++j) {
        const Scalar dx = gx(j) - px, dy = gy(i) - py;
        const Scalar e = (dx * dx + dy * dy) * inv;
        // The far tail is exactly zero; keeps floats out of the denormal range.
        y[k * area + i * width + j] = e < Scalar(60) ? std::exp(-e) : Scalar(0);
      }
    }
  }
  return Tensor<Scalar>::make_result(
      {points.dim(0), points.dim(1), height, width}, std::move(y), {points},
      [nk, height, width, area, inv, gx, gy](Node<Scalar>& self) {
        auto& p = *self.parents[0];
        if (!p.requires_grad) return;
        p.ensure_grad();
        for (Index k = 0; k < nk; ++k) {
          const Scalar px = p.value[2 * k], py = p.value[2 * k + 1];
          Scalar sx = 0, sy = 0;
          for (Index i = 0; i < height; ++i) {
            for (Index j = 0; j < width; ++j) {
              const Index idx = k * area + i * width + j;
              const Scalar common = self.grad[idx] * self.value[idx] * Scalar(2) * inv;
              sx += common * (gx(j) - px);
              sy += common * (gy(i) - py);
            }
          }
          p.grad[2 * k] += sx;
          p.grad[2 * k + 1] += sy;
        }
      });
}

}  // namespace sockweave::diff
