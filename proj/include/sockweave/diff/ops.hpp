#pragma once

#include "sockweave/diff/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace sockweave::diff {

template <typename Scalar>
using RowMatrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename Scalar>
using MatMap = Eigen::Map<RowMatrix<Scalar>>;
template <typename Scalar>
using ConstMatMap = Eigen::Map<const RowMatrix<Scalar>>;

namespace detail {

template <typename Scalar>
void accumulate(Node<Scalar>& parent, const typename Node<Scalar>::Vector& g) {
  if (!parent.requires_grad) return;
  parent.ensure_grad();
  parent.grad += g;
}

// [outer, axis, inner] factorisation of a shape around one axis.
struct AxisSplit {
  Index outer = 1, axis = 1, inner = 1;
};

inline AxisSplit split_at(const Shape& shape, Index axis) {
  AxisSplit s;
  for (Index i = 0; i < axis; ++i) s.outer *= shape[i];
  s.axis = shape[axis];
  for (Index i = axis + 1; i < static_cast<Index>(shape.size()); ++i) s.inner *= shape[i];
  return s;
}

inline Index normalize_axis(Index axis, Index rank, const char* op) {
  if (axis < 0) axis += rank;
  if (axis < 0 || axis >= rank) {
    throw ShapeError(std::string(op) + ": axis " + std::to_string(axis) + " out of range for rank " +
                     std::to_string(rank));
  }
  return axis;
}

// True when `b` equals a trailing suffix of `a` (including equality).
inline bool is_suffix(const Shape& a, const Shape& b) {
  if (b.size() > a.size()) return false;
  return std::equal(b.rbegin(), b.rend(), a.rbegin());
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Elementwise binary ops. `b` may broadcast along the leading axes of `a`
// when its shape is a suffix of a's shape (bias-style broadcasting).

template <typename Scalar>
Tensor<Scalar> add(const Tensor<Scalar>& a, const Tensor<Scalar>& b) {
  using Vector = typename Tensor<Scalar>::Vector;
  if (a.shape() == b.shape()) {
    return Tensor<Scalar>::make_result(a.shape(), a.value() + b.value(), {a, b}, [](Node<Scalar>& self) {
      detail::accumulate(*self.parents[0], self.grad);
      detail::accumulate(*self.parents[1], self.grad);
    });
  }
  if (!detail::is_suffix(a.shape(), b.shape())) throw shape_error("add", a.shape(), b.shape());
  const Index inner = b.size(), outer = a.size() / inner;
  Vector out = a.value();
  MatMap<Scalar>(out.data(), outer, inner).rowwise() += b.value().transpose();
  return Tensor<Scalar>::make_result(a.shape(), std::move(out), {a, b}, [outer, inner](Node<Scalar>& self) {
    detail::accumulate(*self.parents[0], self.grad);
    if (self.parents[1]->requires_grad) {
      Vector gb = ConstMatMap<Scalar>(self.grad.data(), outer, inner).colwise().sum().transpose();
      detail::accumulate(*self.parents[1], gb);
    }
  });
}

template <typename Scalar>
Tensor<Scalar> sub(const Tensor<Scalar>& a, const Tensor<Scalar>& b) {
  if (a.shape() != b.shape()) throw shape_error("sub", a.shape(), b.shape());
  return Tensor<Scalar>::make_result(a.shape(), a.value() - b.value(), {a, b}, [](Node<Scalar>& self) {
    detail::accumulate(*self.parents[0], self.grad);
    if (self.parents[1]->requires_grad) {
      typename Node<Scalar>::Vector neg = -self.grad;
      detail::accumulate(*self.parents[1], neg);
    }
  });
}

template <typename Scalar>
Tensor<Scalar> mul(const Tensor<Scalar>& a, const Tensor<Scalar>& b) {
  using Vector = typename Tensor<Scalar>::Vector;
  if (a.shape() == b.shape()) {
    return Tensor<Scalar>::make_result(a.shape(), a.value().cwiseProduct(b.value()), {a, b},
                                       [](Node<Scalar>& self) {
                                         auto& pa = *self.parents[0];
                                         auto& pb = *self.parents[1];
                                         if (pa.requires_grad) detail::accumulate(pa, Vector(self.grad.cwiseProduct(pb.value)));
                                         if (pb.requires_grad) detail::accumulate(pb, Vector(self.grad.cwiseProduct(pa.value)));
                                       });
  }
  if (!detail::is_suffix(a.shape(), b.shape())) throw shape_error("mul", a.shape(), b.shape());
  const Index inner = b.size(), outer = a.size() / inner;
  Vector out(a.size());
  MatMap<Scalar>(out.data(), outer, inner) =
      ConstMatMap<Scalar>(a.data(), outer, inner).array().rowwise() * b.value().transpose().array();
  return Tensor<Scalar>::make_result(a.shape(), std::move(out), {a, b}, [outer, inner](Node<Scalar>& self) {
    auto& pa = *self.parents[0];
    auto& pb = *self.parents[1];
    ConstMatMap<Scalar> g(self.grad.data(), outer, inner);
    if (pa.requires_grad) {
      Vector ga(outer * inner);
      MatMap<Scalar>(ga.data(), outer, inner) = g.array().rowwise() * pb.value.transpose().array();
      detail::accumulate(pa, ga);
    }
    if (pb.requires_grad) {
      Vector gb = (g.array() * ConstMatMap<Scalar>(pa.value.data(), outer, inner).array()).colwise().sum().transpose();
      detail::accumulate(pb, gb);
    }
  });
}

template <typename Scalar>
Tensor<Scalar> scale(const Tensor<Scalar>& a, Scalar s) {
  return Tensor<Scalar>::make_result(a.shape(), a.value() * s, {a}, [s](Node<Scalar>& self) {
    detail::accumulate(*self.parents[0], typename Node<Scalar>::Vector(self.grad * s));
  });
}

template <typename Scalar>
Tensor<Scalar> operator+(const Tensor<Scalar>& a, const Tensor<Scalar>& b) { return add(a, b); }
template <typename Scalar>
Tensor<Scalar> operator-(const Tensor<Scalar>& a, const Tensor<Scalar>& b) { return sub(a, b); }
template <typename Scalar>
Tensor<Scalar> operator*(const Tensor<Scalar>& a, const Tensor<Scalar>& b) { return mul(a, b); }
template <typename Scalar>
Tensor<Scalar> operator*(const Tensor<Scalar>& a, Scalar s) { return scale(a, s); }
template <typename Scalar>
Tensor<Scalar> operator*(Scalar s, const Tensor<Scalar>& a) { return scale(a, s); }

// ---------------------------------------------------------------------------
// Unary pointwise ops.

template <typename Scalar>
Tensor<Scalar> tanh(const Tensor<Scalar>& a) {
  typename Tensor<Scalar>::Vector y = a.value().array().tanh();
  return Tensor<Scalar>::make_result(a.shape(), std::move(y), {a}, [](Node<Scalar>& self) {
    typename Node<Scalar>::Vector g = self.grad.array() * (Scalar(1) - self.value.array().square());
    detail::accumulate(*self.parents[0], g);
  });
}

template <typename Scalar>
Tensor<Scalar> sigmoid(const Tensor<Scalar>& a) {
  typename Tensor<Scalar>::Vector y =
      a.value().unaryExpr([](Scalar x) { return Scalar(1) / (Scalar(1) + std::exp(-x)); });
  return Tensor<Scalar>::make_result(a.shape(), std::move(y), {a}, [](Node<Scalar>& self) {
    typename Node<Scalar>::Vector g =
        self.grad.array() * self.value.array() * (Scalar(1) - self.value.array());
    detail::accumulate(*self.parents[0], g);
  });
}

template <typename Scalar>
Tensor<Scalar> relu(const Tensor<Scalar>& a) {
  typename Tensor<Scalar>::Vector y = a.value().cwiseMax(Scalar(0));
  return Tensor<Scalar>::make_result(a.shape(), std::move(y), {a}, [](Node<Scalar>& self) {
    typename Node<Scalar>::Vector g =
        (self.parents[0]->value.array() > Scalar(0)).select(self.grad, Scalar(0));
    detail::accumulate(*self.parents[0], g);
  });
}

template <typename Scalar>
Tensor<Scalar> sum(const Tensor<Scalar>& a) {
  return Tensor<Scalar>::make_result({1}, Tensor<Scalar>::Vector::Constant(1, a.value().sum()), {a},
                                     [](Node<Scalar>& self) {
                                       const auto n = self.parents[0]->value.size();
                                       detail::accumulate(*self.parents[0],
                                                          Node<Scalar>::Vector::Constant(n, self.grad[0]));
                                     });
}

template <typename Scalar>
Tensor<Scalar> mean(const Tensor<Scalar>& a) {
  return scale(sum(a), Scalar(1) / static_cast<Scalar>(a.size()));
}

// ---------------------------------------------------------------------------
// Shape ops.

template <typename Scalar>
Tensor<Scalar> reshape(const Tensor<Scalar>& a, Shape shape) {
  if (numel(shape) != a.size()) throw shape_error("reshape", a.shape(), shape);
  return Tensor<Scalar>::make_result(std::move(shape), a.value(), {a}, [](Node<Scalar>& self) {
    detail::accumulate(*self.parents[0], self.grad);
  });
}

/// Contiguous range [start, start+length) along one axis.
template <typename Scalar>
Tensor<Scalar> narrow(const Tensor<Scalar>& a, Index axis, Index start, Index length) {
  axis = detail::normalize_axis(axis, a.rank(), "narrow");
  if (start < 0 || length <= 0 || start + length > a.dim(axis)) {
    throw ShapeError("narrow: range [" + std::to_string(start) + "," + std::to_string(start + length) +
                     ") outside axis " + std::to_string(axis) + " of " + to_string(a.shape()));
  }
  const auto s = detail::split_at(a.shape(), axis);
  Shape out_shape = a.shape();
  out_shape[axis] = length;
  typename Tensor<Scalar>::Vector out(s.outer * length * s.inner);
  for (Index o = 0; o < s.outer; ++o) {
    out.segment(o * length * s.inner, length * s.inner) =
        a.value().segment((o * s.axis + start) * s.inner, length * s.inner);
  }
  return Tensor<Scalar>::make_result(std::move(out_shape), std::move(out), {a},
                                     [s, start, length](Node<Scalar>& self) {
                                       auto& p = *self.parents[0];
                                       if (!p.requires_grad) return;
                                       p.ensure_grad();
                                       for (Index o = 0; o < s.outer; ++o) {
                                         p.grad.segment((o * s.axis + start) * s.inner, length * s.inner) +=
                                             self.grad.segment(o * length * s.inner, length * s.inner);
                                       }
                                     });
}

template <typename Scalar>
TensorList<Scalar> split(const Tensor<Scalar>& a, Index axis, const std::vector<Index>& sizes) {
  axis = detail::normalize_axis(axis, a.rank(), "split");
  const Index total = std::accumulate(sizes.begin(), sizes.end(), Index(0));
  if (total != a.dim(axis)) {
    throw ShapeError("split: sizes sum to " + std::to_string(total) + " but axis " + std::to_string(axis) +
                     " of " + to_string(a.shape()) + " has extent " + std::to_string(a.dim(axis)));
  }
  TensorList<Scalar> parts;
  Index start = 0;
  for (Index s : sizes) {
    parts.push_back(narrow(a, axis, start, s));
    start += s;
  }
  return parts;
}

template <typename Scalar>
Tensor<Scalar> concat(const TensorList<Scalar>& parts, Index axis) {
  if (parts.empty()) throw ShapeError("concat: no inputs");
  axis = detail::normalize_axis(axis, parts[0].rank(), "concat");
  Shape out_shape = parts[0].shape();
  out_shape[axis] = 0;
  std::vector<Index> extents;
  for (const auto& p : parts) {
    Shape probe = p.shape();
    if (probe.size() != out_shape.size()) throw shape_error("concat", parts[0].shape(), p.shape());
    probe[axis] = 0;
    Shape ref = parts[0].shape();
    ref[axis] = 0;
    if (probe != ref) throw shape_error("concat", parts[0].shape(), p.shape());
    extents.push_back(p.dim(axis));
    out_shape[axis] += p.dim(axis);
  }
  const auto s = detail::split_at(out_shape, axis);
  typename Tensor<Scalar>::Vector out(numel(out_shape));
  Index offset = 0;
  for (std::size_t k = 0; k < parts.size(); ++k) {
    const Index len = extents[k] * s.inner;
    for (Index o = 0; o < s.outer; ++o) {
      out.segment((o * s.axis) * s.inner + offset, len) = parts[k].value().segment(o * len, len);
    }
    offset += len;
  }
  return Tensor<Scalar>::make_result(std::move(out_shape), std::move(out), parts,
                                     [s, extents](Node<Scalar>& self) {
                                       Index offset = 0;
                                       for (std::size_t k = 0; k < extents.size(); ++k) {
                                         const Index len = extents[k] * s.inner;
                                         auto& p = *self.parents[k];
                                         if (p.requires_grad) {
                                           p.ensure_grad();
                                           for (Index o = 0; o < s.outer; ++o) {
                                             p.grad.segment(o * len, len) +=
                                                 self.grad.segment((o * s.axis) * s.inner + offset, len);
                                           }
                                         }
                                         offset += len;
                                       }
                                     });
}

// ---------------------------------------------------------------------------
// Linear algebra.

/// [m,k] x [k,n] -> [m,n]
template <typename Scalar>
Tensor<Scalar> matmul(const Tensor<Scalar>& a, const Tensor<Scalar>& b) {
  if (a.rank() != 2 || b.rank() != 2 || a.dim(1) != b.dim(0)) throw shape_error("matmul", a.shape(), b.shape());
  const Index m = a.dim(0), k = a.dim(1), n = b.dim(1);
  typename Tensor<Scalar>::Vector out(m * n);
  MatMap<Scalar>(out.data(), m, n).noalias() = ConstMatMap<Scalar>(a.data(), m, k) * ConstMatMap<Scalar>(b.data(), k, n);
  return Tensor<Scalar>::make_result({m, n}, std::move(out), {a, b}, [m, k, n](Node<Scalar>& self) {
    auto& pa = *self.parents[0];
    auto& pb = *self.parents[1];
    ConstMatMap<Scalar> g(self.grad.data(), m, n);
    if (pa.requires_grad) {
      pa.ensure_grad();
      MatMap<Scalar>(pa.grad.data(), m, k).noalias() += g * ConstMatMap<Scalar>(pb.value.data(), k, n).transpose();
    }
    if (pb.requires_grad) {
      pb.ensure_grad();
      MatMap<Scalar>(pb.grad.data(), k, n).noalias() += ConstMatMap<Scalar>(pa.value.data(), m, k).transpose() * g;
    }
  });
}

/// Batched: [B,m,k] x [B,k,n] -> [B,m,n]
template <typename Scalar>
Tensor<Scalar> bmm(const Tensor<Scalar>& a, const Tensor<Scalar>& b) {
  if (a.rank() != 3 || b.rank() != 3 || a.dim(0) != b.dim(0) || a.dim(2) != b.dim(1)) {
    throw shape_error("bmm", a.shape(), b.shape());
  }
  const Index batch = a.dim(0), m = a.dim(1), k = a.dim(2), n = b.dim(2);
  typename Tensor<Scalar>::Vector out(batch * m * n);
  for (Index i = 0; i < batch; ++i) {
    MatMap<Scalar>(out.data() + i * m * n, m, n).noalias() =
        ConstMatMap<Scalar>(a.data() + i * m * k, m, k) * ConstMatMap<Scalar>(b.data() + i * k * n, k, n);
  }
  return Tensor<Scalar>::make_result({batch, m, n}, std::move(out), {a, b}, [batch, m, k, n](Node<Scalar>& self) {
    auto& pa = *self.parents[0];
    auto& pb = *self.parents[1];
    if (pa.requires_grad) pa.ensure_grad();
    if (pb.requires_grad) pb.ensure_grad();
    for (Index i = 0; i < batch; ++i) {
      ConstMatMap<Scalar> g(self.grad.data() + i * m * n, m, n);
      if (pa.requires_grad) {
        MatMap<Scalar>(pa.grad.data() + i * m * k, m, k).noalias() +=
            g * ConstMatMap<Scalar>(pb.value.data() + i * k * n, k, n).transpose();
      }
      if (pb.requires_grad) {
        MatMap<Scalar>(pb.grad.data() + i * k * n, k, n).noalias() +=
            ConstMatMap<Scalar>(pa.value.data() + i * m * k, m, k).transpose() * g;
      }
    }
  });
}

/// x[..., in] * W[in, out] + b[out]
template <typename Scalar>
Tensor<Scalar> linear(const Tensor<Scalar>& x, const Tensor<Scalar>& weight, const Tensor<Scalar>& bias) {
  return add(matmul(x, weight), bias);
}

// ---------------------------------------------------------------------------
// Reductions and normalisation.

template <typename Scalar>
Tensor<Scalar> softmax(const Tensor<Scalar>& a, Index axis) {
  axis = detail::normalize_axis(axis, a.rank(), "softmax");
  const auto s = detail::split_at(a.shape(), axis);
  typename Tensor<Scalar>::Vector y(a.size());
  const Scalar* x = a.data();
  for (Index o = 0; o < s.outer; ++o) {
    for (Index in = 0; in < s.inner; ++in) {
      const Index base = o * s.axis * s.inner + in;
      Scalar mx = x[base];
      for (Index k = 1; k < s.axis; ++k) mx = std::max(mx, x[base + k * s.inner]);
      Scalar total = 0;
      for (Index k = 0; k < s.axis; ++k) {
        const Scalar e = std::exp(x[base + k * s.inner] - mx);
        y[base + k * s.inner] = e;
        total += e;
      }
      for (Index k = 0; k < s.axis; ++k) y[base + k * s.inner] /= total;
    }
  }
  return Tensor<Scalar>::make_result(a.shape(), std::move(y), {a}, [s](Node<Scalar>& self) {
    auto& p = *self.parents[0];
    if (!p.requires_grad) return;
    p.ensure_grad();
    for (Index o = 0; o < s.outer; ++o) {
      for (Index in = 0; in < s.inner; ++in) {
        const Index base = o * s.axis * s.inner + in;
        Scalar dot = 0;
        for (Index k = 0; k < s.axis; ++k) dot += self.grad[base + k * s.inner] * self.value[base + k * s.inner];
        for (Index k = 0; k < s.axis; ++k) {
          const Index idx = base + k * s.inner;
          p.grad[idx] += self.value[idx] * (self.grad[idx] - dot);
        }
      }
    }
  });
}

/// [N, C, spatial...] -> [N, C]
template <typename Scalar>
Tensor<Scalar> global_avg_pool(const Tensor<Scalar>& a) {
  if (a.rank() < 3) throw ShapeError("global_avg_pool: expected [N,C,...], got " + to_string(a.shape()));
  const Index rows = a.dim(0) * a.dim(1), area = a.size() / rows;
  typename Tensor<Scalar>::Vector y = ConstMatMap<Scalar>(a.data(), rows, area).rowwise().mean();
  return Tensor<Scalar>::make_result({a.dim(0), a.dim(1)}, std::move(y), {a}, [rows, area](Node<Scalar>& self) {
    auto& p = *self.parents[0];
    if (!p.requires_grad) return;
    p.ensure_grad();
    MatMap<Scalar>(p.grad.data(), rows, area).colwise() += self.grad / static_cast<Scalar>(area);
  });
}

template <typename Scalar>
Tensor<Scalar> mse(const Tensor<Scalar>& pred, const Tensor<Scalar>& target) {
  if (pred.shape() != target.shape()) throw shape_error("mse", pred.shape(), target.shape());
  const auto n = static_cast<Scalar>(pred.size());
  typename Tensor<Scalar>::Vector diff = pred.value() - target.value();
  const Scalar loss = diff.squaredNorm() / n;
  return Tensor<Scalar>::make_result({1}, Tensor<Scalar>::Vector::Constant(1, loss), {pred, target},
                                     [n](Node<Scalar>& self) {
                                       auto& p = *self.parents[0];
                                       auto& t = *self.parents[1];
                                       typename Node<Scalar>::Vector g =
                                           (p.value - t.value) * (Scalar(2) * self.grad[0] / n);
                                       detail::accumulate(p, g);
                                       if (t.requires_grad) detail::accumulate(t, typename Node<Scalar>::Vector(-g));
                                     });
}

}  // namespace sockweave::diff
