#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace sockweave::policy {

/// Per-dimension min/max over a training set.
struct Range {
  Eigen::VectorXd min;
  Eigen::VectorXd max;

  Eigen::Index dims() const { return min.size(); }
  bool constant(Eigen::Index i) const { return max[i] == min[i]; }

  static Range of(std::span<const Eigen::VectorXd> rows);
};

struct NormStats {
  Range angles, torques, tactile;
};

inline void check_dims(const char* op, Eigen::Index got, const Range& r) {
  if (got != r.dims()) {
    throw std::invalid_argument(std::string(op) + ": vector has " + std::to_string(got) + " dims, stats have " +
                                std::to_string(r.dims()));
  }
}

/// (x - min) / (max - min), clamped to [0, 1]; constant dims map to 0.5.
template <typename Derived>
Eigen::VectorXd normalize(const Eigen::MatrixBase<Derived>& x, const Range& r) {
  check_dims("normalize", x.size(), r);
  Eigen::VectorXd y(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    y[i] = r.constant(i) ? 0.5 : std::clamp((double(x[i]) - r.min[i]) / (r.max[i] - r.min[i]), 0.0, 1.0);
  }
  return y;
}

/// min + y (max - min).
template <typename Derived>
Eigen::VectorXd denormalize(const Eigen::MatrixBase<Derived>& y, const Range& r) {
  check_dims("denormalize", y.size(), r);
  return r.min.array() + y.template cast<double>().array() * (r.max - r.min).array();
}

inline Range Range::of(std::span<const Eigen::VectorXd> rows) {
  if (rows.empty()) throw std::invalid_argument("Range::of: no rows");
  Range r{rows.front(), rows.front()};
  for (const auto& row : rows) {
    if (row.size() != r.dims()) throw std::invalid_argument("Range::of: ragged rows");
    r.min = r.min.cwiseMin(row);
    r.max = r.max.cwiseMax(row);
  }
  return r;
}

}  // namespace sockweave::policy
