#pragma once

#include <Eigen/Core>

#include <cstdint>

namespace sockweave::perception {

template <typename T>
using Image = Eigen::Array<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Binary segmentation: every pixel is 0 or 255.
using MaskImage = Image<std::uint8_t>;
/// Relative scene depth in [0, 1]; 1 is background.
using DepthMap = Image<float>;
/// Plain rendered intensity image (no semantics), 0..255.
using GrayImage = Image<std::uint8_t>;

enum class FillMode { zero, nan };

template <typename Scalar>
struct MaskedDepth {
  Image<Scalar> values;
  FillMode fill = FillMode::zero;

  Eigen::Index width() const { return values.cols(); }
  Eigen::Index height() const { return values.rows(); }
};

struct PerceptionFrame {
  MaskedDepth<float> sock_masked_depth;
  MaskedDepth<float> foot_masked_depth;
  DepthMap raw_depth;
};

inline constexpr int kImageSize = 64;

}  // namespace sockweave::perception
