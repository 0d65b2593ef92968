#pragma once

#include "sockweave/perception/image.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace sockweave::sim {
struct SimState;
}

namespace sockweave::perception {

class PerceptionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Maps 255 -> 1 and 0 -> 0; any other value is rejected.
template <typename Scalar = float>
Image<Scalar> normalize_mask(const MaskImage& mask) {
  Image<Scalar> out(mask.rows(), mask.cols());
  for (Eigen::Index i = 0; i < mask.size(); ++i) {
    const auto v = mask.data()[i];
    if (v != 0 && v != 255) {
      throw PerceptionError("normalize_mask: pixel " + std::to_string(i) + " has value " + std::to_string(v) +
                            ", expected 0 or 255");
    }
    out.data()[i] = v == 255 ? Scalar(1) : Scalar(0);
  }
  return out;
}

/// Depth kept where the mask is 255, fill elsewhere. With FillMode::zero this
/// is the Hadamard product of the normalized mask and the depth map.
template <typename Scalar>
MaskedDepth<Scalar> masked_depth(const Image<Scalar>& depth, const MaskImage& mask, FillMode fill = FillMode::zero) {
  if (depth.rows() != mask.rows() || depth.cols() != mask.cols()) {
    throw PerceptionError("masked_depth: depth is " + std::to_string(depth.rows()) + "x" +
                          std::to_string(depth.cols()) + " but mask is " + std::to_string(mask.rows()) + "x" +
                          std::to_string(mask.cols()));
  }
  MaskedDepth<Scalar> out;
  out.fill = fill;
  if (fill == FillMode::zero) {
    out.values = normalize_mask<Scalar>(mask) * depth;
  } else {
    normalize_mask<Scalar>(mask);  // validates
    const Scalar nan = std::numeric_limits<Scalar>::quiet_NaN();
    out.values = (mask == std::uint8_t(255)).select(depth, Image<Scalar>::Constant(depth.rows(), depth.cols(), nan));
  }
  return out;
}

bool is_binary(const MaskImage& mask);

enum class Target { sock, foot };

/// Silhouette of the target as seen by the scene camera. The sock occludes
/// the foot, so foot pixels covered by the sock are 0 in the foot mask.
MaskImage oracle_segment(const sim::SimState& state, Target target);

/// Relative depth per pixel: background 1.0, foot 0.5 + 0.3 * profile,
/// sock 0.05 nearer than the foot rule at that pixel.
DepthMap oracle_depth(const sim::SimState& state);

struct OracleView {
  MaskImage sock;
  MaskImage foot;
  DepthMap depth;
};
/// Both masks and the depth map from one rasterization pass.
OracleView oracle_view(const sim::SimState& state);

/// Pixel (row, col) center in scene units.
inline Eigen::Vector2d pixel_center(int row, int col, int size = kImageSize, double extent = 6.4) {
  const double px = extent / size;
  return {(col + 0.5) * px, extent - (row + 0.5) * px};
}

/// Depth pooled down by `factor` (mean over factor x factor blocks).
template <typename Scalar>
Image<Scalar> average_pool(const Image<Scalar>& img, int factor) {
  if (factor <= 0 || img.rows() % factor != 0 || img.cols() % factor != 0) {
    throw PerceptionError("average_pool: " + std::to_string(img.rows()) + "x" + std::to_string(img.cols()) +
                          " is not divisible by " + std::to_string(factor));
  }
  Image<Scalar> out(img.rows() / factor, img.cols() / factor);
  for (Eigen::Index i = 0; i < out.rows(); ++i) {
    for (Eigen::Index j = 0; j < out.cols(); ++j) {
      out(i, j) = img.block(i * factor, j * factor, factor, factor).mean();
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// PGM (binary P5) export.

void write_pgm8(const std::string& path, const Image<std::uint8_t>& img);
/// 16-bit P5, big-endian samples as the format requires.
void write_pgm16(const std::string& path, const Image<std::uint16_t>& img);

struct PgmImage {
  int maxval = 255;
  Image<std::uint16_t> pixels;
};
PgmImage read_pgm(const std::string& path);

/// round(depth * 65535); NaN (the nan fill) is stored as 0.
Image<std::uint16_t> quantize_depth(const Image<float>& depth);
Image<float> dequantize_depth(const Image<std::uint16_t>& q);

void write_depth_pgm(const std::string& path, const DepthMap& depth);
void write_masked_depth_pgm(const std::string& path, const MaskedDepth<float>& md);
DepthMap read_depth_pgm(const std::string& path);
MaskImage read_mask_pgm(const std::string& path);

}  // namespace sockweave::perception
