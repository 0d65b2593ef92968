#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace sockweave::policy {

enum class Variant { full, no_dam, no_sknet, no_hier, no_sam_dam };

std::string to_string(Variant v);
/// Throws std::invalid_argument for unknown names.
Variant parse_variant(const std::string& name);

struct LossWeights {
  double img = 0.1;
  double pt = 0.1;
  double angle = 1.5;
  double torque = 1.0;
  double tactile = 0.2;
};

struct ModelConfig {
  Variant variant = Variant::full;
  int image_size = 64;
  int enc_c1 = 8;
  int enc_c2 = 16;
  int keypoints = 6;  // first half attends the sock channel, second half the foot
  int dec_hidden = 8;
  double tau = 1.0;
  double sigma = 0.1;
  int sk_channels = 8;
  int sk_reduced = 4;
  int hidden = 32;        // bottom LSTM width
  int union_hidden = 64;  // union LSTM width
  int flat_hidden = 128;  // single LSTM used by no_hier
  int angle_dims = 14;
  int torque_dims = 14;
  int tactile_dims = 2;
  bool point_loss_3d = false;
  // Ticks between policy steps; training subsamples episodes to match.
  int control_stride = 5;
  // Heads predict a bounded change added to the current input.
  bool residual_heads = false;
  LossWeights weights;

  bool uses_depth() const { return variant != Variant::no_dam && variant != Variant::no_sam_dam; }
  bool uses_sknet() const { return variant != Variant::no_sknet; }
  bool hierarchical() const { return variant != Variant::no_hier; }
  bool gray_input() const { return variant == Variant::no_sam_dam; }
  int point_dims() const { return uses_depth() ? 3 : 2; }
  int vision_dims() const { return keypoints * point_dims(); }
  int feature_size() const { return (image_size + 3) / 4; }

  /// Reduced dims for finite-difference checks.
  static ModelConfig toy(Variant v = Variant::full);
  static ModelConfig for_variant(Variant v);

  std::string to_json() const;
  static ModelConfig from_json(const std::string& text);
  /// FNV-1a of to_json().
  std::uint64_t hash() const;
};

}  // namespace sockweave::policy
