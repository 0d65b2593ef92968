#pragma once

#include "sockweave/perception/image.hpp"
#include "sockweave/policy/config.hpp"

#include <vector>

namespace sockweave::policy {

/// Two input channels for one step, as the variant sees them, row-major
/// [2, H, W] in [0, 1].
std::vector<float> image_channels(const perception::MaskImage& sock, const perception::MaskImage& foot,
                                  const perception::DepthMap& depth, const perception::GrayImage& gray,
                                  const ModelConfig& cfg);

}  // namespace sockweave::policy
