#include "sockweave/policy/inputs.hpp"

#include "sockweave/perception/perception.hpp"

#include <algorithm>

namespace sockweave::policy {

std::vector<float> image_channels(const perception::MaskImage& sock, const perception::MaskImage& foot,
                                  const perception::DepthMap& depth, const perception::GrayImage& gray,
                                  const ModelConfig& cfg) {
  const auto area = sock.size();
  std::vector<float> out(2 * area);
  auto put = [&](int ch, const perception::Image<float>& img) {
    std::copy(img.data(), img.data() + area, out.begin() + ch * area);
  };
  if (cfg.gray_input()) {
    const perception::Image<float> g = gray.cast<float>() / 255.0f;
    put(0, g);
    put(1, g);
  } else if (!cfg.uses_depth()) {
    put(0, perception::normalize_mask<float>(sock));
    put(1, perception::normalize_mask<float>(foot));
  } else {
    put(0, perception::masked_depth(depth, sock).values);
    put(1, perception::masked_depth(depth, foot).values);
  }
  return out;
}

}  // namespace sockweave::policy
