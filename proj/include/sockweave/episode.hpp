#pragma once

#include "sockweave/perception/image.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <string>
#include <vector>

namespace sockweave {

/// One demonstration: per-step oracle images and raw proprioception.
struct EpisodeRecord {
  std::string id;
  double foot_angle = 40.0;  // degrees
  double foot_size = 2.5;    // scene units
  std::uint64_t seed = 0;

  std::vector<perception::MaskImage> sock_mask;
  std::vector<perception::MaskImage> foot_mask;
  std::vector<perception::DepthMap> depth;
  std::vector<perception::GrayImage> gray;
  std::vector<Eigen::VectorXd> angles;   // rad
  std::vector<Eigen::VectorXd> torques;  // N m
  std::vector<Eigen::VectorXd> tactile;  // N

  int steps() const { return static_cast<int>(angles.size()); }
};

}  // namespace sockweave
