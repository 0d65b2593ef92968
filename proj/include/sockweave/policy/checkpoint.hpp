#pragma once

#include "sockweave/policy/model.hpp"

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <stdexcept>

namespace sockweave::policy {

inline constexpr std::uint32_t kCheckpointVersion = 1;

class CheckpointError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Binary layout, little-endian: magic "HLSMCKPT", u32 version, config hash
/// and config JSON as length-prefixed strings, normalization ranges as f64,
/// then named f32 sections. A JSON sidecar (`<path>.json`) describes it.
void save_checkpoint(const ModelParams<float>& params, const std::filesystem::path& path);

struct LoadOptions {
  // Refuse a checkpoint whose config hash differs, unless `force`.
  std::optional<std::uint64_t> expected_hash;
  bool force = false;
  std::ostream* warnings = nullptr;  // defaults to std::cerr
};

ModelParams<float> load_checkpoint(const std::filesystem::path& path, const LoadOptions& options = {});

std::string hash_string(std::uint64_t hash);

}  // namespace sockweave::policy
