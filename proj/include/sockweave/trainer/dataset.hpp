#pragma once

#include "sockweave/episode.hpp"
#include "sockweave/policy/inputs.hpp"
#include "sockweave/policy/model.hpp"
#include "sockweave/sim/sim.hpp"

#include <filesystem>
#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace sockweave::trainer {

class DatasetError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr int kDatasetVersion = 1;

EpisodeRecord episode_from_trace(const sim::ExpertTrace& trace, std::string id, std::uint64_t seed);

struct GenSpec {
  int episodes = 12;
  std::vector<double> angles{30.0, 40.0, 50.0};
  std::vector<double> sizes{2.3, 2.4, 2.5, 2.6};
  std::uint64_t seed = 0;
  int retries = 5;  // fresh seeds tried per episode before giving up
};

/// Episode i uses angles[i % A] and sizes[(i / A) % S]. Failed expert runs
/// are retried with the next seed and reported through `log`.
std::vector<EpisodeRecord> generate_dataset(const GenSpec& spec, const std::function<void(const std::string&)>& log = {});

void save_dataset(std::span<const EpisodeRecord> episodes, const std::filesystem::path& dir);
std::vector<EpisodeRecord> load_dataset(const std::filesystem::path& dir);

policy::NormStats compute_stats(std::span<const EpisodeRecord> episodes);

/// t-major batch of whole episodes (all must share one length).
policy::SequenceBatch<float> make_batch(std::span<const EpisodeRecord* const> episodes, const policy::ModelConfig& cfg,
                                        const policy::NormStats& stats);

}  // namespace sockweave::trainer
