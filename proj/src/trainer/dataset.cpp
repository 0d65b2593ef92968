#include "sockweave/trainer/dataset.hpp"

#include "sockweave/diff/random.hpp"
#include "sockweave/perception/perception.hpp"

#include <json.hpp>

#include <cstdio>
#include <fstream>
#include <sstream>

namespace sockweave::trainer {

namespace fs = std::filesystem;
using nlohmann::json;

EpisodeRecord episode_from_trace(const sim::ExpertTrace& trace, std::string id, std::uint64_t seed) {
  EpisodeRecord ep;
  ep.id = std::move(id);
  ep.foot_angle = trace.final_state.foot.angle_deg;
  ep.foot_size = trace.final_state.foot.length;
  ep.seed = seed;
  for (const auto& f : trace.frames) {
    ep.sock_mask.push_back(f.sock_mask);
    ep.foot_mask.push_back(f.foot_mask);
    ep.depth.push_back(f.depth);
    ep.gray.push_back(f.gray);
    ep.angles.push_back(f.body.angles);
    ep.torques.push_back(f.body.torques);
    ep.tactile.push_back(f.body.tactile);
  }
  return ep;
}

std::vector<EpisodeRecord> generate_dataset(const GenSpec& spec, const std::function<void(const std::string&)>& log) {
  if (spec.episodes < 0 || spec.angles.empty() || spec.sizes.empty()) {
    throw std::invalid_argument("generate_dataset: need a non-negative episode count and at least one angle and size");
  }
  diff::Rng rng(spec.seed);
  std::vector<EpisodeRecord> out;
  const std::size_t na = spec.angles.size(), ns = spec.sizes.size();
  for (int i = 0; i < spec.episodes; ++i) {
    const double angle = spec.angles[i % na];
    const double size = spec.sizes[(i / na) % ns];
    const auto foot = sim::make_foot(angle, size);
    std::uint64_t seed = rng.next();
    bool ok = false;
    for (int attempt = 0; attempt <= spec.retries && !ok; ++attempt, ++seed) {
      auto trace = sim::run_expert(foot, seed);
      if (trace.report.success) {
        char id[32];
        std::snprintf(id, sizeof id, "ep%03d", i);
        out.push_back(episode_from_trace(trace, id, seed));
        ok = true;
      } else if (log) {
        log("discarded expert run: angle " + std::to_string(angle) + ", size " + std::to_string(size) + ", seed " +
            std::to_string(seed) + " (" + sim::to_string(trace.report.failure) + ")");
      }
    }
    if (!ok) {
      throw std::runtime_error("expert failed " + std::to_string(spec.retries + 1) + " times for episode " +
                               std::to_string(i));
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Disk layout

namespace {

std::string frame_name(const char* kind, int t) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%s_%04d.pgm", kind, t);
  return buf;
}

void write_csv(const fs::path& path, const std::vector<Eigen::VectorXd>& rows, const char* prefix) {
  std::ofstream out(path);
  if (!out) throw DatasetError("cannot write " + path.string());
  const auto dims = rows.empty() ? 0 : rows.front().size();
  for (Eigen::Index k = 0; k < dims; ++k) out << (k ? "," : "") << prefix << k;
  out << '\n';
  char buf[40];
  for (const auto& r : rows) {
    for (Eigen::Index k = 0; k < r.size(); ++k) {
      std::snprintf(buf, sizeof buf, "%.17g", r[k]);
      out << (k ? "," : "") << buf;
    }
    out << '\n';
  }
}

std::vector<Eigen::VectorXd> read_csv(const fs::path& path, const std::string& episode, int dims) {
  std::ifstream in(path);
  if (!in) throw DatasetError("episode " + episode + ": missing " + path.filename().string());
  std::string line;
  std::getline(in, line);  // header
  std::vector<Eigen::VectorXd> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    Eigen::VectorXd r(dims);
    std::stringstream ss(line);
    std::string cell;
    int k = 0;
    while (std::getline(ss, cell, ',')) {
      if (k >= dims) break;
      try {
        r[k++] = std::stod(cell);
      } catch (const std::exception&) {
        throw DatasetError("episode " + episode + ": bad value '" + cell + "' in " + path.filename().string() +
                           " step " + std::to_string(rows.size()));
      }
    }
    if (k != dims || std::getline(ss, cell, ',')) {
      throw DatasetError("episode " + episode + ": " + path.filename().string() + " step " + std::to_string(rows.size()) +
                         " has the wrong number of columns (expected " + std::to_string(dims) + ")");
    }
    rows.push_back(std::move(r));
  }
  return rows;
}

}  // namespace

void save_dataset(std::span<const EpisodeRecord> episodes, const fs::path& dir) {
  fs::create_directories(dir);
  json manifest;
  manifest["version"] = kDatasetVersion;
  manifest["image_size"] = perception::kImageSize;
  manifest["dims"] = {{"angles", sim::kAngleDims}, {"torques", sim::kTorqueDims}, {"tactile", sim::kTactileDims}};
  manifest["episodes"] = json::array();
  int common_t = -1;
  for (const auto& ep : episodes) {
    const fs::path ed = dir / ep.id;
    fs::create_directories(ed / "frames");
    write_csv(ed / "angles.csv", ep.angles, "q");
    write_csv(ed / "torques.csv", ep.torques, "tau");
    write_csv(ed / "tactile.csv", ep.tactile, "f");
    for (int t = 0; t < ep.steps(); ++t) {
      perception::write_pgm8((ed / "frames" / frame_name("sock", t)).string(), ep.sock_mask[t]);
      perception::write_pgm8((ed / "frames" / frame_name("foot", t)).string(), ep.foot_mask[t]);
      perception::write_depth_pgm((ed / "frames" / frame_name("depth", t)).string(), ep.depth[t]);
      perception::write_pgm8((ed / "frames" / frame_name("gray", t)).string(), ep.gray[t]);
    }
    manifest["episodes"].push_back({{"id", ep.id},
                                    {"foot_angle", ep.foot_angle},
                                    {"foot_size", ep.foot_size},
                                    {"seed", ep.seed},
                                    {"T", ep.steps()}});
    common_t = common_t < 0 || common_t == ep.steps() ? ep.steps() : 0;
  }
  manifest["T"] = std::max(common_t, 0);
  std::ofstream(dir / "manifest.json") << manifest.dump(2) << '\n';
}

std::vector<EpisodeRecord> load_dataset(const fs::path& dir) {
  std::ifstream in(dir / "manifest.json");
  if (!in) throw DatasetError("no manifest.json in " + dir.string());
  json manifest;
  try {
    in >> manifest;
  } catch (const std::exception& e) {
    throw DatasetError("manifest.json: " + std::string(e.what()));
  }
  const int version = manifest.value("version", -1);
  if (version != kDatasetVersion) {
    throw DatasetError("manifest.json: unsupported version " + std::to_string(version) + " (expected " +
                       std::to_string(kDatasetVersion) + ")");
  }
  const auto& dims = manifest.at("dims");
  const int na = dims.at("angles"), nt = dims.at("torques"), nf = dims.at("tactile");
  std::vector<EpisodeRecord> out;
  for (const auto& e : manifest.at("episodes")) {
    EpisodeRecord ep;
    ep.id = e.at("id").get<std::string>();
    ep.foot_angle = e.at("foot_angle");
    ep.foot_size = e.at("foot_size");
    ep.seed = e.at("seed");
    const int T = e.at("T");
    const fs::path ed = dir / ep.id;
    ep.angles = read_csv(ed / "angles.csv", ep.id, na);
    ep.torques = read_csv(ed / "torques.csv", ep.id, nt);
    ep.tactile = read_csv(ed / "tactile.csv", ep.id, nf);
    for (auto [name, rows] : {std::pair{"angles.csv", &ep.angles}, {"torques.csv", &ep.torques}, {"tactile.csv", &ep.tactile}}) {
      if (static_cast<int>(rows->size()) != T) {
        throw DatasetError("episode " + ep.id + ": manifest T=" + std::to_string(T) + " but " + name + " has " +
                           std::to_string(rows->size()) + " rows");
      }
    }
    for (int t = 0; t < T; ++t) {
      auto frame = [&](const char* kind) {
        const auto p = ed / "frames" / frame_name(kind, t);
        if (!fs::exists(p)) throw DatasetError("episode " + ep.id + ": missing frame " + p.filename().string() + " (step " + std::to_string(t) + ")");
        return p.string();
      };
      ep.sock_mask.push_back(perception::read_mask_pgm(frame("sock")));
      ep.foot_mask.push_back(perception::read_mask_pgm(frame("foot")));
      ep.depth.push_back(perception::read_depth_pgm(frame("depth")));
      auto g = perception::read_pgm(frame("gray"));
      ep.gray.push_back(g.pixels.cast<std::uint8_t>());
    }
    out.push_back(std::move(ep));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Tensors

policy::NormStats compute_stats(std::span<const EpisodeRecord> episodes) {
  std::vector<Eigen::VectorXd> a, q, f;
  for (const auto& ep : episodes) {
    a.insert(a.end(), ep.angles.begin(), ep.angles.end());
    q.insert(q.end(), ep.torques.begin(), ep.torques.end());
    f.insert(f.end(), ep.tactile.begin(), ep.tactile.end());
  }
  return {policy::Range::of(a), policy::Range::of(q), policy::Range::of(f)};
}

policy::SequenceBatch<float> make_batch(std::span<const EpisodeRecord* const> episodes, const policy::ModelConfig& cfg,
                                        const policy::NormStats& stats) {
  if (episodes.empty()) throw std::invalid_argument("make_batch: no episodes");
  const int full_t = episodes.front()->steps();
  for (const auto* ep : episodes) {
    if (ep->steps() != full_t) throw DatasetError("make_batch: episode " + ep->id + " has " + std::to_string(ep->steps()) + " steps, expected " + std::to_string(full_t));
  }
  // Each episode becomes `stride` interleaved subsequences, one per phase.
  const int stride = cfg.control_stride;
  const int T = full_t / stride;
  if (T < 1) throw DatasetError("make_batch: episodes shorter than the control stride");
  const int B = static_cast<int>(episodes.size()) * stride;
  const auto& e0 = *episodes.front();
  const diff::Index H = e0.depth.front().rows(), W = e0.depth.front().cols(), area = H * W;
  const diff::Index rows = diff::Index(T) * B;
  Eigen::VectorXf frames(rows * 2 * area), depth(rows * area);
  Eigen::VectorXf angles(rows * cfg.angle_dims), torques(rows * cfg.torque_dims), tactile(rows * cfg.tactile_dims);
  for (int t = 0; t < T; ++t) {
    for (int b = 0; b < B; ++b) {
      const auto& ep = *episodes[b / stride];
      const diff::Index r = diff::Index(t) * B + b;
      const int k = t * stride + b % stride;
      const auto img = policy::image_channels(ep.sock_mask[k], ep.foot_mask[k], ep.depth[k], ep.gray[k], cfg);
      std::copy(img.begin(), img.end(), frames.data() + r * 2 * area);
      std::copy(ep.depth[k].data(), ep.depth[k].data() + area, depth.data() + r * area);
      angles.segment(r * cfg.angle_dims, cfg.angle_dims) = policy::normalize(ep.angles[k], stats.angles).cast<float>();
      torques.segment(r * cfg.torque_dims, cfg.torque_dims) = policy::normalize(ep.torques[k], stats.torques).cast<float>();
      tactile.segment(r * cfg.tactile_dims, cfg.tactile_dims) = policy::normalize(ep.tactile[k], stats.tactile).cast<float>();
    }
  }
  policy::SequenceBatch<float> seq;
  seq.steps = T;
  seq.batch = B;
  seq.frames = diff::Tensor<float>({rows, 2, H, W}, std::move(frames));
  seq.depth = diff::Tensor<float>({rows, 1, H, W}, std::move(depth));
  seq.angles = diff::Tensor<float>({rows, cfg.angle_dims}, std::move(angles));
  seq.torques = diff::Tensor<float>({rows, cfg.torque_dims}, std::move(torques));
  seq.tactile = diff::Tensor<float>({rows, cfg.tactile_dims}, std::move(tactile));
  return seq;
}

}  // namespace sockweave::trainer
