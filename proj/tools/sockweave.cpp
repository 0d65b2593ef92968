#include "sockweave/policy/checkpoint.hpp"
#include "sockweave/policy/closed_loop.hpp"
#include "sockweave/perception/perception.hpp"
#include "sockweave/trainer/dataset.hpp"
#include "sockweave/trainer/gradsuite.hpp"
#include "sockweave/trainer/train.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>

namespace fs = std::filesystem;
using namespace sockweave;
using json = nlohmann::ordered_json;

namespace {

enum Exit { kOk = 0, kFailure = 1, kValidation = 2, kNumerical = 3, kGate = 4 };

struct ValidationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct RunConfig {
  std::string command;
  std::uint64_t seed = 0;
  std::string data, ckpt, out, report;
  int epochs = 60;
  double lr = 1e-3;
  int batch_episodes = 1;
  std::string variant = "full";
  std::vector<double> angles, sizes;
  int episodes = 0;
  int ticks = 300;

  json to_json() const {
    return {{"command", command}, {"seed", seed},       {"data", data},         {"ckpt", ckpt},
            {"out", out},         {"report", report},   {"epochs", epochs},     {"lr", lr},
            {"batch_episodes", batch_episodes},         {"variant", variant},   {"angles", angles},
            {"sizes", sizes},     {"episodes", episodes}, {"ticks", ticks}};
  }
};

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot write " + path.string());
  out << text;
}

void write_config(const RunConfig& rc, const fs::path& dir) {
  fs::create_directories(dir);
  write_text(dir / "config.json", rc.to_json().dump(2) + "\n");
}

void require_fresh_dir(const fs::path& dir) {
  if (fs::exists(dir) && !fs::is_empty(dir)) throw ValidationError(dir.string() + " exists and is not empty");
}

int cmd_gen(const RunConfig& rc) {
  const fs::path out = rc.out;
  require_fresh_dir(out);
  trainer::GenSpec spec;
  spec.episodes = rc.episodes;
  spec.angles = rc.angles;
  spec.sizes = rc.sizes;
  spec.seed = rc.seed;
  try {
    const auto episodes = trainer::generate_dataset(spec, [](const std::string& m) { std::cerr << m << '\n'; });
    trainer::save_dataset(episodes, out);
    write_config(rc, out);
    std::printf("wrote %zu episodes to %s\n", episodes.size(), out.string().c_str());
  } catch (...) {
    std::error_code ec;
    fs::remove_all(out, ec);
    throw;
  }
  return kOk;
}

int cmd_train(const RunConfig& rc) {
  const auto episodes = trainer::load_dataset(rc.data);
  const fs::path out = rc.out;
  write_config(rc, out);
  trainer::TrainConfig tc;
  tc.epochs = rc.epochs;
  tc.lr = rc.lr;
  tc.seed = rc.seed;
  tc.batch_episodes = rc.batch_episodes;
  tc.loss_log = out / "loss.csv";
  tc.on_epoch = [&](int epoch, const trainer::LossBreakdown& l) {
    if (epoch % 10 == 0 || epoch + 1 == rc.epochs) std::printf("epoch %d loss %.6g\n", epoch, l.total);
    std::fflush(stdout);
  };
  const auto result = trainer::train(episodes, trainer::build_variant(rc.variant), tc);
  policy::save_checkpoint(result.params, out / "model.ckpt");
  std::printf("checkpoint %s\n", (out / "model.ckpt").string().c_str());
  return kOk;
}

int cmd_eval(const RunConfig& rc, bool check_variant, bool force) {
  policy::LoadOptions opts;
  if (check_variant) opts.expected_hash = trainer::build_variant(rc.variant).hash();
  opts.force = force;
  const auto params = policy::load_checkpoint(rc.ckpt, opts);
  const auto specs = policy::rollout_specs(rc.angles, rc.sizes, rc.episodes, rc.seed);
  const auto rollouts = policy::evaluate(params, specs, rc.ticks);
  auto report = policy::report_json(rollouts);
  report["variant"] = policy::to_string(params.config.variant);
  std::printf("%d/%zu successful\n", report["successes"].get<int>(), rollouts.size());
  if (!rc.report.empty()) {
    const fs::path path = rc.report;
    if (path.has_parent_path()) write_config(rc, path.parent_path());
    write_text(path, report.dump(2) + "\n");
  }
  return kOk;
}

int cmd_gradcheck(const std::string& scale, double corrupt) {
  trainer::GradSuiteOptions opts;
  if (scale == "toy") opts.scale = trainer::GradScale::toy;
  else if (scale == "full") opts.scale = trainer::GradScale::full;
  else throw ValidationError("unknown scale '" + scale + "' (toy or full)");
  opts.corrupt_factor = corrupt;
  bool ok = true;
  for (const auto& c : trainer::run_grad_suite(opts)) {
    std::printf("%-36s max_rel_err %.3e over %zu entries  %s\n", c.name.c_str(), c.max_relative_error, c.checked,
                c.passed ? "ok" : "FAIL");
    ok = ok && c.passed;
  }
  return ok ? kOk : kGate;
}

int cmd_export(const RunConfig& rc, const std::string& episode) {
  const auto params = policy::load_checkpoint(rc.ckpt);
  const auto episodes = trainer::load_dataset(rc.data);
  const EpisodeRecord* ep = nullptr;
  for (const auto& e : episodes) {
    if (e.id == episode) ep = &e;
  }
  if (!ep) {
    std::size_t idx = 0;
    const bool numeric = !episode.empty() && episode.find_first_not_of("0123456789") == std::string::npos;
    if (numeric) idx = std::stoul(episode);
    if (!numeric || idx >= episodes.size()) throw ValidationError("no episode '" + episode + "' in " + rc.data);
    ep = &episodes[idx];
  }
  const fs::path out = rc.out;
  write_config(rc, out);
  fs::create_directories(out / "frames");

  diff::NoGradGuard no_grad;
  const auto& cfg = params.config;
  const EpisodeRecord* one[] = {ep};
  const auto seq = trainer::make_batch(one, cfg, params.stats);
  const auto result = policy::rollout_open_loop(seq, params, true);
  // Only the phase-0 subsequence; rows are t-major with one row per phase.
  const int T = static_cast<int>(seq.steps), B = static_cast<int>(seq.batch), K = cfg.keypoints,
            P = cfg.point_dims(), stride = cfg.control_stride;

  // Attention keypoints of each frame the decoder predicts, plus the
  // recurrent prediction of them one step earlier. t counts ticks.
  std::ofstream csv(out / "keypoints.csv");
  if (!csv) throw ValidationError("cannot write keypoints.csv");
  csv << "t,kp_index,x,y,z,pred_x,pred_y\n";
  const auto& seen = result.keypoints.value();
  const auto& pred = result.pred[policy::kVision].value();
  const auto V = cfg.vision_dims();
  char buf[128];
  for (int t = 1; t < T; ++t) {
    for (int k = 0; k < K; ++k) {
      const float* kp = seen.data() + diff::Index(t) * B * V + k * P;
      const float* pk = pred.data() + diff::Index(t - 1) * B * V + k * P;
      if (P == 3) {
        std::snprintf(buf, sizeof buf, "%d,%d,%.9g,%.9g,%.9g,%.9g,%.9g\n", t * stride, k, kp[0], kp[1], kp[2], pk[0],
                      pk[1]);
      } else {
        std::snprintf(buf, sizeof buf, "%d,%d,%.9g,%.9g,,%.9g,%.9g\n", t * stride, k, kp[0], kp[1], pk[0], pk[1]);
      }
      csv << buf;
    }
  }

  const auto H = seq.frames.dim(2), W = seq.frames.dim(3);
  const auto& img = result.image.value();
  for (int t = 1; t < T; ++t) {
    for (int c = 0; c < 2; ++c) {
      perception::Image<std::uint8_t> frame(H, W);
      const float* src = img.data() + (diff::Index(t - 1) * B * 2 + c) * H * W;
      for (diff::Index i = 0; i < H * W; ++i) {
        frame.data()[i] = static_cast<std::uint8_t>(std::lround(std::clamp(src[i], 0.0f, 1.0f) * 255.0f));
      }
      std::snprintf(buf, sizeof buf, "pred_%04d_c%d.pgm", t * stride, c);
      perception::write_pgm8((out / "frames" / buf).string(), frame);
    }
  }
  std::printf("exported %d predicted steps of episode %s to %s\n", T - 1, ep->id.c_str(), out.string().c_str());
  return kOk;
}

int cmd_ablate(const RunConfig& rc, const std::vector<std::string>& variants) {
  const auto episodes = trainer::load_dataset(rc.data);
  const fs::path out = rc.out;
  write_config(rc, out);
  const auto specs = policy::rollout_specs(rc.angles, rc.sizes, rc.episodes, rc.seed);
  json table = json::array();
  for (const auto& name : variants) {
    trainer::TrainConfig tc;
    tc.epochs = rc.epochs;
    tc.lr = rc.lr;
    tc.seed = rc.seed;
    tc.batch_episodes = rc.batch_episodes;
    tc.loss_log = out / (name + "_loss.csv");
    std::printf("training %s\n", name.c_str());
    std::fflush(stdout);
    const auto trained = trainer::train(episodes, trainer::build_variant(name), tc);
    policy::save_checkpoint(trained.params, out / (name + ".ckpt"));
    const auto rollouts = policy::evaluate(trained.params, specs, rc.ticks);
    auto report = policy::report_json(rollouts);
    write_text(out / (name + "_report.json"), report.dump(2) + "\n");
    table.push_back({{"variant", name}, {"successes", report["successes"]}, {"episodes", rollouts.size()}});
  }
  std::printf("\n%-12s %s\n", "variant", "success");
  for (const auto& row : table) {
    std::printf("%-12s %d/%d\n", row["variant"].get<std::string>().c_str(), row["successes"].get<int>(),
                row["episodes"].get<int>());
  }
  write_text(out / "ablation.json", table.dump(2) + "\n");
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"sockweave: multimodal imitation policy for sock dressing"};
  app.require_subcommand(1);
  RunConfig rc;

  auto* gen = app.add_subcommand("gen", "generate expert demonstrations");
  rc.episodes = 12;
  gen->add_option("--episodes", rc.episodes, "episode count")->capture_default_str();
  gen->add_option("--angles", rc.angles, "foot angles in degrees")->delimiter(',');
  gen->add_option("--sizes", rc.sizes, "foot lengths in scene units")->delimiter(',');
  gen->add_option("--seed", rc.seed)->capture_default_str();
  gen->add_option("--out", rc.out, "dataset directory")->required();

  auto* train = app.add_subcommand("train", "train a policy on a dataset");
  bool resume = false;
  train->add_option("--data", rc.data)->required();
  train->add_option("--epochs", rc.epochs)->capture_default_str()->check(CLI::NonNegativeNumber);
  train->add_option("--variant", rc.variant, "full, no_dam, no_sknet, no_hier or no_sam_dam")->capture_default_str();
  train->add_option("--seed", rc.seed)->capture_default_str();
  train->add_option("--lr", rc.lr)->capture_default_str();
  train->add_option("--batch-episodes", rc.batch_episodes, "episodes per update, 0 = full batch")->capture_default_str();
  train->add_option("--out", rc.out)->required();
  train->add_flag("--resume", resume, "not supported");

  auto* eval = app.add_subcommand("eval", "closed-loop rollouts of a checkpoint");
  bool force = false;
  int eval_episodes = 20;
  eval->add_option("--ckpt", rc.ckpt)->required();
  eval->add_option("--episodes", eval_episodes)->capture_default_str();
  eval->add_option("--angle", rc.angles, "foot angles, cycled")->delimiter(',');
  eval->add_option("--size", rc.sizes, "foot lengths, cycled")->delimiter(',');
  eval->add_option("--seed", rc.seed)->capture_default_str();
  eval->add_option("--ticks", rc.ticks)->capture_default_str();
  auto* eval_variant = eval->add_option("--variant", rc.variant, "refuse checkpoints of another configuration");
  eval->add_flag("--force", force, "load despite a configuration mismatch");
  eval->add_option("--report", rc.report, "report JSON path");

  auto* grad = app.add_subcommand("gradcheck", "finite-difference gradient gate");
  std::string scale = "toy";
  double corrupt = 1.0;
  grad->add_option("--scale", scale)->capture_default_str();
  grad->add_option("--corrupt-grad", corrupt, "test hook: scale one analytic gradient entry")->group("");

  auto* exp = app.add_subcommand("export", "keypoint trace and predicted frames of one episode");
  std::string episode = "0";
  exp->add_option("--ckpt", rc.ckpt)->required();
  exp->add_option("--data", rc.data)->required();
  exp->add_option("--episode", episode, "episode id or index")->capture_default_str();
  exp->add_option("--out", rc.out)->required();

  auto* ablate = app.add_subcommand("ablate", "train and evaluate several variants on one protocol");
  std::vector<std::string> variants{"full", "no_hier", "no_sam_dam"};
  int ablate_episodes = 20;
  ablate->add_option("--data", rc.data)->required();
  ablate->add_option("--variants", variants)->delimiter(',')->capture_default_str();
  ablate->add_option("--epochs", rc.epochs)->capture_default_str();
  ablate->add_option("--seed", rc.seed)->capture_default_str();
  ablate->add_option("--lr", rc.lr)->capture_default_str();
  ablate->add_option("--batch-episodes", rc.batch_episodes)->capture_default_str();
  ablate->add_option("--episodes", ablate_episodes)->capture_default_str();
  ablate->add_option("--angles", rc.angles)->delimiter(',');
  ablate->add_option("--sizes", rc.sizes)->delimiter(',');
  ablate->add_option("--ticks", rc.ticks)->capture_default_str();
  ablate->add_option("--out", rc.out)->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kValidation;
  }

  auto defaults = [&](std::vector<double> angles, std::vector<double> sizes) {
    if (rc.angles.empty()) rc.angles = std::move(angles);
    if (rc.sizes.empty()) rc.sizes = std::move(sizes);
  };
  const std::vector<double> seen{30.0, 40.0, 50.0}, sizes{2.3, 2.4, 2.5, 2.6};

  try {
    if (gen->parsed()) {
      rc.command = "gen";
      defaults(seen, sizes);
      return cmd_gen(rc);
    }
    if (train->parsed()) {
      rc.command = "train";
      if (resume) throw ValidationError("--resume is not supported; start a fresh run");
      trainer::build_variant(rc.variant);
      return cmd_train(rc);
    }
    if (eval->parsed()) {
      rc.command = "eval";
      rc.episodes = eval_episodes;
      defaults({40.0}, sizes);
      return cmd_eval(rc, eval_variant->count() > 0, force);
    }
    if (grad->parsed()) return cmd_gradcheck(scale, corrupt);
    if (exp->parsed()) {
      rc.command = "export";
      return cmd_export(rc, episode);
    }
    if (ablate->parsed()) {
      rc.command = "ablate";
      rc.episodes = ablate_episodes;
      rc.variant.clear();
      defaults(seen, sizes);
      for (const auto& v : variants) trainer::build_variant(v);
      return cmd_ablate(rc, variants);
    }
  } catch (const trainer::NumericalAbort& e) {
    std::cerr << "numerical abort: " << e.what() << '\n';
    return kNumerical;
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kValidation;
  } catch (const trainer::DatasetError& e) {
    std::cerr << "dataset error: " << e.what() << '\n';
    return kValidation;
  } catch (const policy::CheckpointError& e) {
    std::cerr << "checkpoint error: " << e.what() << '\n';
    return kValidation;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kValidation;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kFailure;
  }
  return kFailure;
}
