// End-to-end acceptance suite. Prints one PASS/FAIL line per criterion and a
// summary. Exit status is 0 when the harness itself ran to completion; pass
// --strict to also fail on any unmet criterion.

#include "sockweave/attention/attention.hpp"
#include "sockweave/perception/perception.hpp"
#include "sockweave/policy/model.hpp"
#include "sockweave/trainer/loss.hpp"

#include <json.hpp>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <sys/wait.h>
#include <vector>

namespace fs = std::filesystem;
using namespace sockweave;
using json = nlohmann::json;
using Clock = std::chrono::steady_clock;
using diff::Index;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

// Protocol shared by the end-to-end, ablation and tactile criteria.
constexpr int kTrainEpisodes = 12;
constexpr int kEpochs = 60;
constexpr int kEvalEpisodes = 20;
constexpr const char* kSeenAngles = "30,40,50";
constexpr const char* kSizes = "2.3,2.4,2.5,2.6";

fs::path work_root() {
  const char* env = std::getenv("SOCKWEAVE_ACCEPTANCE_DIR");
  return env ? fs::path(env) : fs::path(SOCKWEAVE_WORK_DIR);
}

int cli(const std::string& args, const fs::path& log) {
  const std::string cmd = std::string(SOCKWEAVE_CLI) + " " + args + " > " + log.string() + " 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& f) {
  std::ifstream in(f, std::ios::binary);
  return std::string(std::istreambuf_iterator<char>(in), {});
}

json load_json(const fs::path& f) { return json::parse(slurp(f)); }

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

// Every regular file under `a` exists under `b` with identical bytes, and
// vice versa.
bool same_tree(const fs::path& a, const fs::path& b, std::string& why) {
  std::map<std::string, std::string> fa, fb;
  for (const auto& e : fs::recursive_directory_iterator(a)) {
    if (e.is_regular_file()) fa[fs::relative(e.path(), a).string()] = slurp(e.path());
  }
  for (const auto& e : fs::recursive_directory_iterator(b)) {
    if (e.is_regular_file()) fb[fs::relative(e.path(), b).string()] = slurp(e.path());
  }
  // run configs name their own output paths
  fa.erase("config.json");
  fb.erase("config.json");
  if (fa.size() != fb.size()) {
    why = fmt("%zu vs %zu files", fa.size(), fb.size());
    return false;
  }
  for (const auto& [name, bytes] : fa) {
    auto it = fb.find(name);
    if (it == fb.end() || it->second != bytes) {
      why = name + " differs";
      return false;
    }
  }
  why = fmt("%zu files identical", fa.size());
  return true;
}

// ---------------------------------------------------------------------------

Outcome gradient_gate(const fs::path& dir) {
  const auto t0 = Clock::now();
  const int code = cli("gradcheck --scale toy", dir / "gradcheck.log");
  const double secs = seconds_since(t0);
  std::cout << slurp(dir / "gradcheck.log");
  return {code == 0 && secs < 60.0, fmt("exit %d, %.1f s (limit 60 s)", code, secs)};
}

Outcome masked_depth_oracle() {
  diff::Rng rng(2024);
  int mismatches = 0, nan_errors = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const int h = 1 + static_cast<int>(rng.uniform() * 64), w = 1 + static_cast<int>(rng.uniform() * 64);
    perception::DepthMap d(h, w);
    perception::MaskImage m(h, w);
    for (Eigen::Index i = 0; i < d.size(); ++i) {
      d.data()[i] = static_cast<float>(rng.uniform());
      m.data()[i] = rng.uniform() < 0.5 ? 0 : 255;
    }
    const auto zero = perception::masked_depth(d, m);
    const auto nan = perception::masked_depth(d, m, perception::FillMode::nan);
    for (int r = 0; r < h; ++r) {
      for (int c = 0; c < w; ++c) {
        const float expect = m(r, c) == 255 ? d(r, c) : 0.0f;
        if (zero.values(r, c) != expect) ++mismatches;
        const bool is_nan = std::isnan(nan.values(r, c));
        if (is_nan != (m(r, c) == 0) || (!is_nan && nan.values(r, c) != d(r, c))) ++nan_errors;
      }
    }
  }
  return {mismatches == 0 && nan_errors == 0,
          fmt("1000 pairs, %d zero-fill mismatches, %d NaN-placement errors", mismatches, nan_errors)};
}

Outcome attention_invariants() {
  using Td = diff::Tensor<double>;
  diff::Rng rng(77);
  double worst_sum = 0, worst_centroid = 0, worst_depth = 0, worst_shift = 0;
  for (int trial = 0; trial < 20; ++trial) {
    auto f = diff::random_tensor<double>({2, 6, 16, 16}, rng, -8, 8);
    auto a = attention::spatial_softmax(f);
    for (Index k = 0; k < 12; ++k) {
      double s = 0;
      for (Index i = 0; i < 256; ++i) s += a[k * 256 + i];
      worst_sum = std::max(worst_sum, std::abs(s - 1.0));
    }
    const double d0 = rng.uniform();
    auto kp = attention::expect_keypoints(a, Td::full({2, 1, 16, 16}, d0));
    for (Index k = 0; k < 12; ++k) worst_depth = std::max(worst_depth, std::abs(kp[3 * k + 2] - d0));

    auto u = attention::expect_keypoints(attention::spatial_softmax(Td::full({1, 1, 16, 16}, rng.uniform(-5, 5))));
    worst_centroid = std::max({worst_centroid, std::abs(u[0]), std::abs(u[1])});

    // Circular one-column shift of a peaked map.
    auto base = diff::random_tensor<double>({1, 1, 16, 16}, rng, -0.5, 0.5);
    const Index i0 = 2 + trial % 12, j0 = 1 + (trial * 5) % 13;
    base.mutable_value()[i0 * 16 + j0] = 40.0;
    auto shifted = Td::zeros({1, 1, 16, 16});
    for (Index i = 0; i < 16; ++i) {
      for (Index j = 0; j < 16; ++j) shifted.mutable_value()[i * 16 + (j + 1) % 16] = base[i * 16 + j];
    }
    auto k0 = attention::expect_keypoints(attention::spatial_softmax(base));
    auto k1 = attention::expect_keypoints(attention::spatial_softmax(shifted));
    worst_shift = std::max({worst_shift, std::abs(k1[0] - k0[0] - 2.0 / 15.0), std::abs(k1[1] - k0[1])});
  }
  const bool ok = worst_sum <= 1e-6 && worst_centroid <= 1e-6 && worst_depth <= 1e-6 && worst_shift <= 1e-6;
  return {ok, fmt("max |sum-1| %.1e, centroid %.1e, depth %.1e, shift %.1e (limit 1e-6)", worst_sum, worst_centroid,
                  worst_depth, worst_shift)};
}

// Independent per-scalar LSTM for the oracle.
struct ScalarCell {
  std::vector<double> h, c;
};

ScalarCell scalar_lstm(const std::vector<double>& x, const std::vector<double>& h, const std::vector<double>& c,
                       const policy::LstmParams<double>& p) {
  const std::size_t d = h.size(), cols = 4 * d;
  std::vector<double> xh = x;
  xh.insert(xh.end(), h.begin(), h.end());
  auto sig = [](double v) { return 1.0 / (1.0 + std::exp(-v)); };
  ScalarCell out{std::vector<double>(d), std::vector<double>(d)};
  for (std::size_t k = 0; k < d; ++k) {
    double z[4];
    for (std::size_t g = 0; g < 4; ++g) {
      z[g] = p.b[g * d + k];
      for (std::size_t r = 0; r < xh.size(); ++r) z[g] += xh[r] * p.w[r * cols + g * d + k];
    }
    out.c[k] = sig(z[1]) * c[k] + sig(z[0]) * std::tanh(z[2]);
    out.h[k] = sig(z[3]) * std::tanh(out.c[k]);
  }
  return out;
}

std::vector<double> vec(const diff::Tensor<double>& t) { return {t.value().data(), t.value().data() + t.size()}; }

Outcome hierarchical_oracle() {
  auto cfg = policy::ModelConfig::toy();
  cfg.hidden = 2;
  cfg.union_hidden = 2;
  double worst = 0;
  bool bitwise = true;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    auto p = policy::ModelParams<double>::init(cfg, seed);
    diff::Rng rng(seed + 100);
    const auto dims = p.input_dims();
    auto st = policy::RecurrentState<double>::zeros(cfg, 1);
    for (int step = 0; step < 5; ++step) {
      policy::ModalityInput<double> in;
      for (int m = 0; m < policy::kModalities; ++m) in.x[m] = diff::random_tensor<double>({1, dims[m]}, rng, 0, 1);
      std::vector<double> prev;
      for (const auto& b : st.bottom) {
        const auto v = vec(b.h);
        prev.insert(prev.end(), v.begin(), v.end());
      }
      const auto u = scalar_lstm(prev, vec(st.unite.h), vec(st.unite.c), p.unite);
      std::vector<double> v(8);
      for (int j = 0; j < 8; ++j) {
        v[j] = p.feedback.b[j];
        for (int r = 0; r < 2; ++r) v[j] += u.h[r] * p.feedback.w[r * 8 + j];
      }
      auto [next, out] = policy::recurrent_step(in, in, st, p);
      for (int m = 0; m < policy::kModalities; ++m) {
        const auto b = scalar_lstm(vec(in.x[m]), {v[2 * m], v[2 * m + 1]}, vec(st.bottom[m].c), p.bottom[m]);
        for (int k = 0; k < 2; ++k) {
          worst = std::max({worst, std::abs(next.bottom[m].h[k] - b.h[k]), std::abs(next.bottom[m].c[k] - b.c[k])});
        }
      }
      for (int k = 0; k < 2; ++k) worst = std::max(worst, std::abs(next.unite.h[k] - u.h[k]));
      auto back = diff::concat(out.feedback_parts, 1);
      bitwise = bitwise && back.shape() == out.feedback.shape() &&
                std::memcmp(back.value().data(), out.feedback.value().data(), sizeof(double) * back.size()) == 0;
      st = next;
    }
  }
  {
    // full-width feedback in 32-bit
    auto p = policy::ModelParams<float>::init(policy::ModelConfig{}, 3);
    diff::Rng rng(5);
    auto h = diff::random_tensor<float>({4, 64}, rng);
    auto v = diff::linear(h, p.feedback.w, p.feedback.b);
    auto parts = diff::split(v, 1, {32, 32, 32, 32});
    auto back = diff::concat(parts, 1);
    bitwise = bitwise && std::memcmp(back.value().data(), v.value().data(), sizeof(float) * v.size()) == 0;
  }
  return {worst <= 1e-6 && bitwise,
          fmt("max deviation %.1e over 10 seeds x 5 steps (limit 1e-6); split/concat %s", worst,
              bitwise ? "bitwise exact" : "NOT bitwise exact")};
}

Outcome loss_weights() {
  using Tf = diff::Tensor<float>;
  auto zeros = [] {
    return trainer::LossInputs<float>{Tf::zeros({2, 2, 4, 4}), Tf::zeros({2, 14}), Tf::zeros({2, 14}),
                                      Tf::zeros({2, 2}), Tf::zeros({2, 6, 2})};
  };
  const policy::LossWeights w;
  bool ok = true;
  std::string detail;
  {
    diff::Rng rng(1);
    auto a = zeros();
    for (auto* t : {&a.image, &a.angles, &a.torques, &a.tactile, &a.points}) *t = diff::random_tensor<float>(t->shape(), rng);
    const auto l = trainer::values(trainer::compute_loss(a, a, w));
    ok = ok && l.total == 0.0;
    detail += fmt("equal -> %.1g; ", l.total);
  }
  const char* names[] = {"img", "angle", "torque", "tactile", "pt"};
  const double expect[] = {0.1, 1.5, 1.0, 0.2, 0.1};
  for (int k = 0; k < 5; ++k) {
    auto pred = zeros();
    auto* t = std::array{&pred.image, &pred.angles, &pred.torques, &pred.tactile, &pred.points}[k];
    *t = Tf::full(t->shape(), 1.0f);
    const double total = trainer::values(trainer::compute_loss(pred, zeros(), w)).total;
    ok = ok && std::abs(total - expect[k]) <= 1e-7;
    detail += fmt("%s %.6g; ", names[k], total);
  }
  {
    auto cfg = policy::ModelConfig::toy();
    cfg.weights.img = 0.0;
    auto p = policy::ModelParams<float>::init(cfg, 4);
    diff::Rng rng(6);
    policy::SequenceBatch<float> seq;
    seq.steps = 3;
    seq.batch = 2;
    seq.frames = diff::random_tensor<float>({6, 2, 8, 8}, rng, 0, 1);
    seq.depth = diff::random_tensor<float>({6, 1, 8, 8}, rng, 0, 1);
    seq.angles = diff::random_tensor<float>({6, 14}, rng, 0, 1);
    seq.torques = diff::random_tensor<float>({6, 14}, rng, 0, 1);
    seq.tactile = diff::random_tensor<float>({6, 2}, rng, 0, 1);
    auto terms = trainer::sequence_loss(seq, p);
    diff::backward(terms.total);
    double worst = 0;
    for (auto& [name, t] : p.named_parameters()) {
      if (name.rfind("decoder.", 0) == 0 && t.has_grad()) worst = std::max(worst, double(t.grad().cwiseAbs().maxCoeff()));
    }
    diff::release_graph(terms.total);
    ok = ok && worst == 0.0;
    detail += fmt("alpha=0 max |decoder grad| %g", worst);
  }
  return {ok, detail};
}

struct Protocol {
  fs::path data, train_dir, seen_report, unseen_report, ablate_dir;
  int gen_code = -1, train_code = -1, seen_code = -1, unseen_code = -1, ablate_code = -1;
  double gen_s = 0, train_s = 0, eval_s = 0, ablate_s = 0;
};

Protocol run_protocol(const fs::path& dir) {
  Protocol p;
  p.data = dir / "data";
  p.train_dir = dir / "full";
  p.seen_report = dir / "eval_seen" / "report.json";
  p.unseen_report = dir / "eval_45" / "report.json";
  p.ablate_dir = dir / "ablate";
  auto t0 = Clock::now();
  p.gen_code = cli(fmt("gen --episodes %d --angles %s --sizes %s --seed 0 --out %s", kTrainEpisodes, kSeenAngles, kSizes,
                       p.data.c_str()),
                   dir / "gen.log");
  p.gen_s = seconds_since(t0);
  t0 = Clock::now();
  p.train_code = cli(fmt("train --data %s --variant full --epochs %d --seed 0 --out %s", p.data.c_str(), kEpochs,
                         p.train_dir.c_str()),
                     dir / "train.log");
  p.train_s = seconds_since(t0);
  t0 = Clock::now();
  const auto ckpt = p.train_dir / "model.ckpt";
  p.seen_code = cli(fmt("eval --ckpt %s --episodes %d --angle %s --size %s --seed 0 --report %s", ckpt.c_str(),
                        kEvalEpisodes, kSeenAngles, kSizes, p.seen_report.c_str()),
                    dir / "eval_seen.log");
  p.unseen_code = cli(fmt("eval --ckpt %s --episodes %d --angle 45 --size %s --seed 2 --report %s", ckpt.c_str(),
                          kEvalEpisodes, kSizes, p.unseen_report.c_str()),
                      dir / "eval_45.log");
  p.eval_s = seconds_since(t0);
  t0 = Clock::now();
  p.ablate_code = cli(fmt("ablate --data %s --variants full,no_hier,no_sam_dam --epochs %d --seed 0 --episodes %d "
                          "--angles %s --sizes %s --out %s",
                          p.data.c_str(), kEpochs, kEvalEpisodes, kSeenAngles, kSizes, p.ablate_dir.c_str()),
                      dir / "ablate.log");
  p.ablate_s = seconds_since(t0);
  return p;
}

// First and last L_train of a loss log.
std::pair<double, double> loss_span(const fs::path& csv) {
  std::ifstream in(csv);
  std::string line;
  std::getline(in, line);
  double first = NAN, last = NAN;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const double v = std::stod(line.substr(line.rfind(',') + 1));
    if (std::isnan(first)) first = v;
    last = v;
  }
  return {first, last};
}

Outcome end_to_end(const Protocol& p) {
  if (p.gen_code || p.train_code || p.seen_code || p.unseen_code) {
    return {false, fmt("command failed: gen %d, train %d, eval %d/%d", p.gen_code, p.train_code, p.seen_code,
                       p.unseen_code)};
  }
  const int seen = load_json(p.seen_report)["successes"];
  const int unseen = load_json(p.unseen_report)["successes"];
  const auto [first, last] = loss_span(p.train_dir / "loss.csv");
  const double drop = 1.0 - last / first;
  const double minutes = (p.gen_s + p.train_s + p.eval_s) / 60.0;
  const bool ok = seen >= 16 && unseen >= 12 && drop >= 0.9 && minutes <= 60.0;
  return {ok, fmt("seen %d/%d (need 16), 45 deg %d/%d (need 12), loss %.4g -> %.4g (%.1f%% drop, need 90%%), "
                  "%d epochs, %.1f min (gen %.0f s, train %.0f s, eval %.0f s)",
                  seen, kEvalEpisodes, unseen, kEvalEpisodes, first, last, 100 * drop, kEpochs, minutes, p.gen_s,
                  p.train_s, p.eval_s)};
}

Outcome ablation(const Protocol& p) {
  if (p.ablate_code) return {false, fmt("ablate exited %d", p.ablate_code)};
  const auto table = load_json(p.ablate_dir / "ablation.json");
  std::map<std::string, int> succ;
  std::cout << fmt("  %-12s %s\n", "variant", "success");
  for (const auto& row : table) {
    succ[row["variant"]] = row["successes"];
    std::cout << fmt("  %-12s %d/%d\n", row["variant"].get<std::string>().c_str(), row["successes"].get<int>(),
                     row["episodes"].get<int>());
  }
  const bool ok = succ["no_hier"] < succ["full"] && succ["no_sam_dam"] < succ["full"];
  return {ok, fmt("full %d, no_hier %d, no_sam_dam %d (need both strictly below full); %.0f s", succ["full"],
                  succ["no_hier"], succ["no_sam_dam"], p.ablate_s)};
}

Outcome tactile_order(const Protocol& p) {
  if (p.seen_code || p.unseen_code) return {false, "evaluation did not run"};
  int successes = 0, ordered = 0;
  std::map<double, std::array<double, 3>> peak_sum;
  std::map<double, int> count;
  for (const auto& path : {p.seen_report, p.unseen_report}) {
    const auto report = load_json(path);
    for (const auto& r : report["rollouts"]) {
      if (!r["success"].get<bool>()) continue;
      ++successes;
      const auto peaks = r["phase_peaks_N"].get<std::array<double, 3>>();
      ordered += peaks[0] <= peaks[2];
      const double size = std::round(r["foot_size"].get<double>() * 10) / 10;
      for (int k = 0; k < 3; ++k) peak_sum[size][k] += peaks[k];
      ++count[size];
    }
  }
  std::cout << fmt("  %-6s %-4s %10s %10s %10s   (mean peak tactile, N, successful rollouts)\n", "size", "n", "toe",
                   "toe-heel", "heel-ankle");
  for (double size : {2.3, 2.4, 2.5, 2.6}) {
    const int n = count[size];
    const auto& s = peak_sum[size];
    if (n == 0) {
      std::cout << fmt("  %-6.1f %-4d %10s %10s %10s\n", size, 0, "-", "-", "-");
    } else {
      std::cout << fmt("  %-6.1f %-4d %10.2f %10.2f %10.2f\n", size, n, s[0] / n, s[1] / n, s[2] / n);
    }
  }
  const double frac = successes ? double(ordered) / successes : 0.0;
  return {successes > 0 && frac >= 0.8,
          fmt("toe <= heel-ankle in %d of %d successful rollouts (%.0f%%, need 80%%)", ordered, successes, 100 * frac)};
}

Outcome determinism(const fs::path& dir, const Protocol& p) {
  std::string why;
  std::vector<std::string> notes;
  bool ok = true;
  auto check = [&](bool cond, const std::string& what) {
    ok = ok && cond;
    notes.push_back(what + (cond ? " ok" : " DIFFER") + (why.empty() ? "" : " (" + why + ")"));
    why.clear();
  };
  // Every command twice with one seed.
  const fs::path a = dir / "det_a", b = dir / "det_b";
  for (const auto& run : {a, b}) {
    fs::create_directories(run);
    cli(fmt("gen --episodes 2 --angles 30,50 --sizes 2.4 --seed 5 --out %s", (run / "data").c_str()), run / "gen.log");
    cli(fmt("train --data %s --epochs 3 --seed 5 --out %s", (run / "data").c_str(), (run / "train").c_str()),
        run / "train.log");
    cli(fmt("eval --ckpt %s --episodes 3 --angle 35 --seed 5 --ticks 120 --report %s",
            (run / "train" / "model.ckpt").c_str(), (run / "eval" / "report.json").c_str()),
        run / "eval.log");
    cli(fmt("export --ckpt %s --data %s --episode 1 --out %s", (run / "train" / "model.ckpt").c_str(),
            (run / "data").c_str(), (run / "export").c_str()),
        run / "export.log");
    cli(fmt("ablate --data %s --variants no_sknet,no_dam --epochs 2 --seed 5 --episodes 2 --ticks 60 --out %s",
            (run / "data").c_str(), (run / "ablate").c_str()),
        run / "ablate.log");
  }
  for (const char* sub : {"data", "train", "eval", "export", "ablate"}) {
    const bool exists = fs::exists(a / sub) && fs::exists(b / sub);
    check(exists && same_tree(a / sub, b / sub, why), sub);
  }
  // The protocol's full model, trained once by `train` and once by `ablate`.
  if (p.train_code == 0 && p.ablate_code == 0) {
    check(slurp(p.train_dir / "model.ckpt") == slurp(p.ablate_dir / "full.ckpt"), "protocol checkpoint");
    check(slurp(p.train_dir / "loss.csv") == slurp(p.ablate_dir / "full_loss.csv"), "protocol loss log");
    const auto seen = load_json(p.seen_report), abl = load_json(p.ablate_dir / "full_report.json");
    check(seen["rollouts"] == abl["rollouts"], "protocol report");
  } else {
    check(false, "protocol runs");
  }
  std::string detail;
  for (const auto& n : notes) detail += (detail.empty() ? "" : "; ") + n;
  return {ok, detail};
}

}  // namespace

int main(int argc, char** argv) {
  const bool strict = argc > 1 && std::string(argv[1]) == "--strict";
  const fs::path dir = work_root();
  fs::remove_all(dir);
  fs::create_directories(dir);
  std::cout << "work directory " << dir.string() << "\n" << std::flush;

  std::vector<std::pair<std::string, Outcome>> results;
  auto record = [&](const std::string& name, const std::function<Outcome()>& f) {
    const auto t0 = Clock::now();
    Outcome o;
    try {
      o = f();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    std::cout << (o.pass ? "[PASS] " : "[FAIL] ") << name << ": " << o.detail << fmt(" [%.1f s]", seconds_since(t0))
              << "\n"
              << std::flush;
    results.emplace_back(name, o);
  };

  record("gradient gate", [&] { return gradient_gate(dir); });
  record("masked depth oracle", masked_depth_oracle);
  record("spatial attention invariants", attention_invariants);
  record("hierarchical LSTM oracle", hierarchical_oracle);
  record("loss weights", loss_weights);

  std::cout << "running the training/evaluation protocol...\n" << std::flush;
  const auto protocol = run_protocol(dir);
  record("end-to-end closed loop", [&] { return end_to_end(protocol); });
  record("ablation directionality", [&] { return ablation(protocol); });
  record("tactile phase ordering", [&] { return tactile_order(protocol); });
  record("determinism", [&] { return determinism(dir, protocol); });

  int passed = 0;
  for (const auto& [name, o] : results) passed += o.pass;
  std::cout << "\n" << passed << "/" << results.size() << " acceptance criteria met\n";
  return strict && passed != static_cast<int>(results.size()) ? 1 : 0;
}
