#include "sockweave/trainer/dataset.hpp"
#include "sockweave/trainer/loss.hpp"
#include "sockweave/trainer/train.hpp"

#include <doctest.h>

#include <filesystem>
#include <fstream>

using namespace sockweave;
using namespace sockweave::trainer;
using Tf = diff::Tensor<float>;

namespace fs = std::filesystem;

namespace {

LossInputs<float> zeros_like_inputs() {
  return {Tf::zeros({2, 2, 4, 4}), Tf::zeros({2, 14}), Tf::zeros({2, 14}), Tf::zeros({2, 2}), Tf::zeros({2, 6, 2})};
}

// Two short expert episodes, cut to `steps` ticks.
std::vector<EpisodeRecord> short_episodes(int steps) {
  static const auto full = [] {
    GenSpec spec;
    spec.episodes = 2;
    spec.seed = 3;
    return generate_dataset(spec);
  }();
  auto out = full;
  for (auto& ep : out) {
    auto cut = [steps](auto& v) { v.resize(steps); };
    cut(ep.sock_mask); cut(ep.foot_mask); cut(ep.depth); cut(ep.gray);
    cut(ep.angles); cut(ep.torques); cut(ep.tactile);
  }
  return out;
}

fs::path temp_dir(const std::string& name) {
  auto p = fs::temp_directory_path() / ("sockweave_test_" + name);
  fs::remove_all(p);
  return p;
}

std::string slurp(const fs::path& f) {
  std::ifstream in(f, std::ios::binary);
  return std::string(std::istreambuf_iterator<char>(in), {});
}

}  // namespace

TEST_CASE("equal predictions and targets give zero loss") {
  diff::Rng rng(1);
  auto a = zeros_like_inputs();
  for (auto* t : {&a.image, &a.angles, &a.torques, &a.tactile, &a.points}) {
    *t = diff::random_tensor<float>(t->shape(), rng);
  }
  const auto l = values(compute_loss(a, a, {}));
  CHECK(l.total == 0.0);
  CHECK(l.img == 0.0);
}

TEST_CASE("unit single-component losses scale by their weight") {
  const LossWeights w;
  const std::array<double, 5> expected{w.img, w.angle, w.torque, w.tactile, w.pt};
  CHECK(expected == std::array<double, 5>{0.1, 1.5, 1.0, 0.2, 0.1});
  for (int k = 0; k < 5; ++k) {
    auto pred = zeros_like_inputs();
    const auto target = zeros_like_inputs();
    auto* t = std::array{&pred.image, &pred.angles, &pred.torques, &pred.tactile, &pred.points}[k];
    *t = Tf::full(t->shape(), 1.0f);
    const auto l = values(compute_loss(pred, target, w));
    CHECK(l.total == doctest::Approx(expected[k]).epsilon(1e-7));
  }
}

TEST_CASE("zero image weight leaves decoder gradients at zero") {
  auto cfg = policy::ModelConfig::toy();
  cfg.weights.img = 0.0;
  auto p = policy::ModelParams<float>::init(cfg, 2);
  diff::Rng rng(5);
  policy::SequenceBatch<float> seq;
  seq.steps = 3;
  seq.batch = 2;
  seq.frames = diff::random_tensor<float>({6, 2, 8, 8}, rng, 0, 1);
  seq.depth = diff::random_tensor<float>({6, 1, 8, 8}, rng, 0, 1);
  seq.angles = diff::random_tensor<float>({6, 14}, rng, 0, 1);
  seq.torques = diff::random_tensor<float>({6, 14}, rng, 0, 1);
  seq.tactile = diff::random_tensor<float>({6, 2}, rng, 0, 1);
  auto terms = sequence_loss(seq, p);
  CHECK(terms.img.item() > 0);
  diff::backward(terms.total);
  int checked = 0;
  for (auto& [name, t] : p.named_parameters()) {
    if (name.rfind("decoder.", 0) != 0) continue;
    ++checked;
    CHECK((!t.has_grad() || (t.grad().array() == 0.0f).all()));
  }
  CHECK(checked == 4);
  CHECK(p.encoder.w1.has_grad());
  CHECK(p.encoder.w1.grad().cwiseAbs().maxCoeff() > 0);
  diff::release_graph(terms.total);
}

TEST_CASE("dataset round trip and guards") {
  const auto eps = short_episodes(6);
  const auto dir = temp_dir("dataset");
  save_dataset(eps, dir);
  const auto back = load_dataset(dir);
  REQUIRE(back.size() == eps.size());
  for (std::size_t i = 0; i < eps.size(); ++i) {
    CHECK(back[i].id == eps[i].id);
    CHECK(back[i].seed == eps[i].seed);
    REQUIRE(back[i].steps() == 6);
    for (int t = 0; t < 6; ++t) {
      CHECK(back[i].angles[t] == eps[i].angles[t]);
      CHECK(back[i].tactile[t] == eps[i].tactile[t]);
      CHECK((back[i].sock_mask[t] == eps[i].sock_mask[t]).all());
      CHECK((back[i].gray[t] == eps[i].gray[t]).all());
      CHECK(((back[i].depth[t] - eps[i].depth[t]).abs() <= 1.0f / 65535.0f).all());
    }
  }

  // a short CSV is named in the error
  {
    const auto csv = dir / eps[0].id / "angles.csv";
    auto text = slurp(csv);
    text.erase(text.rfind('\n', text.size() - 2) + 1);
    std::ofstream(csv) << text;
    try {
      load_dataset(dir);
      FAIL("expected a dataset error");
    } catch (const DatasetError& e) {
      CHECK(std::string(e.what()).find("angles.csv has 5 rows") != std::string::npos);
    }
  }
  {
    auto manifest = slurp(dir / "manifest.json");
    const auto at = manifest.find("\"version\": 1");
    REQUIRE(at != std::string::npos);
    manifest.replace(at, 12, "\"version\": 9");
    std::ofstream(dir / "manifest.json") << manifest;
    CHECK_THROWS_WITH_AS(load_dataset(dir), doctest::Contains("unsupported version 9"), DatasetError);
  }
  CHECK_THROWS_AS(load_dataset(temp_dir("nothing_here")), DatasetError);
  fs::remove_all(dir);
}

TEST_CASE("dataset generation is deterministic") {
  GenSpec spec;
  spec.episodes = 1;
  spec.seed = 9;
  const auto a = generate_dataset(spec);
  const auto b = generate_dataset(spec);
  REQUIRE(a.size() == 1);
  CHECK(a[0].seed == b[0].seed);
  CHECK(a[0].angles == b[0].angles);
  CHECK(a[0].torques == b[0].torques);
  CHECK((a[0].depth.back() == b[0].depth.back()).all());
}

TEST_CASE("strided batches interleave phases") {
  const auto eps = short_episodes(7);
  auto cfg = policy::ModelConfig::for_variant(policy::Variant::full);
  cfg.control_stride = 3;
  const auto stats = compute_stats(eps);
  const EpisodeRecord* one[] = {&eps[0]};
  const auto seq = make_batch(one, cfg, stats);
  CHECK(seq.steps == 2);
  CHECK(seq.batch == 3);
  // row (t, phase) holds tick 3 t + phase
  for (int t = 0; t < 2; ++t) {
    for (int ph = 0; ph < 3; ++ph) {
      const Eigen::VectorXf want = policy::normalize(eps[0].angles[3 * t + ph], stats.angles).cast<float>();
      const auto row = (t * 3 + ph) * 14;
      CHECK(seq.angles.value().segment(row, 14) == want);
    }
  }
  cfg.control_stride = 8;
  CHECK_THROWS_AS(make_batch(one, cfg, stats), DatasetError);
}

TEST_CASE("short training reduces the loss and is deterministic") {
  const auto eps = short_episodes(12);
  const auto cfg = build_variant("full");
  TrainConfig tc;
  tc.epochs = 8;
  tc.lr = 3e-3;
  tc.batch_episodes = 1;
  const auto a = train(eps, cfg, tc);
  const auto b = train(eps, cfg, tc);
  REQUIRE(a.curve.size() == 8);
  CHECK(a.curve.back().total < a.curve.front().total);
  auto pa = const_cast<policy::ModelParams<float>&>(a.params).parameters();
  auto pb = const_cast<policy::ModelParams<float>&>(b.params).parameters();
  for (std::size_t i = 0; i < pa.size(); ++i) CHECK((pa[i].value().array() == pb[i].value().array()).all());
  for (std::size_t e = 0; e < a.curve.size(); ++e) CHECK(a.curve[e].total == b.curve[e].total);
}

TEST_CASE("every variant trains for a couple of epochs") {
  const auto eps = short_episodes(10);
  for (const char* v : {"full", "no_dam", "no_sknet", "no_hier", "no_sam_dam"}) {
    CAPTURE(v);
    TrainConfig tc;
    tc.epochs = 2;
    const auto r = train(eps, build_variant(v), tc);
    CHECK(r.curve.size() == 2);
    CHECK(std::isfinite(r.curve.back().total));
  }
}

TEST_CASE("training rejects an empty dataset and writes the loss log") {
  CHECK_THROWS(train({}, build_variant("full"), {}));
  const auto eps = short_episodes(10);
  const auto dir = temp_dir("losslog");
  fs::create_directories(dir);
  TrainConfig tc;
  tc.epochs = 2;
  tc.loss_log = dir / "loss.csv";
  train(eps, build_variant("no_hier"), tc);
  const auto text = slurp(dir / "loss.csv");
  CHECK(text.rfind("epoch,L_img,L_angle,L_torque,L_tactile,L_pt,L_train\n0,", 0) == 0);
  CHECK(std::count(text.begin(), text.end(), '\n') == 3);
  fs::remove_all(dir);
}
