#include "sockweave/trainer/gradsuite.hpp"

#include "sockweave/diff/conv.hpp"
#include "sockweave/diff/gradcheck.hpp"
#include "sockweave/diff/random.hpp"
#include "sockweave/trainer/loss.hpp"

#include <functional>

namespace sockweave::trainer {

namespace {

using T = diff::Tensor<double>;
using diff::Index;
using diff::Rng;

T param(diff::Shape shape, Rng& rng, double lo = -1.0, double hi = 1.0) {
  return diff::random_tensor<double>(std::move(shape), rng, lo, hi, true);
}

T data(diff::Shape shape, Rng& rng, double lo = -1.0, double hi = 1.0) {
  return diff::random_tensor<double>(std::move(shape), rng, lo, hi, false);
}

// Away from the relu kink so the central difference stays on one side.
T off_kink(diff::Shape shape, Rng& rng) {
  auto t = param(std::move(shape), rng, 0.1, 1.0);
  for (Index i = 0; i < t.size(); ++i) {
    if (i % 2) t.mutable_value()[i] = -t.value()[i];
  }
  return t;
}

struct Case {
  std::string name;
  std::function<T()> loss;
  diff::TensorList<double> params;
  Index max_entries = 0;
};

class Suite {
 public:
  Suite(const GradSuiteOptions& opts) : opts_(opts) {}

  void add(std::string name, diff::TensorList<double> params, std::function<T()> loss, Index max_entries = 0,
           double step = 0.0) {
    Case c{std::move(name), std::move(loss), std::move(params), max_entries};
    diff::GradCheckOptions g;
    g.corrupt_factor = opts_.corrupt_factor;
    g.max_entries_per_param = c.max_entries;
    if (step > 0.0) g.step = step;
    const auto r = diff::finite_diff_check(c.loss, c.params, g);
    results_.push_back({c.name, r.max_relative_error, r.checked, r.checked > 0 && r.max_relative_error < opts_.tolerance});
  }

  std::vector<GradComponent> take() { return std::move(results_); }

 private:
  GradSuiteOptions opts_;
  std::vector<GradComponent> results_;
};

void op_cases(Suite& s, Rng& rng) {
  {
    auto a = param({3, 4}, rng), b = param({4}, rng);
    auto w = data({3, 4}, rng);
    s.add("add", {a, b}, [=] { return diff::sum(diff::mul(diff::add(a, b), w)); });
  }
  {
    auto a = param({3, 4}, rng), b = param({3, 4}, rng);
    auto w = data({3, 4}, rng);
    s.add("mul", {a, b}, [=] { return diff::sum(diff::mul(diff::mul(a, b), w)); });
  }
  {
    auto a = param({2, 5}, rng, -2.0, 2.0);
    auto w = data({2, 5}, rng);
    s.add("tanh", {a}, [=] { return diff::sum(diff::mul(diff::tanh(a), w)); });
    s.add("sigmoid", {a}, [=] { return diff::sum(diff::mul(diff::sigmoid(a), w)); });
  }
  {
    auto a = off_kink({2, 6}, rng);
    auto w = data({2, 6}, rng);
    s.add("relu", {a}, [=] { return diff::sum(diff::mul(diff::relu(a), w)); });
  }
  {
    auto a = param({3, 4}, rng), b = param({4, 5}, rng);
    auto w = data({3, 5}, rng);
    s.add("matmul", {a, b}, [=] { return diff::sum(diff::mul(diff::matmul(a, b), w)); });
  }
  {
    auto a = param({2, 3, 4}, rng), b = param({2, 4, 2}, rng);
    auto w = data({2, 3, 2}, rng);
    s.add("bmm", {a, b}, [=] { return diff::sum(diff::mul(diff::bmm(a, b), w)); });
  }
  {
    auto x = param({3, 4}, rng), wt = param({4, 2}, rng), b = param({2}, rng);
    auto w = data({3, 2}, rng);
    s.add("linear", {x, wt, b}, [=] { return diff::sum(diff::mul(diff::linear(x, wt, b), w)); });
  }
  {
    auto a = param({2, 3, 4}, rng, -2.0, 2.0);
    auto w1 = data({2, 3, 4}, rng), w2 = data({2, 3, 4}, rng);
    s.add("softmax", {a}, [=] {
      return diff::add(diff::sum(diff::mul(diff::softmax(a, 1), w1)), diff::sum(diff::mul(diff::softmax(a, 2), w2)));
    });
  }
  {
    auto a = param({2, 3, 5}, rng);
    auto w = data({2, 3}, rng);
    s.add("global_avg_pool", {a}, [=] { return diff::sum(diff::mul(diff::global_avg_pool(a), w)); });
  }
  {
    auto a = param({2, 3}, rng), b = param({2, 2}, rng);
    auto w = data({2, 5}, rng);
    s.add("concat", {a, b}, [=] { return diff::sum(diff::mul(diff::concat<double>({a, b}, 1), w)); });
  }
  {
    auto a = param({2, 6}, rng);
    auto w0 = data({2, 2}, rng), w1 = data({2, 4}, rng);
    s.add("split", {a}, [=] {
      auto parts = diff::split(a, 1, {2, 4});
      return diff::add(diff::sum(diff::mul(parts[0], w0)), diff::sum(diff::mul(parts[1], w1)));
    });
  }
  {
    auto a = param({3, 4}, rng), b = param({3, 4}, rng);
    s.add("mse", {a, b}, [=] { return diff::mse(a, b); });
  }
  {
    auto x = param({2, 2, 6, 6}, rng), w = param({3, 2, 3, 3}, rng), b = param({3}, rng);
    auto r1 = data({2, 3, 6, 6}, rng), r2 = data({2, 3, 3, 3}, rng);
    s.add("conv2d", {x, w, b}, [=] {
      return diff::add(diff::sum(diff::mul(diff::conv2d(x, w, b, 1), r1)),
                       diff::sum(diff::mul(diff::conv2d(x, w, b, 2), r2)));
    });
  }
  {
    auto x = param({2, 2, 7}, rng), w = param({3, 2, 5}, rng), b = param({3}, rng);
    auto r = data({2, 3, 7}, rng);
    s.add("conv1d", {x, w, b}, [=] { return diff::sum(diff::mul(diff::conv1d(x, w, b), r)); });
  }
  {
    auto x = param({2, 3, 3, 3}, rng), w = param({3, 2, 3, 3}, rng), b = param({2}, rng);
    auto r = data({2, 2, 6, 6}, rng);
    s.add("conv_transpose2d", {x, w, b}, [=] { return diff::sum(diff::mul(diff::conv_transpose2d(x, w, b, 2), r)); });
  }
  {
    auto pts = param({2, 3, 2}, rng, -0.8, 0.8);
    auto r = data({2, 3, 5, 5}, rng);
    s.add("gaussian_heatmap", {pts}, [=] { return diff::sum(diff::mul(diff::gaussian_heatmap(pts, 5, 5, 0.4), r)); });
  }
}

policy::SequenceBatch<double> random_batch(const policy::ModelConfig& cfg, Index steps, Index batch, Rng& rng) {
  const Index rows = steps * batch, hw = cfg.image_size;
  policy::SequenceBatch<double> seq;
  seq.steps = steps;
  seq.batch = batch;
  seq.frames = data({rows, 2, hw, hw}, rng, 0.0, 1.0);
  seq.depth = data({rows, 1, hw, hw}, rng, 0.0, 1.0);
  seq.angles = data({rows, cfg.angle_dims}, rng, 0.0, 1.0);
  seq.torques = data({rows, cfg.torque_dims}, rng, 0.0, 1.0);
  seq.tactile = data({rows, cfg.tactile_dims}, rng, 0.0, 1.0);
  return seq;
}

// Large relu layers put some pre-activation near the kink; `relu_step` keeps
// the probe on one side of it.
void model_cases(Suite& s, Rng& rng, const policy::ModelConfig& cfg, Index cap, double relu_step) {
  auto p = policy::ModelParams<double>::init(cfg, rng.next());
  const Index hw = cfg.image_size;
  const auto seq = random_batch(cfg, 3, 1, rng);

  {
    auto frames = data({2, 2, hw, hw}, rng, 0.0, 1.0);
    auto depth = data({2, 1, hw, hw}, rng, 0.2, 1.0);
    auto r = data({2, cfg.vision_dims()}, rng);
    diff::TensorList<double> ps;
    p.encoder.visit("", [&](const std::string&, T& t) { ps.push_back(t); });
    s.add("encoder+spatial_softmax+keypoints", ps,
          [=] { return diff::sum(diff::mul(policy::perceive(frames, depth, p).keypoints, r)); }, cap, relu_step);
  }
  {
    auto x = data({2, cfg.angle_dims}, rng, 0.0, 1.0);
    diff::TensorList<double> ps;
    p.sk_angles.visit("", [&](const std::string&, T& t) { ps.push_back(t); });
    auto r = data({2, cfg.angle_dims}, rng);
    s.add("sknet", ps, [=] { return diff::sum(diff::mul(attention::sknet_attend(x, p.sk_angles).out, r)); }, cap);
  }
  {
    const auto feats = policy::perceive(seq.frames, seq.depth, p);
    auto features = diff::Tensor<double>(feats.features.shape(), feats.features.value(), true);
    auto points = diff::Tensor<double>(feats.keypoints.shape(), feats.keypoints.value(), true);
    diff::TensorList<double> ps{features, points};
    p.decoder.visit("", [&](const std::string&, T& t) { ps.push_back(t); });
    auto r = data({seq.frames.dim(0), 2, hw, hw}, rng);
    s.add("heatmap+decoder", ps, [=] { return diff::sum(diff::mul(policy::predict_image(features, points, p), r)); }, cap, relu_step);
  }
  {
    auto x = param({2, 3}, rng), h = param({2, cfg.hidden}, rng), c = param({2, cfg.hidden}, rng);
    auto cell = policy::LstmParams<double>::init(rng, 3, cfg.hidden);
    auto r = data({2, cfg.hidden}, rng), rc = data({2, cfg.hidden}, rng);
    s.add("lstm_cell", {x, h, c, cell.w, cell.b}, [=] {
      const auto out = policy::lstm_cell(x, h, c, cell);
      return diff::add(diff::sum(diff::mul(out.h, r)), diff::sum(diff::mul(out.c, rc)));
    });
  }
  {
    const Index B = 2;
    policy::ModalityInput<double> in;
    const auto dims = p.input_dims();
    for (int m = 0; m < policy::kModalities; ++m) in.x[m] = param({B, dims[m]}, rng, 0.0, 1.0);
    auto state = policy::RecurrentState<double>::zeros(cfg, B);
    for (auto& b : state.bottom) b = {param({B, cfg.hidden}, rng), param({B, cfg.hidden}, rng)};
    state.unite = {param({B, cfg.union_hidden}, rng), param({B, cfg.union_hidden}, rng)};
    std::array<T, policy::kModalities> r;
    for (int m = 0; m < policy::kModalities; ++m) r[m] = data({B, dims[m]}, rng);
    diff::TensorList<double> ps(in.x.begin(), in.x.end());
    for (int m = 0; m < policy::kModalities; ++m) p.bottom[m].visit("", [&](const std::string&, T& t) { ps.push_back(t); });
    p.unite.visit("", [&](const std::string&, T& t) { ps.push_back(t); });
    p.feedback.visit("", [&](const std::string&, T& t) { ps.push_back(t); });
    for (auto& h : p.heads) h.visit("", [&](const std::string&, T& t) { ps.push_back(t); });
    for (const auto& b : state.bottom) ps.push_back(b.h), ps.push_back(b.c);
    s.add("hierarchical_step", ps, [=] {
      const auto out = policy::hlstm_step(in, state, p).second;
      diff::TensorList<double> terms;
      for (int m = 0; m < policy::kModalities; ++m) terms.push_back(diff::sum(diff::mul(out.pred[m], r[m])));
      return diff::sum(diff::concat(terms, 0));
    }, cap);
  }
  {
    // Point targets are detached encoder outputs, which a finite difference
    // cannot hold still; check that term against frozen targets instead.
    auto q = p;
    q.config.weights.pt = 0.0;
    s.add("teacher_forced_loss", q.parameters(), [=] { return sequence_loss(seq, q).total; }, cap, relu_step);

    const auto frozen = [&] {
      diff::NoGradGuard no_grad;
      const auto kp = policy::perceive(seq.frames, seq.depth, p).keypoints;
      return point_targets(diff::narrow(kp, 0, seq.batch, (seq.steps - 1) * seq.batch), cfg, cfg.point_loss_3d);
    }();
    s.add("point_loss", p.parameters(), [=] {
      const auto out = policy::rollout_open_loop(seq, p, false);
      return diff::mse(point_targets(out.pred[policy::kVision], cfg, cfg.point_loss_3d), frozen);
    }, cap, relu_step);
  }
}

}  // namespace

std::vector<GradComponent> run_grad_suite(const GradSuiteOptions& options) {
  Suite suite(options);
  Rng rng(options.seed);
  op_cases(suite, rng);
  if (options.scale == GradScale::toy) {
    model_cases(suite, rng, policy::ModelConfig::toy(policy::Variant::full), 0, 0.0);
  } else {
    model_cases(suite, rng, policy::ModelConfig{}, 6, 1e-6);
  }
  return suite.take();
}

}  // namespace sockweave::trainer
