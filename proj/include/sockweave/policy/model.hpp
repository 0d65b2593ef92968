#pragma once

#include "sockweave/attention/attention.hpp"
#include "sockweave/policy/config.hpp"
#include "sockweave/policy/norm.hpp"

#include <array>
#include <string>
#include <utility>

namespace sockweave::policy {

using diff::Index;
using diff::Tensor;
using diff::TensorList;

enum Modality : int { kVision = 0, kAngles = 1, kTorques = 2, kTactile = 3 };
inline constexpr int kModalities = 4;
inline constexpr std::array<const char*, kModalities> kModalityNames{"vision", "angles", "torques", "tactile"};

// ---------------------------------------------------------------------------
// Building blocks.

template <typename Scalar>
struct LinearParams {
  Tensor<Scalar> w, b;  // [in, out], [out]

  static LinearParams init(diff::Rng& rng, Index in, Index out) {
    return {diff::uniform_param<Scalar>({in, out}, in, rng), diff::uniform_param<Scalar>({out}, in, rng)};
  }
  template <typename F>
  void visit(const std::string& prefix, F&& f) {
    f(prefix + "w", w);
    f(prefix + "b", b);
  }
};

/// Gates packed (input, forget, cell, output) along the last axis of w.
template <typename Scalar>
struct LstmParams {
  Tensor<Scalar> w, b;  // [in + hidden, 4 hidden], [4 hidden]

  Index hidden() const { return b.dim(0) / 4; }
  Index input() const { return w.dim(0) - hidden(); }

  static LstmParams init(diff::Rng& rng, Index in, Index hidden) {
    return {diff::uniform_param<Scalar>({in + hidden, 4 * hidden}, in + hidden, rng),
            diff::uniform_param<Scalar>({4 * hidden}, in + hidden, rng)};
  }
  template <typename F>
  void visit(const std::string& prefix, F&& f) {
    f(prefix + "w", w);
    f(prefix + "b", b);
  }
};

template <typename Scalar>
struct LstmState {
  Tensor<Scalar> h, c;  // [B, hidden]

  static LstmState zeros(Index batch, Index hidden) {
    return {Tensor<Scalar>::zeros({batch, hidden}), Tensor<Scalar>::zeros({batch, hidden})};
  }
};

template <typename Scalar>
LstmState<Scalar> lstm_cell(const Tensor<Scalar>& x, const Tensor<Scalar>& h_prev, const Tensor<Scalar>& c_prev,
                            const LstmParams<Scalar>& p) {
  const Index hd = p.hidden();
  if (x.rank() != 2 || x.dim(1) != p.input()) throw diff::shape_error("lstm_cell", x.shape(), p.w.shape(), "input width");
  if (h_prev.shape() != diff::Shape{x.dim(0), hd} || c_prev.shape() != h_prev.shape()) {
    throw diff::shape_error("lstm_cell", h_prev.shape(), c_prev.shape(), "state width");
  }
  auto z = diff::linear(diff::concat<Scalar>({x, h_prev}, 1), p.w, p.b);
  auto gates = diff::split(z, 1, {hd, hd, hd, hd});
  auto i = diff::sigmoid(gates[0]);
  auto f = diff::sigmoid(gates[1]);
  auto g = diff::tanh(gates[2]);
  auto o = diff::sigmoid(gates[3]);
  auto c = diff::add(diff::mul(f, c_prev), diff::mul(i, g));
  return {diff::mul(o, diff::tanh(c)), c};
}

// ---------------------------------------------------------------------------
// Parameters.

template <typename Scalar>
struct ModelParams {
  ModelConfig config;
  attention::EncoderParams<Scalar> encoder;
  attention::DecoderParams<Scalar> decoder;
  attention::SKNetParams<Scalar> sk_angles, sk_torques;
  std::array<LstmParams<Scalar>, kModalities> bottom;
  LstmParams<Scalar> unite;
  LinearParams<Scalar> feedback;  // union hidden -> 4 bottom widths
  LstmParams<Scalar> flat;        // no_hier only
  std::array<LinearParams<Scalar>, kModalities> heads;
  NormStats stats;

  std::array<Index, kModalities> input_dims() const {
    return {config.vision_dims(), config.angle_dims, config.torque_dims, config.tactile_dims};
  }

  static ModelParams init(const ModelConfig& cfg, std::uint64_t seed) {
    diff::Rng root(seed);
    ModelParams p;
    p.config = cfg;
    auto rng = [&](std::uint64_t salt) { return root.fork(salt); };
    {
      auto r = rng(1);
      p.encoder = attention::EncoderParams<Scalar>::init(r, 2, cfg.enc_c1, cfg.enc_c2, cfg.keypoints);
    }
    {
      auto r = rng(2);
      p.decoder = attention::DecoderParams<Scalar>::init(r, cfg.keypoints, cfg.dec_hidden, 2);
    }
    {
      auto r = rng(3);
      p.sk_angles = attention::SKNetParams<Scalar>::init(r, cfg.sk_channels, cfg.sk_reduced);
      p.sk_torques = attention::SKNetParams<Scalar>::init(r, cfg.sk_channels, cfg.sk_reduced);
    }
    const auto dims = p.input_dims();
    auto r = rng(4);
    if (cfg.hierarchical()) {
      for (int m = 0; m < kModalities; ++m) p.bottom[m] = LstmParams<Scalar>::init(r, dims[m], cfg.hidden);
      p.unite = LstmParams<Scalar>::init(r, kModalities * cfg.hidden, cfg.union_hidden);
      p.feedback = LinearParams<Scalar>::init(r, cfg.union_hidden, kModalities * cfg.hidden);
    } else {
      Index total = 0;
      for (auto d : dims) total += d;
      p.flat = LstmParams<Scalar>::init(r, total, cfg.flat_hidden);
    }
    const Index head_in = cfg.hierarchical() ? cfg.hidden : cfg.flat_hidden;
    for (int m = 0; m < kModalities; ++m) p.heads[m] = LinearParams<Scalar>::init(r, head_in, dims[m]);
    return p;
  }

  /// Every learnable tensor this variant uses, in a fixed order.
  template <typename F>
  void visit(F&& f) {
    encoder.visit("encoder.", f);
    decoder.visit("decoder.", f);
    if (config.uses_sknet()) {
      sk_angles.visit("sknet.angles.", f);
      sk_torques.visit("sknet.torques.", f);
    }
    if (config.hierarchical()) {
      for (int m = 0; m < kModalities; ++m) bottom[m].visit(std::string("bottom.") + kModalityNames[m] + ".", f);
      unite.visit("union.", f);
      feedback.visit("feedback.", f);
    } else {
      flat.visit("flat.", f);
    }
    for (int m = 0; m < kModalities; ++m) heads[m].visit(std::string("head.") + kModalityNames[m] + ".", f);
  }

  TensorList<Scalar> parameters() {
    TensorList<Scalar> out;
    visit([&](const std::string&, Tensor<Scalar>& t) { out.push_back(t); });
    return out;
  }

  std::vector<std::pair<std::string, Tensor<Scalar>>> named_parameters() {
    std::vector<std::pair<std::string, Tensor<Scalar>>> out;
    visit([&](const std::string& n, Tensor<Scalar>& t) { out.emplace_back(n, t); });
    return out;
  }

  /// Same config and values in another precision; independent leaves.
  template <typename Other>
  ModelParams<Other> cast() const {
    auto out = ModelParams<Other>::init(config, 0);
    out.stats = stats;
    auto src = const_cast<ModelParams&>(*this).parameters();
    auto dst = out.parameters();
    for (std::size_t i = 0; i < src.size(); ++i) {
      dst[i].mutable_value() = src[i].value().template cast<Other>();
    }
    return out;
  }
};

// ---------------------------------------------------------------------------
// Forward pass.

template <typename Scalar>
struct ModalityInput {
  std::array<Tensor<Scalar>, kModalities> x;  // each [B, dims]
};

template <typename Scalar>
struct RecurrentState {
  std::array<LstmState<Scalar>, kModalities> bottom;
  LstmState<Scalar> unite;
  LstmState<Scalar> flat;

  static RecurrentState zeros(const ModelConfig& cfg, Index batch) {
    RecurrentState s;
    if (cfg.hierarchical()) {
      for (auto& b : s.bottom) b = LstmState<Scalar>::zeros(batch, cfg.hidden);
      s.unite = LstmState<Scalar>::zeros(batch, cfg.union_hidden);
    } else {
      s.flat = LstmState<Scalar>::zeros(batch, cfg.flat_hidden);
    }
    return s;
  }
};

template <typename Scalar>
struct StepOutput {
  std::array<Tensor<Scalar>, kModalities> pred;  // next-step predictions per modality
  Tensor<Scalar> feedback;                       // v_t [B, 4 d] (hierarchical only)
  TensorList<Scalar> feedback_parts;             // its split into 4 x [B, d]
};

/// Somatosensory attention on angles and torques; tactile and vision pass
/// through unchanged.
template <typename Scalar>
ModalityInput<Scalar> attend_inputs(const ModalityInput<Scalar>& in, const ModelParams<Scalar>& p) {
  ModalityInput<Scalar> out = in;
  if (p.config.uses_sknet()) {
    out.x[kAngles] = attention::sknet_attend(in.x[kAngles], p.sk_angles).out;
    out.x[kTorques] = attention::sknet_attend(in.x[kTorques], p.sk_torques).out;
  }
  return out;
}

/// Next-step predictions from per-modality hiddens. With residual heads the
/// prediction is the raw current input plus a bounded change.
template <typename Scalar>
std::array<Tensor<Scalar>, kModalities> apply_heads(const std::array<Tensor<Scalar>, kModalities>& hidden,
                                                    const ModalityInput<Scalar>& raw, const ModelParams<Scalar>& p) {
  std::array<Tensor<Scalar>, kModalities> pred;
  for (int m = 0; m < kModalities; ++m) {
    auto y = diff::linear(hidden[m], p.heads[m].w, p.heads[m].b);
    if (p.config.residual_heads) {
      pred[m] = diff::add(raw.x[m], m == kVision ? y : diff::tanh(y));
    } else {
      pred[m] = m == kVision ? y : diff::sigmoid(y);
    }
  }
  return pred;
}

/// One recurrent step on already-attended inputs. Hierarchical order: the
/// union LSTM reads the previous bottom hiddens, its projected output is
/// split into per-modality hiddens, which seed each bottom LSTM.
template <typename Scalar>
std::pair<RecurrentState<Scalar>, StepOutput<Scalar>> recurrent_step(const ModalityInput<Scalar>& in,
                                                                     const ModalityInput<Scalar>& raw,
                                                                     const RecurrentState<Scalar>& state,
                                                                     const ModelParams<Scalar>& p) {
  const auto dims = p.input_dims();
  for (int m = 0; m < kModalities; ++m) {
    if (in.x[m].rank() != 2 || in.x[m].dim(1) != dims[m]) {
      throw diff::ShapeError(std::string("hlstm_step: ") + kModalityNames[m] + " input is " +
                             diff::to_string(in.x[m].shape()) + ", expected width " + std::to_string(dims[m]));
    }
  }
  RecurrentState<Scalar> next;
  StepOutput<Scalar> out;
  if (!p.config.hierarchical()) {
    TensorList<Scalar> xs(in.x.begin(), in.x.end());
    next.flat = lstm_cell(diff::concat(xs, 1), state.flat.h, state.flat.c, p.flat);
    out.pred = apply_heads<Scalar>({next.flat.h, next.flat.h, next.flat.h, next.flat.h}, raw, p);
    return {std::move(next), std::move(out)};
  }
  TensorList<Scalar> prev_h;
  for (const auto& b : state.bottom) prev_h.push_back(b.h);
  next.unite = lstm_cell(diff::concat(prev_h, 1), state.unite.h, state.unite.c, p.unite);
  out.feedback = diff::linear(next.unite.h, p.feedback.w, p.feedback.b);
  const Index d = p.config.hidden;
  out.feedback_parts = diff::split(out.feedback, 1, {d, d, d, d});
  std::array<Tensor<Scalar>, kModalities> hidden;
  for (int m = 0; m < kModalities; ++m) {
    next.bottom[m] = lstm_cell(in.x[m], out.feedback_parts[m], state.bottom[m].c, p.bottom[m]);
    hidden[m] = next.bottom[m].h;
  }
  out.pred = apply_heads(hidden, raw, p);
  return {std::move(next), std::move(out)};
}

template <typename Scalar>
std::pair<RecurrentState<Scalar>, StepOutput<Scalar>> hlstm_step(const ModalityInput<Scalar>& in,
                                                                 const RecurrentState<Scalar>& state,
                                                                 const ModelParams<Scalar>& p) {
  return recurrent_step(attend_inputs(in, p), in, state, p);
}

template <typename Scalar>
struct Perceived {
  Tensor<Scalar> features;   // [N, K, h, w]
  Tensor<Scalar> keypoints;  // [N, K * point_dims]
};

/// frames[N,2,H,W], depth[N,1,H,W] (ignored when the variant has no depth).
template <typename Scalar>
Perceived<Scalar> perceive(const Tensor<Scalar>& frames, const Tensor<Scalar>& depth, const ModelParams<Scalar>& p) {
  const auto& cfg = p.config;
  Perceived<Scalar> out;
  out.features = attention::encode_image(frames, p.encoder);
  auto attn = attention::spatial_softmax(out.features, static_cast<Scalar>(cfg.tau));
  const Index n = frames.dim(0);
  Tensor<Scalar> pooled;
  if (cfg.uses_depth()) pooled = attention::pool_constant(depth, frames.dim(2) / out.features.dim(2));
  out.keypoints = diff::reshape(attention::expect_keypoints(attn, pooled), {n, cfg.vision_dims()});
  return out;
}

/// Next-frame prediction from the current features and predicted keypoints.
template <typename Scalar>
Tensor<Scalar> predict_image(const Tensor<Scalar>& features, const Tensor<Scalar>& keypoints,
                             const ModelParams<Scalar>& p) {
  const auto& cfg = p.config;
  const Index n = features.dim(0), k = cfg.keypoints, h = features.dim(2), w = features.dim(3);
  auto pts = diff::reshape(keypoints, {n, k, cfg.point_dims()});
  if (cfg.point_dims() != 2) pts = diff::narrow(pts, 2, 0, 2);
  auto heat = attention::keypoints_to_heatmap(pts, h, w, static_cast<Scalar>(cfg.sigma));
  return attention::decode_image(features, heat, p.decoder);
}

// ---------------------------------------------------------------------------
// Teacher-forced rollout over a batch of B sequences, t-major rows.

template <typename Scalar>
struct SequenceBatch {
  Index steps = 0, batch = 0;
  Tensor<Scalar> frames;  // [T*B, 2, H, W]
  Tensor<Scalar> depth;   // [T*B, 1, H, W]
  Tensor<Scalar> angles, torques, tactile;  // [T*B, dims], normalized
};

template <typename Scalar>
struct OpenLoopOutput {
  std::array<Tensor<Scalar>, kModalities> pred;  // [(T-1)*B, dims]; predicts rows B..
  Tensor<Scalar> image;                          // [(T-1)*B, 2, H, W]
  Tensor<Scalar> keypoints;                      // encoder keypoints, [T*B, V]
};

template <typename Scalar>
OpenLoopOutput<Scalar> rollout_open_loop(const SequenceBatch<Scalar>& seq, const ModelParams<Scalar>& p,
                                         bool with_image = true) {
  const Index T = seq.steps, B = seq.batch;
  if (T < 2) throw std::invalid_argument("rollout_open_loop: need at least 2 steps, got " + std::to_string(T));
  const auto seen = perceive(seq.frames, seq.depth, p);
  ModalityInput<Scalar> all{{seen.keypoints, seq.angles, seq.torques, seq.tactile}};
  const auto attended = attend_inputs(all, p);

  auto state = RecurrentState<Scalar>::zeros(p.config, B);
  std::array<TensorList<Scalar>, kModalities> preds;
  for (Index t = 0; t + 1 < T; ++t) {
    ModalityInput<Scalar> in, raw;
    for (int m = 0; m < kModalities; ++m) {
      in.x[m] = diff::narrow(attended.x[m], 0, t * B, B);
      raw.x[m] = diff::narrow(all.x[m], 0, t * B, B);
    }
    auto [next, out] = recurrent_step(in, raw, state, p);
    state = std::move(next);
    for (int m = 0; m < kModalities; ++m) preds[m].push_back(out.pred[m]);
  }
  OpenLoopOutput<Scalar> result;
  for (int m = 0; m < kModalities; ++m) result.pred[m] = diff::concat(preds[m], 0);
  result.keypoints = seen.keypoints;
  if (with_image) {
    auto feats = diff::narrow(seen.features, 0, 0, (T - 1) * B);
    result.image = predict_image(feats, result.pred[kVision], p);
  }
  return result;
}

}  // namespace sockweave::policy
