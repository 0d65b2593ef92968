#pragma once

#include "sockweave/policy/model.hpp"

namespace sockweave::trainer {

using diff::Tensor;
using policy::LossWeights;

template <typename Scalar>
struct LossTerms {
  Tensor<Scalar> img, angle, torque, tactile, pt;
  Tensor<Scalar> total;
};

struct LossBreakdown {
  double img = 0, angle = 0, torque = 0, tactile = 0, pt = 0, total = 0;

  LossBreakdown& operator+=(const LossBreakdown& o) {
    img += o.img; angle += o.angle; torque += o.torque; tactile += o.tactile; pt += o.pt; total += o.total;
    return *this;
  }
  LossBreakdown scaled(double k) const { return {img * k, angle * k, torque * k, tactile * k, pt * k, total * k}; }
};

template <typename Scalar>
LossBreakdown values(const LossTerms<Scalar>& t) {
  return {double(t.img.item()), double(t.angle.item()), double(t.torque.item()), double(t.tactile.item()),
          double(t.pt.item()), double(t.total.item())};
}

/// Next-step predictions and their targets, row-aligned.
template <typename Scalar>
struct LossInputs {
  Tensor<Scalar> image, angles, torques, tactile, points;
};

/// Weighted sum of the five MSE components.
template <typename Scalar>
LossTerms<Scalar> compute_loss(const LossInputs<Scalar>& pred, const LossInputs<Scalar>& target, const LossWeights& w) {
  LossTerms<Scalar> t;
  t.img = diff::mse(pred.image, target.image);
  t.angle = diff::mse(pred.angles, target.angles);
  t.torque = diff::mse(pred.torques, target.torques);
  t.tactile = diff::mse(pred.tactile, target.tactile);
  t.pt = diff::mse(pred.points, target.points);
  auto weighted = [](const Tensor<Scalar>& x, double k) { return diff::scale(x, static_cast<Scalar>(k)); };
  t.total = weighted(t.img, w.img) + weighted(t.angle, w.angle) + weighted(t.torque, w.torque) +
            weighted(t.tactile, w.tactile) + weighted(t.pt, w.pt);
  return t;
}

/// Keypoints [N, K*P] -> the (x, y) pairs [N, K, 2], or all P when `all`.
template <typename Scalar>
Tensor<Scalar> point_targets(const Tensor<Scalar>& keypoints, const policy::ModelConfig& cfg, bool all) {
  auto pts = diff::reshape(keypoints, {keypoints.dim(0), cfg.keypoints, cfg.point_dims()});
  if (all || cfg.point_dims() == 2) return pts;
  return diff::narrow(pts, 2, 0, 2);
}

/// Teacher-forced loss of one batch: predictions for steps 1..T-1 against
/// the recorded data; point targets are the detached encoder keypoints.
template <typename Scalar>
LossTerms<Scalar> sequence_loss(const policy::SequenceBatch<Scalar>& seq, const policy::ModelParams<Scalar>& p) {
  const auto& cfg = p.config;
  const auto out = policy::rollout_open_loop(seq, p, true);
  const diff::Index B = seq.batch, rows = (seq.steps - 1) * B;
  auto next = [&](const Tensor<Scalar>& x) { return diff::narrow(x, 0, B, rows); };
  LossInputs<Scalar> pred{out.image, out.pred[policy::kAngles], out.pred[policy::kTorques], out.pred[policy::kTactile],
                          point_targets(out.pred[policy::kVision], cfg, cfg.point_loss_3d)};
  LossInputs<Scalar> target{next(seq.frames), next(seq.angles), next(seq.torques), next(seq.tactile),
                            point_targets(next(out.keypoints).detach(), cfg, cfg.point_loss_3d)};
  return compute_loss(pred, target, cfg.weights);
}

}  // namespace sockweave::trainer
