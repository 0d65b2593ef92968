#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <functional>
#include <initializer_list>
#include <memory>
#include <sstream>
#include <stdexcept>
#include <string>
#include <unordered_set>
#include <vector>

namespace sockweave::diff {

using Index = Eigen::Index;
using Shape = std::vector<Index>;

inline Index numel(const Shape& shape) {
  Index n = 1;
  for (Index e : shape) n *= e;
  return n;
}

inline std::string to_string(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) os << (i ? "," : "") << shape[i];
  os << ']';
  return os.str();
}

class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

inline ShapeError shape_error(const std::string& op, const Shape& a, const Shape& b,
                              const std::string& detail = {}) {
  return ShapeError(op + ": incompatible shapes " + to_string(a) + " and " + to_string(b) +
                    (detail.empty() ? "" : " (" + detail + ")"));
}

// Graph recording is on by default; NoGradGuard switches it off for the
// current thread (inference, finite-difference probes).
inline bool& grad_mode_flag() {
  thread_local bool enabled = true;
  return enabled;
}

class NoGradGuard {
 public:
  NoGradGuard() : previous_(grad_mode_flag()) { grad_mode_flag() = false; }
  ~NoGradGuard() { grad_mode_flag() = previous_; }
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool previous_;
};

template <typename Scalar>
struct Node {
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

  Shape shape;
  Vector value;
  Vector grad;
  bool requires_grad = false;
  std::vector<std::shared_ptr<Node>> parents;
  // Reads this->grad and accumulates into the parents' grads.
  std::function<void(Node&)> backward;

  bool is_leaf() const { return parents.empty() && !backward; }
  void ensure_grad() {
    if (grad.size() != value.size()) grad = Vector::Zero(value.size());
  }
};

/// Dense row-major tensor handle. Copies share storage and graph position,
/// like a reference; use clone() for an independent leaf.
template <typename Scalar>
class Tensor {
 public:
  using scalar_type = Scalar;
  using NodeType = Node<Scalar>;
  using Vector = typename NodeType::Vector;

  Tensor() = default;

  Tensor(Shape shape, Vector values, bool requires_grad = false)
      : node_(std::make_shared<NodeType>()) {
    if (numel(shape) != values.size()) {
      throw ShapeError("tensor: shape " + to_string(shape) + " holds " +
                       std::to_string(numel(shape)) + " values, got " +
                       std::to_string(values.size()));
    }
    for (Index e : shape) {
      if (e <= 0) throw ShapeError("tensor: non-positive extent in " + to_string(shape));
    }
    node_->shape = std::move(shape);
    node_->value = std::move(values);
    node_->requires_grad = requires_grad;
  }

  static Tensor zeros(Shape shape, bool requires_grad = false) {
    const Index n = numel(shape);
    return Tensor(std::move(shape), Vector::Zero(n), requires_grad);
  }

  static Tensor full(Shape shape, Scalar v, bool requires_grad = false) {
    const Index n = numel(shape);
    return Tensor(std::move(shape), Vector::Constant(n, v), requires_grad);
  }

  static Tensor from(Shape shape, std::initializer_list<Scalar> values,
                     bool requires_grad = false) {
    Vector v(static_cast<Index>(values.size()));
    Index i = 0;
    for (Scalar x : values) v[i++] = x;
    return Tensor(std::move(shape), std::move(v), requires_grad);
  }

  static Tensor scalar(Scalar v, bool requires_grad = false) {
    return full({1}, v, requires_grad);
  }

  explicit operator bool() const { return static_cast<bool>(node_); }

  const Shape& shape() const { return node_->shape; }
  Index rank() const { return static_cast<Index>(node_->shape.size()); }
  Index dim(Index i) const {
    if (i < 0) i += rank();
    return node_->shape.at(static_cast<std::size_t>(i));
  }
  Index size() const { return node_->value.size(); }

  const Vector& value() const { return node_->value; }
  Vector& mutable_value() { return node_->value; }
  const Scalar* data() const { return node_->value.data(); }
  Scalar operator[](Index i) const { return node_->value[i]; }

  Scalar item() const {
    if (size() != 1) throw ShapeError("item: tensor of shape " + to_string(shape()) + " is not scalar");
    return node_->value[0];
  }

  bool requires_grad() const { return node_->requires_grad; }
  bool has_grad() const { return node_->grad.size() == node_->value.size(); }
  const Vector& grad() const { return node_->grad; }
  Vector& mutable_grad() {
    node_->ensure_grad();
    return node_->grad;
  }
  void zero_grad() {
    if (node_->grad.size() > 0) node_->grad.setZero();
  }
  void drop_grad() { node_->grad.resize(0); }

  bool is_leaf() const { return node_->is_leaf(); }

  /// Same values, cut from the graph.
  Tensor detach() const { return Tensor(shape(), value(), false); }
  Tensor clone(bool requires_grad = false) const { return Tensor(shape(), value(), requires_grad); }

  const std::shared_ptr<NodeType>& node() const { return node_; }

  // Builds an op result. The node joins the graph only when grad mode is on
  // and some input requires grad; otherwise the backward closure is dropped.
  static Tensor make_result(Shape shape, Vector values, const std::vector<Tensor>& inputs,
                            std::function<void(NodeType&)> backward) {
    Tensor out(std::move(shape), std::move(values), false);
    if (!grad_mode_flag()) return out;
    bool any = false;
    for (const auto& in : inputs) any = any || in.requires_grad();
    if (!any) return out;
    out.node_->requires_grad = true;
    out.node_->parents.reserve(inputs.size());
    for (const auto& in : inputs) out.node_->parents.push_back(in.node_);
    out.node_->backward = std::move(backward);
    return out;
  }

 private:
  std::shared_ptr<NodeType> node_;
};

namespace detail {

template <typename Scalar>
std::vector<Node<Scalar>*> topological_order(Node<Scalar>* root) {
  std::vector<Node<Scalar>*> order;
  std::unordered_set<Node<Scalar>*> visited;
  std::vector<std::pair<Node<Scalar>*, std::size_t>> stack;
  stack.emplace_back(root, 0);
  visited.insert(root);
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->parents.size()) {
      Node<Scalar>* parent = node->parents[next++].get();
      if (parent->requires_grad && visited.insert(parent).second) stack.emplace_back(parent, 0);
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }
  return order;  // parents before children
}

}  // namespace detail

/// Reverse-mode sweep from a scalar loss. Leaf gradients accumulate across
/// calls; interior gradients are recomputed from scratch each time.
template <typename Scalar>
void backward(const Tensor<Scalar>& loss) {
  if (loss.size() != 1) {
    throw ShapeError("backward: loss must be scalar, got shape " + to_string(loss.shape()));
  }
  if (!loss.requires_grad()) throw std::invalid_argument("backward: loss is not on a gradient graph");
  auto order = detail::topological_order(loss.node().get());
  // Leaves collect this sweep into a fresh buffer and add the previous
  // gradient afterwards, so two identical sweeps give exactly twice one.
  std::vector<std::pair<Node<Scalar>*, typename Node<Scalar>::Vector>> carried;
  for (auto* node : order) {
    if (node->is_leaf()) {
      if (node->grad.size() == node->value.size()) carried.emplace_back(node, std::move(node->grad));
    }
    node->grad = Node<Scalar>::Vector::Zero(node->value.size());
  }
  loss.node()->grad[0] += Scalar(1);
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    if ((*it)->backward) (*it)->backward(**it);
  }
  for (auto& [node, previous] : carried) node->grad += previous;
}

/// Drops closures and parent links so a long recurrent graph is freed
/// without deep recursive destruction.
template <typename Scalar>
void release_graph(const Tensor<Scalar>& root) {
  if (!root || root.is_leaf()) return;
  auto order = detail::topological_order(root.node().get());
  std::vector<std::shared_ptr<Node<Scalar>>> hold;
  hold.reserve(order.size());
  for (auto* node : order) {
    for (auto& p : node->parents) hold.push_back(p);
  }
  for (auto* node : order) {
    node->parents.clear();
    node->backward = nullptr;
  }
}

template <typename Scalar>
using TensorList = std::vector<Tensor<Scalar>>;

}  // namespace sockweave::diff
