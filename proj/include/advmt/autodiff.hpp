#pragma once

#include <deque>
#include <functional>
#include <span>
#include <unordered_map>
#include <vector>

#include "advmt/parameter.hpp"
#include "advmt/tensor.hpp"

namespace advmt {

class Tape;

// Handle to a value recorded on a Tape.
struct Var {
  Tape* tape = nullptr;
  int id = -1;

  const Tensor& value() const;
  double item() const { return value().item(); }
};

// Reverse-mode tape. Nodes are appended in evaluation order, so walking the
// node list backwards is a valid topological order for the reverse pass.
// A tape is used by one thread and discarded after backward().
class Tape {
 public:
  using BackwardFn = std::function<void(const Tensor& grad_out, std::span<Tensor*> parent_grads)>;
  using ScopeFilter = std::function<bool(const Scope&)>;

  // Every parameter is trainable.
  Tape() = default;
  // Only parameters whose scope passes `trainable` receive gradients; the
  // rest enter the graph as constants.
  explicit Tape(ScopeFilter trainable) : trainable_(std::move(trainable)) {}
  // Vars hold a pointer to their tape.
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;
  // Inference tape: no parameter receives gradients.
  static Tape frozen() {
    return Tape([](const Scope&) { return false; });
  }

  Var constant(Tensor value);
  // Leaf for `p`. Repeated calls with the same parameter return the same
  // leaf. If `p` is trainable on this tape, backward() accumulates into
  // `p.grad`.
  Var param(Parameter& p);

  // Records a derived value. `fn` receives the node's output gradient and
  // one gradient slot per parent; slots of parents that need no gradient are
  // null.
  Var record(Tensor value, std::vector<Var> parents, BackwardFn fn);

  const Tensor& value(Var v) const { return nodes_[v.id].value; }
  bool needs_grad(Var v) const { return nodes_[v.id].needs_grad; }
  std::size_t node_count() const { return nodes_.size(); }

  // Populates the gradient of every Parameter reachable from `loss`.
  void backward(Var loss);

 private:
  struct Node {
    Tensor value;
    std::vector<int> parents;
    BackwardFn backward;
    Parameter* param = nullptr;
    bool needs_grad = false;
  };

  std::deque<Node> nodes_;  // keeps value() references valid as the tape grows
  std::unordered_map<Parameter*, int> param_nodes_;
  ScopeFilter trainable_;
};

// Differentiable operations. All of them check shapes and throw ShapeError
// naming both operands on mismatch.
namespace ops {

// (m x k)(k x n), (m x k)(k) and (k)(k x n).
Var matmul(Var a, Var b);
Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);
Var scale(Var a, double s);
Var add_scalar(Var a, double s);
Var concat(std::span<const Var> parts);
Var concat(Var a, Var b);
Var slice(Var a, std::size_t offset, std::size_t length);
Var tanh(Var a);
Var sigmoid(Var a);
Var relu(Var a);
// Softmax over a vector, or over each row of a matrix.
Var softmax(Var a);
// Natural log with the result clamped below at `floor`; clamped entries get
// zero gradient.
Var log(Var a, double floor = -700.0);
Var sum(Var a);
Var reshape(Var a, Shape shape);
// Row `index` of a matrix as a vector. Gradients into row 0 (padding) are
// dropped when `skip_row0_grad` is set.
Var gather_row(Var table, std::size_t index, bool skip_row0_grad = false);

}  // namespace ops

}  // namespace advmt
