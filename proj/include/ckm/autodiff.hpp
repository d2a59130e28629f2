#pragma once

// Reverse-mode automatic differentiation over dense 2-D tensors.
//
// A Tape records every operation in insertion order; since an operation can
// only consume Vars that already exist, insertion order is a topological
// order and backward() simply walks the tape in reverse.
//
// Gradient contract: backward() clears the gradients of all non-parameter
// nodes, seeds d(loss)/d(loss) = 1 and accumulates (+=) into parameter nodes.
// Parameter gradients therefore persist across backward() calls until
// zero_grad().

#include <cstddef>
#include <functional>
#include <string>
#include <vector>

#include "ckm/tensor.hpp"

namespace ckm::ad {

class Tape;

/// Handle to a node on a Tape. Cheap to copy; valid while its Tape lives.
class Var {
 public:
  Var() = default;

  bool valid() const { return tape_ != nullptr; }
  Tape& tape() const;
  std::size_t id() const { return id_; }

  const Tensor& value() const;
  const Tensor& grad() const;
  Eigen::Index rows() const { return value().rows(); }
  Eigen::Index cols() const { return value().cols(); }

 private:
  friend class Tape;
  Var(Tape* tape, std::size_t id) : tape_(tape), id_(id) {}

  Tape* tape_ = nullptr;
  std::size_t id_ = 0;
};

class Tape {
 public:
  /// Called during backward() with the id of the node whose adjoint is ready.
  using BackwardFn = std::function<void(Tape&, std::size_t)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;
  Tape(Tape&&) = delete;
  Tape& operator=(Tape&&) = delete;

  /// Leaf that never receives a gradient.
  Var constant(Tensor value);
  /// Leaf whose gradient is accumulated by backward().
  Var parameter(Tensor value);

  /// Appends the result of an operation. Throws NumericError if `value`
  /// contains NaN/Inf. Ops in this header are built on top of record().
  Var record(Tensor value, std::vector<Var> parents, const char* op, BackwardFn backward);

  void backward(Var loss);
  void zero_grad();

  const Tensor& value(std::size_t id) const { return nodes_[id].value; }
  const Tensor& grad(std::size_t id) const { return nodes_[id].grad; }
  /// Adds `delta` into the adjoint of node `id` if that node needs a gradient.
  template <class Expr>
  void accumulate(std::size_t id, const Expr& delta) {
    Node& n = nodes_[id];
    if (n.requires_grad) n.grad.array() += delta.array();
  }
  bool requires_grad(std::size_t id) const { return nodes_[id].requires_grad; }
  const char* op_name(std::size_t id) const { return nodes_[id].op; }
  const std::vector<std::size_t>& parents(std::size_t id) const { return nodes_[id].parents; }

  const std::vector<Var>& parameters() const { return parameters_; }
  std::size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    Tensor value;
    Tensor grad;
    std::vector<std::size_t> parents;
    BackwardFn backward;
    const char* op = "";
    bool requires_grad = false;
    bool is_parameter = false;
  };

  Var push(Node node);
  void check_owned(Var v, const char* what) const;

  std::vector<Node> nodes_;
  std::vector<Var> parameters_;
};

// --- matrix ---------------------------------------------------------------

/// a[m x n] * b[n x p].
Var matmul(Var a, Var b);
/// Adds the 1 x n row `bias` to every row of a[m x n].
Var add_row_broadcast(Var a, Var bias);

// --- elementwise ----------------------------------------------------------

Var add(Var a, Var b);
Var sub(Var a, Var b);
/// Hadamard product.
Var mul(Var a, Var b);
Var scale(Var a, double factor);
/// exp(min(x, 700)): the clamp keeps the result finite.
Var exp(Var a);
/// log(max(x, 1e-30)); the clamped region has zero derivative.
Var log(Var a);
Var relu(Var a);
Var square(Var a);

inline constexpr double kLogFloor = 1e-30;
inline constexpr double kExpCeiling = 700.0;

// --- reductions -----------------------------------------------------------

/// Sum of all entries, 1 x 1.
Var sum(Var a);
/// Per-row sums, m x 1.
Var row_sum(Var a);
/// Squared Frobenius norm, 1 x 1.
Var sq_frobenius(Var a);

// --- structured -----------------------------------------------------------

Var log_softmax_rows(Var a);
/// D[i][j] = ||z_i - m_j||^2 for z[N x d], m[k x d].
Var pairwise_sq_dist(Var z, Var m);
/// Forward value `forward`, backward passes the adjoint through to `x` unchanged.
Var straight_through(Var x, Tensor forward);

}  // namespace ckm::ad
