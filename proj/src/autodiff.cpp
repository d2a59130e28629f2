#include "ckm/autodiff.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <utility>

#include "ckm/error.hpp"

namespace ckm::ad {

Tape& Var::tape() const {
  if (tape_ == nullptr) throw ContractError("use of an unbound Var");
  return *tape_;
}

const Tensor& Var::value() const { return tape().value(id_); }
const Tensor& Var::grad() const { return tape().grad(id_); }

Var Tape::push(Node node) {
  if (!node.value.allFinite()) {
    throw NumericError(std::string("non-finite value produced by '") + node.op + "' " +
                       shape_string(node.value));
  }
  node.grad = Tensor::Zero(node.value.rows(), node.value.cols());
  nodes_.push_back(std::move(node));
  return Var(this, nodes_.size() - 1);
}

void Tape::check_owned(Var v, const char* what) const {
  if (!v.valid() || &v.tape() != this || v.id() >= nodes_.size()) {
    throw ContractError(std::string(what) + ": Var does not belong to this tape");
  }
}

Var Tape::constant(Tensor value) {
  Node n;
  n.value = std::move(value);
  n.op = "constant";
  return push(std::move(n));
}

Var Tape::parameter(Tensor value) {
  Node n;
  n.value = std::move(value);
  n.op = "parameter";
  n.requires_grad = true;
  n.is_parameter = true;
  Var v = push(std::move(n));
  parameters_.push_back(v);
  return v;
}

Var Tape::record(Tensor value, std::vector<Var> parents, const char* op, BackwardFn backward) {
  Node n;
  n.value = std::move(value);
  n.op = op;
  n.backward = std::move(backward);
  n.parents.reserve(parents.size());
  for (const Var& p : parents) {
    check_owned(p, op);
    n.parents.push_back(p.id());
    n.requires_grad = n.requires_grad || nodes_[p.id()].requires_grad;
  }
  return push(std::move(n));
}

void Tape::backward(Var loss) {
  check_owned(loss, "backward");
  const Tensor& lv = nodes_[loss.id()].value;
  if (lv.rows() != 1 || lv.cols() != 1) {
    throw ContractError("backward: loss must be a 1x1 scalar, got " + shape_string(lv));
  }
  for (Node& n : nodes_) {
    if (!n.is_parameter) n.grad.setZero();
  }
  nodes_[loss.id()].grad(0, 0) += 1.0;
  for (std::size_t i = loss.id() + 1; i-- > 0;) {
    Node& n = nodes_[i];
    if (n.requires_grad && n.backward) n.backward(*this, i);
  }
}

void Tape::zero_grad() {
  for (Node& n : nodes_) n.grad.setZero();
}

namespace {

void require_same_tape(Var a, Var b, const char* op) {
  if (&a.tape() != &b.tape()) throw ContractError(std::string(op) + ": operands on different tapes");
}

void require_same_shape(Var a, Var b, const char* op) {
  require_same_tape(a, b, op);
  ckm::require_same_shape(a.value(), b.value(), op);
}

}  // namespace

Var matmul(Var a, Var b) {
  require_same_tape(a, b, "matmul");
  if (a.cols() != b.rows()) {
    throw DimensionError("matmul: inner dimensions differ " + shape_string(a.value()) + " x " +
                         shape_string(b.value()));
  }
  Tensor out;
  out.noalias() = a.value() * b.value();
  const std::size_t ia = a.id(), ib = b.id();
  return a.tape().record(std::move(out), {a, b}, "matmul", [ia, ib](Tape& t, std::size_t self) {
    const Tensor& g = t.grad(self);
    if (t.requires_grad(ia)) t.accumulate(ia, g * t.value(ib).transpose());
    if (t.requires_grad(ib)) t.accumulate(ib, t.value(ia).transpose() * g);
  });
}

Var add_row_broadcast(Var a, Var bias) {
  require_same_tape(a, bias, "add_row_broadcast");
  if (bias.rows() != 1 || bias.cols() != a.cols()) {
    throw DimensionError("add_row_broadcast: bias " + shape_string(bias.value()) +
                         " does not match " + shape_string(a.value()));
  }
  Tensor out = a.value().rowwise() + bias.value().row(0);
  const std::size_t ia = a.id(), ib = bias.id();
  return a.tape().record(std::move(out), {a, bias}, "add_row_broadcast",
                         [ia, ib](Tape& t, std::size_t self) {
                           const Tensor& g = t.grad(self);
                           t.accumulate(ia, g);
                           if (t.requires_grad(ib)) t.accumulate(ib, g.colwise().sum());
                         });
}

Var add(Var a, Var b) {
  require_same_shape(a, b, "add");
  Tensor out = a.value() + b.value();
  const std::size_t ia = a.id(), ib = b.id();
  return a.tape().record(std::move(out), {a, b}, "add", [ia, ib](Tape& t, std::size_t self) {
    t.accumulate(ia, t.grad(self));
    t.accumulate(ib, t.grad(self));
  });
}

Var sub(Var a, Var b) {
  require_same_shape(a, b, "sub");
  Tensor out = a.value() - b.value();
  const std::size_t ia = a.id(), ib = b.id();
  return a.tape().record(std::move(out), {a, b}, "sub", [ia, ib](Tape& t, std::size_t self) {
    t.accumulate(ia, t.grad(self));
    t.accumulate(ib, -t.grad(self));
  });
}

Var mul(Var a, Var b) {
  require_same_shape(a, b, "mul");
  Tensor out = a.value().cwiseProduct(b.value());
  const std::size_t ia = a.id(), ib = b.id();
  return a.tape().record(std::move(out), {a, b}, "mul", [ia, ib](Tape& t, std::size_t self) {
    const Tensor& g = t.grad(self);
    if (t.requires_grad(ia)) t.accumulate(ia, g.cwiseProduct(t.value(ib)));
    if (t.requires_grad(ib)) t.accumulate(ib, g.cwiseProduct(t.value(ia)));
  });
}

Var scale(Var a, double factor) {
  Tensor out = a.value() * factor;
  const std::size_t ia = a.id();
  return a.tape().record(std::move(out), {a}, "scale", [ia, factor](Tape& t, std::size_t self) {
    t.accumulate(ia, t.grad(self) * factor);
  });
}

Var exp(Var a) {
  Tensor out = a.value().unaryExpr([](double x) { return std::exp(std::min(x, kExpCeiling)); });
  const std::size_t ia = a.id();
  return a.tape().record(std::move(out), {a}, "exp", [ia](Tape& t, std::size_t self) {
    const Tensor& x = t.value(ia);
    const Tensor& y = t.value(self);
    const Tensor& g = t.grad(self);
    Tensor d(x.rows(), x.cols());
    for (Eigen::Index i = 0; i < x.size(); ++i) {
      d.data()[i] = x.data()[i] > kExpCeiling ? 0.0 : g.data()[i] * y.data()[i];
    }
    t.accumulate(ia, d);
  });
}

Var log(Var a) {
  Tensor out = a.value().unaryExpr([](double x) { return std::log(std::max(x, kLogFloor)); });
  const std::size_t ia = a.id();
  return a.tape().record(std::move(out), {a}, "log", [ia](Tape& t, std::size_t self) {
    const Tensor& x = t.value(ia);
    const Tensor& g = t.grad(self);
    Tensor d(x.rows(), x.cols());
    for (Eigen::Index i = 0; i < x.size(); ++i) {
      d.data()[i] = x.data()[i] > kLogFloor ? g.data()[i] / x.data()[i] : 0.0;
    }
    t.accumulate(ia, d);
  });
}

Var relu(Var a) {
  Tensor out = a.value().cwiseMax(0.0);
  const std::size_t ia = a.id();
  return a.tape().record(std::move(out), {a}, "relu", [ia](Tape& t, std::size_t self) {
    const Tensor& x = t.value(ia);
    t.accumulate(ia, (x.array() > 0.0).select(t.grad(self), 0.0));
  });
}

Var square(Var a) {
  Tensor out = a.value().array().square();
  const std::size_t ia = a.id();
  return a.tape().record(std::move(out), {a}, "square", [ia](Tape& t, std::size_t self) {
    t.accumulate(ia, 2.0 * t.grad(self).cwiseProduct(t.value(ia)));
  });
}

Var sum(Var a) {
  Tensor out(1, 1);
  out(0, 0) = a.value().sum();
  const std::size_t ia = a.id();
  return a.tape().record(std::move(out), {a}, "sum", [ia](Tape& t, std::size_t self) {
    const Tensor& x = t.value(ia);
    t.accumulate(ia, Tensor::Constant(x.rows(), x.cols(), t.grad(self)(0, 0)));
  });
}

Var row_sum(Var a) {
  Tensor out = a.value().rowwise().sum();
  const std::size_t ia = a.id();
  return a.tape().record(std::move(out), {a}, "row_sum", [ia](Tape& t, std::size_t self) {
    const Tensor& g = t.grad(self);
    const Eigen::Index cols = t.value(ia).cols();
    t.accumulate(ia, g.col(0).replicate(1, cols));
  });
}

Var sq_frobenius(Var a) {
  Tensor out(1, 1);
  out(0, 0) = a.value().squaredNorm();
  const std::size_t ia = a.id();
  return a.tape().record(std::move(out), {a}, "sq_frobenius", [ia](Tape& t, std::size_t self) {
    t.accumulate(ia, (2.0 * t.grad(self)(0, 0)) * t.value(ia));
  });
}

Var log_softmax_rows(Var a) {
  if (a.cols() < 1) throw DimensionError("log_softmax_rows: need at least one column");
  Tensor out = ckm::log_softmax_rows(a.value());
  const std::size_t ia = a.id();
  return a.tape().record(std::move(out), {a}, "log_softmax_rows", [ia](Tape& t, std::size_t self) {
    const Tensor& g = t.grad(self);
    const Tensor soft = t.value(self).array().exp();
    const Eigen::VectorXd gsum = g.rowwise().sum();
    t.accumulate(ia, g - (soft.array().colwise() * gsum.array()).matrix());
  });
}

Var pairwise_sq_dist(Var z, Var m) {
  require_same_tape(z, m, "pairwise_sq_dist");
  if (z.cols() != m.cols()) {
    throw DimensionError("pairwise_sq_dist: feature dimensions differ " + shape_string(z.value()) +
                         " vs " + shape_string(m.value()));
  }
  const Tensor& zv = z.value();
  const Tensor& mv = m.value();
  Tensor out(zv.rows(), mv.rows());
  for (Eigen::Index i = 0; i < zv.rows(); ++i) {
    for (Eigen::Index j = 0; j < mv.rows(); ++j) out(i, j) = row_sq_distance(zv, i, mv, j);
  }
  const std::size_t iz = z.id(), im = m.id();
  return z.tape().record(std::move(out), {z, m}, "pairwise_sq_dist",
                         [iz, im](Tape& t, std::size_t self) {
                           const Tensor& g = t.grad(self);
                           const Tensor& zv = t.value(iz);
                           const Tensor& mv = t.value(im);
                           if (t.requires_grad(iz)) {
                             const Eigen::VectorXd rs = g.rowwise().sum();
                             Tensor gz = 2.0 * ((zv.array().colwise() * rs.array()).matrix() - g * mv);
                             t.accumulate(iz, gz);
                           }
                           if (t.requires_grad(im)) {
                             const Eigen::VectorXd cs = g.colwise().sum().transpose();
                             Tensor gm = 2.0 * ((mv.array().colwise() * cs.array()).matrix() -
                                                g.transpose() * zv);
                             t.accumulate(im, gm);
                           }
                         });
}

Var straight_through(Var x, Tensor forward) {
  ckm::require_same_shape(x.value(), forward, "straight_through");
  const std::size_t ix = x.id();
  return x.tape().record(std::move(forward), {x}, "straight_through",
                         [ix](Tape& t, std::size_t self) { t.accumulate(ix, t.grad(self)); });
}

}  // namespace ckm::ad
