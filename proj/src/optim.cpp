#include "ckm/optim.hpp"

#include <cmath>

#include "ckm/error.hpp"

namespace ckm {

std::string to_string(OptimizerKind kind) { return kind == OptimizerKind::adam ? "adam" : "sgd"; }

OptimizerKind optimizer_from_string(const std::string& name) {
  if (name == "adam") return OptimizerKind::adam;
  if (name == "sgd") return OptimizerKind::sgd;
  throw ConfigError("unknown optimizer '" + name + "' (expected adam|sgd)");
}

void adam_step(Tensor& param, const Tensor& grad, AdamState& state, double lr,
               const AdamConfig& cfg) {
  require_same_shape(param, grad, "adam_step");
  if (state.step == 0 && state.m.size() == 0) {
    state.m = Tensor::Zero(param.rows(), param.cols());
    state.v = Tensor::Zero(param.rows(), param.cols());
  }
  require_same_shape(param, state.m, "adam_step state");
  ++state.step;
  state.m = cfg.beta1 * state.m + (1.0 - cfg.beta1) * grad;
  state.v = cfg.beta2 * state.v + (1.0 - cfg.beta2) * grad.cwiseProduct(grad);
  const double t = static_cast<double>(state.step);
  const double c1 = 1.0 - std::pow(cfg.beta1, t);
  const double c2 = 1.0 - std::pow(cfg.beta2, t);
  param.array() -= lr * (state.m.array() / c1) / ((state.v.array() / c2).sqrt() + cfg.epsilon);
}

void sgd_step(Tensor& param, const Tensor& grad, double lr) {
  require_same_shape(param, grad, "sgd_step");
  param -= lr * grad;
}

void optimizer_step(OptimizerKind kind, Tensor& param, const Tensor& grad, AdamState& state,
                    double lr) {
  if (kind == OptimizerKind::adam) {
    adam_step(param, grad, state, lr);
  } else {
    sgd_step(param, grad, lr);
  }
}

}  // namespace ckm
