#pragma once

#include <cstdint>
#include <string>

#include "ckm/tensor.hpp"

namespace ckm {

enum class OptimizerKind { adam, sgd };

std::string to_string(OptimizerKind kind);
OptimizerKind optimizer_from_string(const std::string& name);

struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

/// First/second moment estimates for one parameter tensor.
struct AdamState {
  Tensor m;
  Tensor v;
  std::int64_t step = 0;
};

/// One bias-corrected Adam update of `param` in place. The state is sized
/// lazily on first use.
void adam_step(Tensor& param, const Tensor& grad, AdamState& state, double lr,
               const AdamConfig& cfg = {});

/// Plain gradient descent: param -= lr * grad.
void sgd_step(Tensor& param, const Tensor& grad, double lr);

/// Dispatches to adam_step or sgd_step.
void optimizer_step(OptimizerKind kind, Tensor& param, const Tensor& grad, AdamState& state,
                    double lr);

}  // namespace ckm
