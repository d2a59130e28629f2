#pragma once

#include <functional>

#include "ckm/tensor.hpp"

namespace ckm {

using ScalarFn = std::function<double(const Tensor&)>;

/// Central-difference gradient (f(x + h e_i) - f(x - h e_i)) / 2h per entry.
Tensor finite_diff_grad(const ScalarFn& f, const Tensor& x, double h = 1e-5);

/// max_i |a_i - b_i| / max(1, |a_i|, |b_i|). A scale-aware relative error
/// that degrades to absolute error near zero.
double max_relative_error(const Tensor& a, const Tensor& b);

}  // namespace ckm
