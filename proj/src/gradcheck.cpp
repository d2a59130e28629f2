#include "ckm/gradcheck.hpp"

#include <algorithm>
#include <cmath>

#include "ckm/error.hpp"

namespace ckm {

Tensor finite_diff_grad(const ScalarFn& f, const Tensor& x, double h) {
  if (!(h > 0.0)) throw ConfigError("finite_diff_grad: step h must be positive");
  Tensor grad(x.rows(), x.cols());
  Tensor probe = x;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double orig = probe.data()[i];
    probe.data()[i] = orig + h;
    const double up = f(probe);
    probe.data()[i] = orig - h;
    const double down = f(probe);
    probe.data()[i] = orig;
    grad.data()[i] = (up - down) / (2.0 * h);
  }
  return grad;
}

double max_relative_error(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "max_relative_error");
  double worst = 0.0;
  for (Eigen::Index i = 0; i < a.size(); ++i) {
    const double x = a.data()[i], y = b.data()[i];
    const double denom = std::max({1.0, std::abs(x), std::abs(y)});
    worst = std::max(worst, std::abs(x - y) / denom);
  }
  return worst;
}

}  // namespace ckm
