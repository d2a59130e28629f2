#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace ckm {

/// Dense row-major 2-D tensor of 64-bit reals. Batches are rows.
using Tensor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Cluster / class ids, one per data row.
using Labels = std::vector<int>;

std::string shape_string(const Tensor& t);

/// Throws DimensionError naming both shapes unless `a` and `b` have equal shape.
void require_same_shape(const Tensor& a, const Tensor& b, const char* what);

/// Squared Euclidean distance between row `i` of `a` and row `j` of `b`.
double row_sq_distance(const Tensor& a, Eigen::Index i, const Tensor& b, Eigen::Index j);

/// Row-wise log-softmax with max subtraction.
Tensor log_softmax_rows(const Tensor& logits);

/// Mixes a base seed and a stream id into an independent 64-bit seed (splitmix64).
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream);

/// Seeded pseudo-random source. The sampling routines are written out here
/// rather than taken from <random> distributions so that streams are
/// identical across standard library implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform on [0, 1) with 53 bits of resolution.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  /// Standard normal (Box-Muller, caches the second variate).
  double normal();

  /// Uniform integer in [0, n).
  std::size_t index(std::size_t n);

  template <class T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::swap(v[i - 1], v[index(i)]);
    }
  }

 private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace ckm
