#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "ckm/tensor.hpp"

namespace ckm {

/// counts[c][j] = number of points with true class c and predicted cluster j.
/// Label values are mapped to dense row/column indices in ascending order.
struct ContingencyTable {
  std::vector<std::vector<std::size_t>> counts;
  std::size_t n = 0;

  std::size_t classes() const { return counts.size(); }
  std::size_t clusters() const { return counts.empty() ? 0 : counts.front().size(); }
};

ContingencyTable contingency(const Labels& truth, const Labels& pred);

enum class NmiNormalization { geometric, arithmetic, max };

std::string to_string(NmiNormalization norm);
NmiNormalization nmi_normalization_from_string(const std::string& name);

/// I(T;P) / norm(H(T), H(P)). 1 when both entropies vanish, 0 when exactly one does.
double nmi(const ContingencyTable& table, NmiNormalization norm = NmiNormalization::geometric);

/// Adjusted Rand index (pair counting). Requires N >= 2.
double ari(const ContingencyTable& table);

/// Cluster purity: sum over clusters of the majority class count, over N.
double purity(const ContingencyTable& table);

struct Scores {
  double nmi = 0.0;
  double ari = 0.0;
  double acc = 0.0;
};

Scores evaluate(const Labels& truth, const Labels& pred,
                NmiNormalization norm = NmiNormalization::geometric);

}  // namespace ckm
