#include "ckm/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "ckm/error.hpp"

namespace ckm {

namespace {

std::map<int, std::size_t> dense_index(const Labels& labels) {
  std::map<int, std::size_t> index;
  for (int l : labels) index.emplace(l, 0);
  std::size_t next = 0;
  for (auto& [label, slot] : index) slot = next++;
  return index;
}

double comb2(double n) { return n * (n - 1.0) / 2.0; }

double entropy(const std::vector<double>& counts, double n) {
  double h = 0.0;
  for (double c : counts) {
    if (c > 0.0) h -= (c / n) * std::log(c / n);
  }
  return h;
}

}  // namespace

ContingencyTable contingency(const Labels& truth, const Labels& pred) {
  if (truth.size() != pred.size()) {
    throw InputError("contingency: label vectors differ in length (" +
                     std::to_string(truth.size()) + " vs " + std::to_string(pred.size()) + ")");
  }
  if (truth.empty()) throw InputError("contingency: empty label vectors");
  const auto rows = dense_index(truth);
  const auto cols = dense_index(pred);
  ContingencyTable t;
  t.n = truth.size();
  t.counts.assign(rows.size(), std::vector<std::size_t>(cols.size(), 0));
  for (std::size_t i = 0; i < truth.size(); ++i) {
    ++t.counts[rows.at(truth[i])][cols.at(pred[i])];
  }
  return t;
}

std::string to_string(NmiNormalization norm) {
  switch (norm) {
    case NmiNormalization::geometric:
      return "geometric";
    case NmiNormalization::arithmetic:
      return "arithmetic";
    case NmiNormalization::max:
      return "max";
  }
  return "geometric";
}

NmiNormalization nmi_normalization_from_string(const std::string& name) {
  if (name == "geometric" || name == "sqrt") return NmiNormalization::geometric;
  if (name == "arithmetic") return NmiNormalization::arithmetic;
  if (name == "max") return NmiNormalization::max;
  throw ConfigError("unknown NMI normalization '" + name + "'");
}

double nmi(const ContingencyTable& table, NmiNormalization norm) {
  if (table.n == 0) throw InputError("nmi: empty table");
  const double n = static_cast<double>(table.n);
  std::vector<double> row(table.classes(), 0.0), col(table.clusters(), 0.0);
  for (std::size_t c = 0; c < table.classes(); ++c) {
    for (std::size_t j = 0; j < table.clusters(); ++j) {
      row[c] += static_cast<double>(table.counts[c][j]);
      col[j] += static_cast<double>(table.counts[c][j]);
    }
  }
  const double ht = entropy(row, n);
  const double hp = entropy(col, n);
  if (ht == 0.0 && hp == 0.0) return 1.0;
  if (ht == 0.0 || hp == 0.0) return 0.0;

  double mi = 0.0;
  for (std::size_t c = 0; c < table.classes(); ++c) {
    for (std::size_t j = 0; j < table.clusters(); ++j) {
      const double nij = static_cast<double>(table.counts[c][j]);
      if (nij > 0.0) mi += (nij / n) * std::log(n * nij / (row[c] * col[j]));
    }
  }
  double denom = std::sqrt(ht * hp);
  if (norm == NmiNormalization::arithmetic) denom = 0.5 * (ht + hp);
  if (norm == NmiNormalization::max) denom = std::max(ht, hp);
  return std::clamp(mi / denom, 0.0, 1.0);
}

double ari(const ContingencyTable& table) {
  if (table.n < 2) throw InputError("ari: need at least two points");
  std::vector<double> row(table.classes(), 0.0), col(table.clusters(), 0.0);
  double index = 0.0;
  for (std::size_t c = 0; c < table.classes(); ++c) {
    for (std::size_t j = 0; j < table.clusters(); ++j) {
      const double nij = static_cast<double>(table.counts[c][j]);
      row[c] += nij;
      col[j] += nij;
      index += comb2(nij);
    }
  }
  double sum_rows = 0.0, sum_cols = 0.0;
  for (double a : row) sum_rows += comb2(a);
  for (double b : col) sum_cols += comb2(b);
  const double expected = sum_rows * sum_cols / comb2(static_cast<double>(table.n));
  const double max_index = 0.5 * (sum_rows + sum_cols);
  if (max_index == expected) return 1.0;
  return (index - expected) / (max_index - expected);
}

double purity(const ContingencyTable& table) {
  if (table.n == 0) throw InputError("purity: empty table");
  std::size_t majority = 0;
  for (std::size_t j = 0; j < table.clusters(); ++j) {
    std::size_t best = 0;
    for (std::size_t c = 0; c < table.classes(); ++c) best = std::max(best, table.counts[c][j]);
    majority += best;
  }
  return static_cast<double>(majority) / static_cast<double>(table.n);
}

Scores evaluate(const Labels& truth, const Labels& pred, NmiNormalization norm) {
  const ContingencyTable t = contingency(truth, pred);
  Scores s;
  s.nmi = nmi(t, norm);
  s.ari = t.n >= 2 ? ari(t) : 1.0;
  s.acc = purity(t);
  return s;
}

}  // namespace ckm
