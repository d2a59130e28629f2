#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "ckm/tensor.hpp"

namespace ckm {

/// N x d feature matrix with optional ground-truth labels in [0, classes).
struct Dataset {
  Tensor X;
  std::optional<Labels> labels;
  std::string name;
  std::vector<std::string> feature_names;

  std::size_t size() const { return static_cast<std::size_t>(X.rows()); }
  std::size_t dim() const { return static_cast<std::size_t>(X.cols()); }
  /// Number of distinct labels (max + 1); 0 when unlabelled.
  std::size_t num_classes() const;
};

struct DelimitedOptions {
  char delimiter = ',';
  /// Column holding the class label; negative values count from the end
  /// (-1 is the last column).
  std::optional<int> label_column;
  bool header = false;
};

/// Parses a rectangular numeric table. Label cells may be any text and are
/// re-indexed densely from 0 (numeric order when every label parses as a
/// number, lexicographic otherwise).
Dataset load_delimited(const std::string& path, const DelimitedOptions& opts = {});
Dataset parse_delimited(const std::string& text, const DelimitedOptions& opts = {},
                        const std::string& name = "inline");

/// Writes features (and the label as the last column, when present) with 17
/// significant digits.
void save_delimited(const std::string& path, const Dataset& data, char delimiter = ',',
                    bool header = false);

/// Reads an IDX image file (magic 0x00000803) and label file (0x00000801).
/// Images are flattened row-major and scaled to [0, 1]. `limit` keeps only
/// the first rows.
Dataset load_idx(const std::string& images_path, const std::string& labels_path,
                 std::optional<std::size_t> limit = std::nullopt);

/// Per-feature affine map x -> (x - mean) / std; zero std is clamped to 1.
struct Standardization {
  Eigen::RowVectorXd mean;
  Eigen::RowVectorXd stddev;

  Tensor apply(const Tensor& X) const;
};

/// Centres every column and scales it to unit population std.
Standardization fit_standardization(const Tensor& X);
Tensor standardize(const Tensor& X, Standardization* fitted = nullptr);

/// Isotropic Gaussian blobs, `n_per_cluster` rows per centre, labelled by centre.
Dataset make_blobs(std::size_t n_per_cluster, const Tensor& centers, double spread, Rng& rng);

/// Breiman's twonorm: two unit-covariance Gaussians with means +/- a/sqrt(d)
/// in every coordinate (a = 2). N/2 rows per class.
Dataset make_twonorm(std::size_t n, std::size_t d, Rng& rng);

/// k well-separated blobs in `intrinsic_dim` dimensions, pushed through a
/// random linear map into `ambient_dim` dimensions plus isotropic noise.
Dataset make_embedded_blobs(std::size_t k, std::size_t n_per_cluster, std::size_t intrinsic_dim,
                            std::size_t ambient_dim, double separation, double noise, Rng& rng);

/// One label per line; blank lines are skipped. Labels are re-indexed densely.
Labels load_label_file(const std::string& path);

}  // namespace ckm
