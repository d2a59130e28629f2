#include "ckm/data.hpp"

#include <algorithm>
#include <array>
#include <cerrno>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <map>
#include <sstream>

#include "ckm/error.hpp"

namespace ckm {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& line, char delim) {
  std::vector<std::string> out;
  if (delim == ' ' || delim == '\t') {
    // Whitespace-delimited: runs of separators count once.
    std::istringstream is(line);
    std::string cell;
    if (delim == '\t') {
      while (std::getline(is, cell, '\t')) out.push_back(trim(cell));
    } else {
      while (is >> cell) out.push_back(cell);
    }
    return out;
  }
  std::string cell;
  std::istringstream is(line);
  while (std::getline(is, cell, delim)) out.push_back(trim(cell));
  if (!line.empty() && line.back() == delim) out.emplace_back();
  return out;
}

bool parse_double(const std::string& s, double& out) {
  if (s.empty()) return false;
  errno = 0;
  char* end = nullptr;
  out = std::strtod(s.c_str(), &end);
  return errno == 0 && end == s.c_str() + s.size() && std::isfinite(out);
}

/// Maps arbitrary label strings onto 0..C-1.
Labels reindex(const std::vector<std::string>& raw) {
  bool numeric = true;
  std::vector<double> values(raw.size());
  for (std::size_t i = 0; i < raw.size() && numeric; ++i) numeric = parse_double(raw[i], values[i]);

  Labels out(raw.size());
  if (numeric) {
    std::map<double, int> index;
    for (double v : values) index.emplace(v, 0);
    int next = 0;
    for (auto& [v, slot] : index) slot = next++;
    for (std::size_t i = 0; i < raw.size(); ++i) out[i] = index.at(values[i]);
  } else {
    std::map<std::string, int> index;
    for (const auto& s : raw) index.emplace(s, 0);
    int next = 0;
    for (auto& [s, slot] : index) slot = next++;
    for (std::size_t i = 0; i < raw.size(); ++i) out[i] = index.at(raw[i]);
  }
  return out;
}

std::uint32_t read_be32(std::istream& is, const std::string& path) {
  std::array<unsigned char, 4> b{};
  if (!is.read(reinterpret_cast<char*>(b.data()), 4)) {
    throw FormatError(path + ": truncated IDX header");
  }
  return (std::uint32_t{b[0]} << 24) | (std::uint32_t{b[1]} << 16) | (std::uint32_t{b[2]} << 8) |
         std::uint32_t{b[3]};
}

std::ifstream open_binary(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open " + path);
  return is;
}

}  // namespace

std::size_t Dataset::num_classes() const {
  if (!labels || labels->empty()) return 0;
  return static_cast<std::size_t>(*std::max_element(labels->begin(), labels->end())) + 1;
}

Dataset parse_delimited(const std::string& text, const DelimitedOptions& opts,
                        const std::string& name) {
  std::istringstream is(text);
  std::string line;
  std::size_t line_no = 0;
  std::vector<std::vector<std::string>> rows;
  std::vector<std::size_t> row_lines;
  std::vector<std::string> header;
  while (std::getline(is, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    auto cells = split(line, opts.delimiter);
    if (opts.header && header.empty() && rows.empty()) {
      header = std::move(cells);
      continue;
    }
    if (!rows.empty() && cells.size() != rows.front().size()) {
      throw ParseError(name + ":" + std::to_string(line_no) + ": expected " +
                       std::to_string(rows.front().size()) + " fields, found " +
                       std::to_string(cells.size()));
    }
    rows.push_back(std::move(cells));
    row_lines.push_back(line_no);
  }
  if (rows.empty()) throw ParseError(name + ": no data rows");

  const auto width = static_cast<int>(rows.front().size());
  std::optional<std::size_t> label_col;
  if (opts.label_column) {
    int c = *opts.label_column;
    if (c < 0) c += width;
    if (c < 0 || c >= width) {
      throw ParseError(name + ": label column " + std::to_string(*opts.label_column) +
                       " outside a " + std::to_string(width) + "-column table");
    }
    label_col = static_cast<std::size_t>(c);
  }
  const std::size_t features = rows.front().size() - (label_col ? 1 : 0);
  if (features == 0) throw ParseError(name + ": no feature columns");

  Dataset d;
  d.name = name;
  d.X.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(features));
  std::vector<std::string> raw_labels;
  for (std::size_t r = 0; r < rows.size(); ++r) {
    Eigen::Index out_c = 0;
    for (std::size_t c = 0; c < rows[r].size(); ++c) {
      if (label_col && c == *label_col) {
        raw_labels.push_back(rows[r][c]);
        continue;
      }
      double v = 0.0;
      if (!parse_double(rows[r][c], v)) {
        throw ParseError(name + ":" + std::to_string(row_lines[r]) + ": non-numeric field '" +
                         rows[r][c] + "' in column " + std::to_string(c));
      }
      d.X(static_cast<Eigen::Index>(r), out_c++) = v;
    }
  }
  if (label_col) d.labels = reindex(raw_labels);
  for (std::size_t c = 0; c < header.size(); ++c) {
    if (!label_col || c != *label_col) d.feature_names.push_back(header[c]);
  }
  return d;
}

Dataset load_delimited(const std::string& path, const DelimitedOptions& opts) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot open " + path);
  std::ostringstream buf;
  buf << is.rdbuf();
  return parse_delimited(buf.str(), opts, path);
}

void save_delimited(const std::string& path, const Dataset& data, char delimiter, bool header) {
  std::ofstream os(path);
  if (!os) throw IoError("cannot write " + path);
  os << std::setprecision(17);
  if (header) {
    for (Eigen::Index c = 0; c < data.X.cols(); ++c) {
      if (c > 0) os << delimiter;
      const auto idx = static_cast<std::size_t>(c);
      os << (idx < data.feature_names.size() ? data.feature_names[idx] : "x" + std::to_string(c));
    }
    if (data.labels) os << delimiter << "label";
    os << '\n';
  }
  for (Eigen::Index r = 0; r < data.X.rows(); ++r) {
    for (Eigen::Index c = 0; c < data.X.cols(); ++c) {
      if (c > 0) os << delimiter;
      os << data.X(r, c);
    }
    if (data.labels) os << delimiter << (*data.labels)[static_cast<std::size_t>(r)];
    os << '\n';
  }
  if (!os) throw IoError("write failed: " + path);
}

Dataset load_idx(const std::string& images_path, const std::string& labels_path,
                 std::optional<std::size_t> limit) {
  std::ifstream img = open_binary(images_path);
  if (read_be32(img, images_path) != 0x00000803u) {
    throw FormatError(images_path + ": bad magic, expected 0x00000803 (ubyte images)");
  }
  const std::uint32_t n_img = read_be32(img, images_path);
  const std::uint32_t rows = read_be32(img, images_path);
  const std::uint32_t cols = read_be32(img, images_path);

  std::ifstream lab = open_binary(labels_path);
  if (read_be32(lab, labels_path) != 0x00000801u) {
    throw FormatError(labels_path + ": bad magic, expected 0x00000801 (ubyte labels)");
  }
  const std::uint32_t n_lab = read_be32(lab, labels_path);
  if (n_img != n_lab) {
    throw InputError("IDX count mismatch: " + std::to_string(n_img) + " images vs " +
                     std::to_string(n_lab) + " labels");
  }

  std::size_t n = n_img;
  if (limit) n = std::min(n, *limit);
  const std::size_t d = static_cast<std::size_t>(rows) * cols;

  Dataset out;
  out.name = images_path;
  out.X.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d));
  std::vector<unsigned char> buf(d);
  for (std::size_t i = 0; i < n; ++i) {
    if (!img.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(d))) {
      throw FormatError(images_path + ": truncated at image " + std::to_string(i));
    }
    for (std::size_t j = 0; j < d; ++j) {
      out.X(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = buf[j] / 255.0;
    }
  }
  std::vector<unsigned char> lbuf(n);
  if (n > 0 && !lab.read(reinterpret_cast<char*>(lbuf.data()), static_cast<std::streamsize>(n))) {
    throw FormatError(labels_path + ": truncated label payload");
  }
  std::vector<std::string> raw(n);
  for (std::size_t i = 0; i < n; ++i) raw[i] = std::to_string(lbuf[i]);
  out.labels = reindex(raw);
  return out;
}

Tensor Standardization::apply(const Tensor& X) const {
  if (X.cols() != mean.size()) {
    throw DimensionError("Standardization::apply: " + shape_string(X) + " vs " +
                         std::to_string(mean.size()) + " fitted features");
  }
  return ((X.rowwise() - mean).array().rowwise() / stddev.array()).matrix();
}

Standardization fit_standardization(const Tensor& X) {
  if (X.rows() < 2) throw InputError("standardize: need at least two rows");
  Standardization s;
  s.mean = X.colwise().mean();
  s.stddev.resize(X.cols());
  const double n = static_cast<double>(X.rows());
  for (Eigen::Index c = 0; c < X.cols(); ++c) {
    const double var = (X.col(c).array() - s.mean(c)).square().sum() / n;
    const double sd = std::sqrt(var);
    s.stddev(c) = sd > 1e-12 * std::max(1.0, std::abs(s.mean(c))) ? sd : 1.0;
  }
  return s;
}

Tensor standardize(const Tensor& X, Standardization* fitted) {
  Standardization s = fit_standardization(X);
  Tensor out = s.apply(X);
  // Constant columns come out as exact zeros.
  for (Eigen::Index c = 0; c < X.cols(); ++c) {
    if (s.stddev(c) == 1.0 && (X.col(c).array() == X(0, c)).all()) out.col(c).setZero();
  }
  if (fitted != nullptr) *fitted = std::move(s);
  return out;
}

Dataset make_blobs(std::size_t n_per_cluster, const Tensor& centers, double spread, Rng& rng) {
  if (!(spread >= 0.0)) throw ConfigError("make_blobs: spread must be non-negative");
  Dataset d;
  d.name = "blobs";
  const auto k = static_cast<std::size_t>(centers.rows());
  d.X.resize(static_cast<Eigen::Index>(k * n_per_cluster), centers.cols());
  Labels labels;
  labels.reserve(k * n_per_cluster);
  Eigen::Index r = 0;
  for (std::size_t c = 0; c < k; ++c) {
    for (std::size_t i = 0; i < n_per_cluster; ++i, ++r) {
      for (Eigen::Index j = 0; j < centers.cols(); ++j) {
        d.X(r, j) = centers(static_cast<Eigen::Index>(c), j) + spread * rng.normal();
      }
      labels.push_back(static_cast<int>(c));
    }
  }
  d.labels = std::move(labels);
  return d;
}

Dataset make_twonorm(std::size_t n, std::size_t d, Rng& rng) {
  if (n % 2 != 0) throw InputError("make_twonorm: N must be even");
  if (d == 0) throw InputError("make_twonorm: d must be positive");
  const double a = 2.0 / std::sqrt(static_cast<double>(d));
  Tensor centers(2, static_cast<Eigen::Index>(d));
  centers.row(0).setConstant(a);
  centers.row(1).setConstant(-a);
  Dataset out = make_blobs(n / 2, centers, 1.0, rng);
  out.name = "twonorm";
  return out;
}

Dataset make_embedded_blobs(std::size_t k, std::size_t n_per_cluster, std::size_t intrinsic_dim,
                            std::size_t ambient_dim, double separation, double noise, Rng& rng) {
  Tensor centers(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(intrinsic_dim));
  for (Eigen::Index i = 0; i < centers.size(); ++i) centers.data()[i] = separation * rng.normal();
  Dataset low = make_blobs(n_per_cluster, centers, 1.0, rng);

  Tensor map(static_cast<Eigen::Index>(intrinsic_dim), static_cast<Eigen::Index>(ambient_dim));
  const double scale = 1.0 / std::sqrt(static_cast<double>(intrinsic_dim));
  for (Eigen::Index i = 0; i < map.size(); ++i) map.data()[i] = scale * rng.normal();

  Dataset out;
  out.name = "embedded_blobs";
  out.X = low.X * map;
  for (Eigen::Index i = 0; i < out.X.size(); ++i) out.X.data()[i] += noise * rng.normal();
  out.labels = std::move(low.labels);
  return out;
}

Labels load_label_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot open " + path);
  std::vector<std::string> raw;
  std::string line;
  while (std::getline(is, line)) {
    line = trim(line);
    if (!line.empty()) raw.push_back(line);
  }
  if (raw.empty()) throw ParseError(path + ": no labels");
  return reindex(raw);
}

}  // namespace ckm
