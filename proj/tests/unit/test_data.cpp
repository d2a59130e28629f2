#include <doctest.h>

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <unistd.h>

#include "ckm/data.hpp"
#include "ckm/error.hpp"
#include "ckm/kmeans.hpp"
#include "ckm/metrics.hpp"

using namespace ckm;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() / ("ckm_data_test_" + std::to_string(::getpid()));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string file(const std::string& name) const { return (path / name).string(); }
};

void put_be32(std::ofstream& os, std::uint32_t v) {
  const unsigned char b[4] = {static_cast<unsigned char>(v >> 24), static_cast<unsigned char>(v >> 16),
                              static_cast<unsigned char>(v >> 8), static_cast<unsigned char>(v)};
  os.write(reinterpret_cast<const char*>(b), 4);
}

void write_idx_images(const std::string& path, std::uint32_t magic, std::uint32_t n,
                      std::uint32_t rows, std::uint32_t cols, std::size_t payload) {
  std::ofstream os(path, std::ios::binary);
  put_be32(os, magic);
  put_be32(os, n);
  put_be32(os, rows);
  put_be32(os, cols);
  for (std::size_t i = 0; i < payload; ++i) os.put(static_cast<char>((i * 37) % 256));
}

void write_idx_labels(const std::string& path, std::uint32_t magic, std::uint32_t n,
                      std::size_t payload) {
  std::ofstream os(path, std::ios::binary);
  put_be32(os, magic);
  put_be32(os, n);
  for (std::size_t i = 0; i < payload; ++i) os.put(static_cast<char>(i % 10));
}

}  // namespace

TEST_CASE("parse_delimited") {
  DelimitedOptions opts;
  opts.label_column = 2;
  const Dataset d = parse_delimited("1,2,a\n3,4,b\n", opts);
  CHECK(d.X == (Tensor(2, 2) << 1, 2, 3, 4).finished());
  CHECK(*d.labels == Labels{0, 1});

  CHECK_THROWS_AS(parse_delimited(""), ParseError);
  CHECK_THROWS_AS(parse_delimited("1,2\n3\n"), ParseError);
  CHECK_THROWS_AS(parse_delimited("1,x\n"), ParseError);
  try {
    parse_delimited("1,2\n3,4\n5\n");
  } catch (const ParseError& e) {
    CHECK(std::string(e.what()).find(":3:") != std::string::npos);
  }

  DelimitedOptions last;
  last.label_column = -1;
  last.header = true;
  last.delimiter = ';';
  const Dataset h = parse_delimited("f1;f2;class\n0.5;1;10\n2;3;2\n7;7;10\n", last);
  CHECK(h.feature_names == std::vector<std::string>{"f1", "f2"});
  CHECK(*h.labels == Labels{1, 0, 1});
  CHECK(h.num_classes() == 2);
}

TEST_CASE("delimited round trip keeps 12 significant digits") {
  TempDir tmp;
  Rng rng(1);
  Dataset d;
  d.X.resize(5, 3);
  for (Eigen::Index i = 0; i < d.X.size(); ++i) d.X.data()[i] = rng.normal() * 1e3;
  d.labels = Labels{0, 1, 2, 1, 0};
  save_delimited(tmp.file("rt.csv"), d);
  DelimitedOptions opts;
  opts.label_column = -1;
  const Dataset back = load_delimited(tmp.file("rt.csv"), opts);
  CHECK(((back.X - d.X).array().abs() <= 1e-12 * d.X.array().abs()).all());
  CHECK(*back.labels == *d.labels);
  CHECK_THROWS_AS(load_delimited(tmp.file("missing.csv")), IoError);
}

TEST_CASE("load_idx") {
  TempDir tmp;
  const auto img = tmp.file("img.idx"), lab = tmp.file("lab.idx");
  write_idx_images(img, 0x803, 6, 4, 3, 6 * 12);
  write_idx_labels(lab, 0x801, 6, 6);
  const Dataset d = load_idx(img, lab);
  CHECK(d.size() == 6);
  CHECK(d.dim() == 12);
  CHECK(d.X.minCoeff() >= 0.0);
  CHECK(d.X.maxCoeff() <= 1.0);
  CHECK(d.X(0, 1) == doctest::Approx(37.0 / 255.0));
  CHECK(*d.labels == Labels{0, 1, 2, 3, 4, 5});
  CHECK(load_idx(img, lab, 2).size() == 2);

  write_idx_images(tmp.file("bad.idx"), 0x801, 6, 4, 3, 72);
  CHECK_THROWS_AS(load_idx(tmp.file("bad.idx"), lab), FormatError);
  write_idx_labels(tmp.file("badlab.idx"), 0x803, 6, 6);
  CHECK_THROWS_AS(load_idx(img, tmp.file("badlab.idx")), FormatError);

  write_idx_images(tmp.file("short.idx"), 0x803, 6, 4, 3, 30);
  CHECK_THROWS_AS(load_idx(tmp.file("short.idx"), lab), FormatError);
  {
    std::ofstream os(tmp.file("stub.idx"), std::ios::binary);
    os.write("\0\0\x08", 3);
  }
  CHECK_THROWS_AS(load_idx(tmp.file("stub.idx"), lab), FormatError);

  write_idx_labels(tmp.file("five.idx"), 0x801, 5, 5);
  CHECK_THROWS_AS(load_idx(img, tmp.file("five.idx")), InputError);
}

TEST_CASE("standardize") {
  Tensor X(2, 2);
  X << 0, 5, 2, 5;
  Standardization s;
  const Tensor Z = standardize(X, &s);
  CHECK(Z(0, 0) == -1.0);
  CHECK(Z(1, 0) == 1.0);
  CHECK(Z.col(1).isZero(0));

  Rng rng(2);
  Tensor Y(50, 3);
  for (Eigen::Index i = 0; i < Y.size(); ++i) Y.data()[i] = 3.0 + 7.0 * rng.normal();
  const Tensor W = standardize(Y, &s);
  for (Eigen::Index c = 0; c < 3; ++c) {
    const double mean = W.col(c).mean();
    const double sd = std::sqrt((W.col(c).array() - mean).square().mean());
    CHECK(std::abs(mean) < 1e-9);
    CHECK(std::abs(sd - 1.0) < 1e-9);
  }

  Tensor held(2, 3);
  held << 1, 2, 3, 4, 5, 6;
  const Tensor a = s.apply(held);
  for (Eigen::Index c = 0; c < 3; ++c) {
    CHECK(a(0, c) == doctest::Approx((held(0, c) - s.mean(c)) / s.stddev(c)));
  }
  CHECK_THROWS_AS(standardize(Tensor::Zero(1, 3)), InputError);
}

TEST_CASE("generators") {
  Tensor centers(3, 2);
  centers << 0, 0, 30, 0, 0, 30;
  SUBCASE("zero spread collapses onto centres") {
    Rng rng(1);
    const Dataset d = make_blobs(4, centers, 0.0, rng);
    CHECK(d.size() == 12);
    for (Eigen::Index i = 0; i < 12; ++i) CHECK(d.X.row(i) == centers.row((*d.labels)[i]));
  }
  SUBCASE("reproducible and separable") {
    Rng a(5), b(5);
    const Dataset d = make_blobs(100, centers, 1.0, a);
    CHECK(d.X == make_blobs(100, centers, 1.0, b).X);
    const LloydResult r = lloyd_best_of(d.X, 3, LloydConfig{}, 0);
    CHECK(evaluate(*d.labels, r.labels).nmi > 0.99);
  }
  SUBCASE("twonorm") {
    Rng rng(3);
    const Dataset d = make_twonorm(20000, 20, rng);
    int ones = 0;
    for (int l : *d.labels) ones += l;
    CHECK(ones == 10000);
    const double a = 2.0 / std::sqrt(20.0);
    const Eigen::RowVectorXd m0 = d.X.topRows(10000).colwise().mean();
    const Eigen::RowVectorXd m1 = d.X.bottomRows(10000).colwise().mean();
    CHECK((m0.array() - a).abs().maxCoeff() < 0.05);
    CHECK((m1.array() + a).abs().maxCoeff() < 0.05);
    CHECK_THROWS_AS(make_twonorm(7, 2, rng), InputError);
  }
  SUBCASE("embedded blobs") {
    Rng rng(4);
    const Dataset d = make_embedded_blobs(4, 25, 10, 50, 3.0, 0.5, rng);
    CHECK(d.size() == 100);
    CHECK(d.dim() == 50);
    CHECK(d.num_classes() == 4);
    CHECK(d.X.allFinite());
  }
}

TEST_CASE("label files") {
  TempDir tmp;
  {
    std::ofstream os(tmp.file("l.txt"));
    os << "3\n1\n3\n\n7\n";
  }
  CHECK(load_label_file(tmp.file("l.txt")) == Labels{1, 0, 1, 2});
}
