// ckm: benchmark runner for concrete k-means and its baselines.
//
//   ckm run --config spec.json [--config more.json] [--seeds 0,1,2] [--out DIR]
//           [--format tsv|json|markdown] [--timing]
//   ckm generate --dataset twonorm|blobs|embedded_blobs --out data.csv [--n N] [--d D] ...
//   ckm eval --pred pred.txt --true truth.txt [--nmi-norm geometric|arithmetic|max]
//   ckm predict --checkpoint model.ckpt.json --config spec.json [--out labels.txt]

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "ckm/bench.hpp"
#include "ckm/concrete.hpp"
#include "ckm/data.hpp"
#include "ckm/deep.hpp"
#include "ckm/error.hpp"
#include "ckm/metrics.hpp"

namespace {

std::vector<std::uint64_t> parse_seed_list(const std::string& text) {
  std::vector<std::uint64_t> seeds;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    const auto dash = item.find('-');
    if (dash != std::string::npos && dash > 0) {
      // a-b inclusive range
      const auto lo = std::stoull(item.substr(0, dash));
      const auto hi = std::stoull(item.substr(dash + 1));
      for (auto s = lo; s <= hi; ++s) seeds.push_back(s);
    } else {
      seeds.push_back(std::stoull(item));
    }
  }
  if (seeds.empty()) throw ckm::ConfigError("--seeds: no seeds given");
  return seeds;
}

int cmd_run(const std::vector<std::string>& configs, const std::string& seeds,
            const std::string& out_dir, const std::string& format, bool timing) {
  const ckm::ReportFormat fmt = ckm::report_format_from_string(format);
  std::vector<ckm::MetricsReport> reports;
  for (const auto& path : configs) {
    ckm::RunSpec spec = ckm::load_run_spec(path);
    if (!seeds.empty()) spec.seeds = parse_seed_list(seeds);
    if (timing) spec.timing = true;
    std::cerr << "running " << ckm::to_string(spec.method) << " on "
              << spec.dataset.display_name() << " (" << spec.seeds.size() << " seeds, "
              << std::min(ckm::worker_count(), spec.seeds.size()) << " workers)\n";
    reports.push_back(ckm::run(spec));
  }
  if (out_dir.empty()) {
    std::cout << ckm::format_reports(reports, fmt);
    return 0;
  }
  std::filesystem::create_directories(out_dir);
  for (const auto& r : reports) {
    const auto path =
        std::filesystem::path(out_dir) / (r.method + "_" + r.dataset + ckm::extension(fmt));
    ckm::report_emit({r}, fmt, path.string());
    std::cerr << "wrote " << path.string() << '\n';
  }
  return 0;
}

int cmd_generate(const std::string& kind, const std::string& out, std::size_t n, std::size_t d,
                 std::size_t clusters, std::size_t n_per_cluster, double separation,
                 double spread, double noise, std::size_t intrinsic_dim, std::uint64_t seed) {
  ckm::DatasetSpec spec;
  spec.kind = kind;
  spec.n = n;
  spec.d = d;
  spec.clusters = clusters;
  spec.n_per_cluster = n_per_cluster;
  spec.separation = separation;
  spec.spread = spread;
  spec.noise = noise;
  spec.intrinsic_dim = intrinsic_dim;
  spec.seed = seed;
  spec.standardize = false;
  if (kind != "twonorm" && kind != "blobs" && kind != "embedded_blobs") {
    throw ckm::ConfigError("--dataset must be twonorm, blobs or embedded_blobs");
  }
  const ckm::Dataset data = ckm::load_dataset(spec);
  ckm::save_delimited(out, data);
  std::cerr << "wrote " << data.size() << " rows x " << data.dim() << " features (+label) to "
            << out << '\n';
  return 0;
}

int cmd_eval(const std::string& pred_path, const std::string& true_path,
             const std::string& norm) {
  const ckm::Labels pred = ckm::load_label_file(pred_path);
  const ckm::Labels truth = ckm::load_label_file(true_path);
  const ckm::Scores s = ckm::evaluate(truth, pred, ckm::nmi_normalization_from_string(norm));
  std::cout << "nmi\tari\tacc\n";
  std::cout.precision(17);
  std::cout << s.nmi << '\t' << s.ari << '\t' << s.acc << '\n';
  return 0;
}

int cmd_predict(const std::string& ckpt_path, const std::string& config, const std::string& out) {
  const ckm::Checkpoint ckpt = ckm::load_checkpoint(ckpt_path);
  const ckm::RunSpec spec = ckm::load_run_spec(config);
  const ckm::Dataset data = ckm::load_dataset(spec.dataset);
  const ckm::Labels labels =
      ckm::hard_assign(ckm::encode(ckpt.ae, data.X), ckpt.centroids.M, ckpt.config.sigma);
  std::ofstream file;
  if (!out.empty()) {
    file.open(out);
    if (!file) throw ckm::IoError("cannot write " + out);
  }
  std::ostream& os = out.empty() ? std::cout : file;
  for (int l : labels) os << l << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Concrete k-means: clustering by backpropagation through hard assignments"};
  app.require_subcommand(1);

  auto* run = app.add_subcommand("run", "Execute a multi-seed benchmark from a run spec");
  std::vector<std::string> configs;
  std::string seeds, out_dir, format = "tsv";
  bool timing = false;
  run->add_option("--config", configs, "Run spec (JSON); repeat to combine reports")
      ->required()
      ->check(CLI::ExistingFile);
  run->add_option("--seeds", seeds, "Comma list / ranges overriding the spec, e.g. 0-14");
  run->add_option("--out", out_dir, "Directory for report files (stdout when omitted)");
  run->add_option("--format", format, "tsv | json | markdown")
      ->check(CLI::IsMember({"tsv", "json", "markdown", "md"}));
  run->add_flag("--timing", timing, "Record wall-clock seconds per seed");

  auto* gen = app.add_subcommand("generate", "Write a synthetic dataset as CSV (label last)");
  std::string kind, gen_out;
  std::size_t n = 7400, d = 20, clusters = 4, per = 100, intrinsic = 10;
  double separation = 10.0, spread = 1.0, noise = 0.1;
  std::uint64_t gen_seed = 0;
  gen->add_option("--dataset", kind, "twonorm | blobs | embedded_blobs")->required();
  gen->add_option("--out", gen_out, "Output CSV path")->required();
  gen->add_option("--n", n, "Rows (twonorm)");
  gen->add_option("--d", d, "Features (ambient dimension for embedded_blobs)");
  gen->add_option("--clusters", clusters, "Blob count");
  gen->add_option("--n-per-cluster", per, "Rows per blob");
  gen->add_option("--separation", separation, "Scale of blob centres");
  gen->add_option("--spread", spread, "Blob standard deviation");
  gen->add_option("--noise", noise, "Ambient noise (embedded_blobs)");
  gen->add_option("--intrinsic-dim", intrinsic, "Blob dimension before embedding");
  gen->add_option("--seed", gen_seed, "Generator seed");

  auto* eval = app.add_subcommand("eval", "Score predicted labels against ground truth");
  std::string pred_path, true_path, norm = "geometric";
  eval->add_option("--pred", pred_path, "One predicted label per line")
      ->required()
      ->check(CLI::ExistingFile);
  eval->add_option("--true", true_path, "One true label per line")
      ->required()
      ->check(CLI::ExistingFile);
  eval->add_option("--nmi-norm", norm, "geometric | arithmetic | max");

  auto* predict = app.add_subcommand("predict", "Hard-assign a dataset with a deep checkpoint");
  std::string ckpt, pred_config, pred_out;
  predict->add_option("--checkpoint", ckpt, "Checkpoint written by a deep-ckm run")
      ->required()
      ->check(CLI::ExistingFile);
  predict->add_option("--config", pred_config, "Run spec whose dataset section is used")
      ->required()
      ->check(CLI::ExistingFile);
  predict->add_option("--out", pred_out, "Label file (stdout when omitted)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) return cmd_run(configs, seeds, out_dir, format, timing);
    if (*gen) {
      return cmd_generate(kind, gen_out, n, d, clusters, per, separation, spread, noise,
                          intrinsic, gen_seed);
    }
    if (*eval) return cmd_eval(pred_path, true_path, norm);
    if (*predict) return cmd_predict(ckpt, pred_config, pred_out);
  } catch (const std::exception& e) {
    std::cerr << "ckm: error: " << e.what() << '\n';
    return 1;
  }
  return 2;
}
