#include "ckm/bench.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <sstream>
#include <thread>

#include "ckm/error.hpp"
#include "json_io.hpp"

namespace ckm {

using json_io::json;

namespace {

std::string fmt(const char* pattern, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, pattern, v);
  return buf;
}

std::string exact(double v) { return fmt("%.17g", v); }

std::string read_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot open " + path);
  std::ostringstream buf;
  buf << is.rdbuf();
  return buf.str();
}

char delimiter_from(const json& j) {
  const std::string s = j.get<std::string>();
  if (s == "\\t" || s == "\t" || s == "tab") return '\t';
  if (s == "space" || s == " ") return ' ';
  if (s.size() != 1) throw ConfigError("dataset.delimiter must be a single character");
  return s[0];
}

DatasetSpec dataset_from_json(const json& j) {
  json_io::reject_unknown_keys(
      j,
      {"kind", "name", "path", "delimiter", "label_column", "header", "images", "labels", "limit",
       "n", "d", "clusters", "n_per_cluster", "separation", "spread", "noise", "intrinsic_dim",
       "seed", "standardize"},
      "dataset");
  DatasetSpec d;
  if (j.contains("kind")) d.kind = j["kind"].get<std::string>();
  if (j.contains("name")) d.name = j["name"].get<std::string>();
  if (j.contains("path")) d.path = j["path"].get<std::string>();
  if (j.contains("delimiter")) d.delimiter = delimiter_from(j["delimiter"]);
  if (j.contains("label_column")) {
    if (j["label_column"].is_null()) {
      d.label_column.reset();
    } else {
      d.label_column = j["label_column"].get<int>();
    }
  }
  if (j.contains("header")) d.header = j["header"].get<bool>();
  if (j.contains("images")) d.images = j["images"].get<std::string>();
  if (j.contains("labels")) d.labels = j["labels"].get<std::string>();
  if (j.contains("limit")) d.limit = j["limit"].get<std::size_t>();
  if (j.contains("n")) d.n = j["n"].get<std::size_t>();
  if (j.contains("d")) d.d = j["d"].get<std::size_t>();
  if (j.contains("clusters")) d.clusters = j["clusters"].get<std::size_t>();
  if (j.contains("n_per_cluster")) d.n_per_cluster = j["n_per_cluster"].get<std::size_t>();
  if (j.contains("separation")) d.separation = j["separation"].get<double>();
  if (j.contains("spread")) d.spread = j["spread"].get<double>();
  if (j.contains("noise")) d.noise = j["noise"].get<double>();
  if (j.contains("intrinsic_dim")) d.intrinsic_dim = j["intrinsic_dim"].get<std::size_t>();
  if (j.contains("seed")) d.seed = j["seed"].get<std::uint64_t>();
  if (j.contains("standardize")) d.standardize = j["standardize"].get<bool>();
  return d;
}

json dataset_to_json(const DatasetSpec& d) {
  json j{{"kind", d.kind}};
  if (!d.name.empty()) j["name"] = d.name;
  if (d.kind == "csv") {
    j["path"] = d.path;
    j["delimiter"] = d.delimiter == '\t' ? std::string("\\t") : std::string(1, d.delimiter);
    j["label_column"] = d.label_column ? json(*d.label_column) : json(nullptr);
    j["header"] = d.header;
  } else if (d.kind == "idx") {
    j["images"] = d.images;
    j["labels"] = d.labels;
    if (d.limit) j["limit"] = *d.limit;
  } else {
    j["n"] = d.n;
    j["d"] = d.d;
    j["clusters"] = d.clusters;
    j["n_per_cluster"] = d.n_per_cluster;
    j["separation"] = d.separation;
    j["spread"] = d.spread;
    j["noise"] = d.noise;
    j["intrinsic_dim"] = d.intrinsic_dim;
    j["seed"] = d.seed;
  }
  if (d.standardize) j["standardize"] = *d.standardize;
  return j;
}

json stat_to_json(const Stat& s) { return json{{"mean", s.mean}, {"std", s.std}}; }
Stat stat_from_json(const json& j) { return {j.at("mean").get<double>(), j.at("std").get<double>()}; }

json report_to_json(const MetricsReport& r) {
  json rows = json::array();
  for (const SeedRow& s : r.rows) {
    rows.push_back({{"seed", s.seed},
                    {"nmi", s.nmi},
                    {"ari", s.ari},
                    {"acc", s.acc},
                    {"objective", s.objective},
                    {"seconds", s.seconds ? json(*s.seconds) : json(nullptr)}});
  }
  json summary{{"nmi", stat_to_json(r.summary.nmi)},
               {"ari", stat_to_json(r.summary.ari)},
               {"acc", stat_to_json(r.summary.acc)},
               {"objective", stat_to_json(r.summary.objective)},
               {"seconds", r.summary.seconds ? stat_to_json(*r.summary.seconds) : json(nullptr)}};
  return json{{"method", r.method}, {"dataset", r.dataset}, {"rows", rows}, {"summary", summary}};
}

MetricsReport report_from_json(const json& j) {
  MetricsReport r;
  r.method = j.at("method").get<std::string>();
  r.dataset = j.at("dataset").get<std::string>();
  for (const json& row : j.at("rows")) {
    SeedRow s;
    s.seed = row.at("seed").get<std::uint64_t>();
    s.nmi = row.at("nmi").get<double>();
    s.ari = row.at("ari").get<double>();
    s.acc = row.at("acc").get<double>();
    s.objective = row.at("objective").get<double>();
    if (!row.at("seconds").is_null()) s.seconds = row["seconds"].get<double>();
    r.rows.push_back(s);
  }
  const json& sm = j.at("summary");
  r.summary.nmi = stat_from_json(sm.at("nmi"));
  r.summary.ari = stat_from_json(sm.at("ari"));
  r.summary.acc = stat_from_json(sm.at("acc"));
  r.summary.objective = stat_from_json(sm.at("objective"));
  if (!sm.at("seconds").is_null()) r.summary.seconds = stat_from_json(sm["seconds"]);
  return r;
}

std::string pm(const Stat& s, const char* pattern, double scale) {
  return fmt(pattern, s.mean * scale) + "±" + fmt(pattern, s.std * scale);
}

}  // namespace

// --- enums -----------------------------------------------------------------

std::string to_string(Method m) {
  switch (m) {
    case Method::km:
      return "km";
    case Method::shallow_ckm:
      return "shallow-ckm";
    case Method::ae_km:
      return "ae-km";
    case Method::deep_ckm:
      return "deep-ckm";
  }
  return "km";
}

Method method_from_string(const std::string& name) {
  if (name == "km") return Method::km;
  if (name == "shallow-ckm") return Method::shallow_ckm;
  if (name == "ae-km") return Method::ae_km;
  if (name == "deep-ckm") return Method::deep_ckm;
  throw ConfigError("unknown method '" + name + "' (expected km|shallow-ckm|ae-km|deep-ckm)");
}

ReportFormat report_format_from_string(const std::string& name) {
  if (name == "tsv") return ReportFormat::tsv;
  if (name == "json") return ReportFormat::json;
  if (name == "markdown" || name == "md") return ReportFormat::markdown;
  throw ConfigError("unknown report format '" + name + "' (expected tsv|json|markdown)");
}

std::string extension(ReportFormat f) {
  switch (f) {
    case ReportFormat::tsv:
      return ".tsv";
    case ReportFormat::json:
      return ".json";
    case ReportFormat::markdown:
      return ".md";
  }
  return ".txt";
}

// --- specs -----------------------------------------------------------------

std::string DatasetSpec::display_name() const {
  if (!name.empty()) return name;
  if (kind == "csv") return std::filesystem::path(path).stem().string();
  if (kind == "idx") return std::filesystem::path(images).stem().string();
  return kind;
}

void RunSpec::validate() const {
  if (seeds.empty()) throw ConfigError("run spec: at least one seed required");
  if (k && *k == 0) throw ConfigError("run spec: k must be positive");
  if (kmeans.restarts == 0 || kmeans.max_iter == 0) {
    throw ConfigError("run spec: kmeans.restarts and kmeans.max_iter must be positive");
  }
  shallow.validate();
  deep.validate();
}

RunSpec parse_run_spec(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("run spec: ") + e.what());
  }
  try {
    json_io::reject_unknown_keys(j,
                                 {"method", "dataset", "k", "seeds", "shallow", "deep", "kmeans",
                                  "nmi_norm", "timing", "checkpoint_dir"},
                                 "run spec");
    RunSpec s;
    if (!j.contains("method")) throw ConfigError("run spec: 'method' is required");
    if (!j.contains("dataset")) throw ConfigError("run spec: 'dataset' is required");
    s.method = method_from_string(j["method"].get<std::string>());
    s.dataset = dataset_from_json(j["dataset"]);
    if (j.contains("k")) s.k = j["k"].get<std::size_t>();
    if (j.contains("seeds")) {
      const json& sd = j["seeds"];
      s.seeds.clear();
      if (sd.is_number_integer()) {
        // "seeds": 15 means 0..14.
        for (std::uint64_t i = 0; i < sd.get<std::uint64_t>(); ++i) s.seeds.push_back(i);
      } else {
        s.seeds = sd.get<std::vector<std::uint64_t>>();
      }
    }
    if (j.contains("shallow")) s.shallow = json_io::shallow_from_json(j["shallow"]);
    if (j.contains("deep")) s.deep = json_io::train_from_json(j["deep"]);
    if (j.contains("kmeans")) {
      const json& km = j["kmeans"];
      json_io::reject_unknown_keys(km, {"restarts", "max_iter"}, "kmeans");
      if (km.contains("restarts")) s.kmeans.restarts = km["restarts"].get<std::size_t>();
      if (km.contains("max_iter")) s.kmeans.max_iter = km["max_iter"].get<std::size_t>();
    }
    if (j.contains("nmi_norm")) s.nmi_norm = nmi_normalization_from_string(j["nmi_norm"]);
    if (j.contains("timing")) s.timing = j["timing"].get<bool>();
    if (j.contains("checkpoint_dir")) s.checkpoint_dir = j["checkpoint_dir"].get<std::string>();
    s.validate();
    return s;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("run spec: ") + e.what());
  }
}

RunSpec load_run_spec(const std::string& path) { return parse_run_spec(read_file(path)); }

std::string run_spec_to_json(const RunSpec& s) {
  json j{{"method", to_string(s.method)},
         {"dataset", dataset_to_json(s.dataset)},
         {"seeds", s.seeds},
         {"shallow", json_io::to_json(s.shallow)},
         {"deep", json_io::to_json(s.deep)},
         {"kmeans", {{"restarts", s.kmeans.restarts}, {"max_iter", s.kmeans.max_iter}}},
         {"nmi_norm", to_string(s.nmi_norm)},
         {"timing", s.timing}};
  if (s.k) j["k"] = *s.k;
  if (!s.checkpoint_dir.empty()) j["checkpoint_dir"] = s.checkpoint_dir;
  return j.dump(2);
}

// --- data ------------------------------------------------------------------

Dataset load_dataset(const DatasetSpec& spec) {
  Dataset d;
  bool standardize_default = true;
  if (spec.kind == "csv") {
    if (spec.path.empty()) throw ConfigError("dataset: csv requires 'path'");
    DelimitedOptions o;
    o.delimiter = spec.delimiter;
    o.label_column = spec.label_column;
    o.header = spec.header;
    d = load_delimited(spec.path, o);
  } else if (spec.kind == "idx") {
    if (spec.images.empty() || spec.labels.empty()) {
      throw ConfigError("dataset: idx requires 'images' and 'labels'");
    }
    d = load_idx(spec.images, spec.labels, spec.limit);
    standardize_default = false;
  } else if (spec.kind == "twonorm") {
    Rng rng(spec.seed);
    d = make_twonorm(spec.n, spec.d, rng);
  } else if (spec.kind == "blobs") {
    Rng rng(spec.seed);
    Tensor centers(static_cast<Eigen::Index>(spec.clusters), static_cast<Eigen::Index>(spec.d));
    for (Eigen::Index i = 0; i < centers.size(); ++i) {
      centers.data()[i] = spec.separation * rng.normal();
    }
    d = make_blobs(spec.n_per_cluster, centers, spec.spread, rng);
  } else if (spec.kind == "embedded_blobs") {
    Rng rng(spec.seed);
    d = make_embedded_blobs(spec.clusters, spec.n_per_cluster, spec.intrinsic_dim, spec.d,
                            spec.separation, spec.noise, rng);
  } else {
    throw ConfigError("dataset: unknown kind '" + spec.kind +
                      "' (expected csv|idx|twonorm|blobs|embedded_blobs)");
  }
  if (spec.standardize.value_or(standardize_default)) d.X = standardize(d.X);
  d.name = spec.display_name();
  return d;
}

// --- running ---------------------------------------------------------------

Stat summarize(const std::vector<double>& values) {
  Stat s;
  if (values.empty()) return s;
  double sum = 0.0;
  for (double v : values) sum += v;
  s.mean = sum / static_cast<double>(values.size());
  if (values.size() > 1) {
    double ss = 0.0;
    for (double v : values) ss += (v - s.mean) * (v - s.mean);
    s.std = std::sqrt(ss / static_cast<double>(values.size() - 1));
  }
  return s;
}

Aggregate aggregate(const std::vector<SeedRow>& rows) {
  std::vector<double> nmi, ari, acc, obj, sec;
  bool timed = !rows.empty();
  for (const SeedRow& r : rows) {
    nmi.push_back(r.nmi);
    ari.push_back(r.ari);
    acc.push_back(r.acc);
    obj.push_back(r.objective);
    if (r.seconds) {
      sec.push_back(*r.seconds);
    } else {
      timed = false;
    }
  }
  Aggregate a;
  a.nmi = summarize(nmi);
  a.ari = summarize(ari);
  a.acc = summarize(acc);
  a.objective = summarize(obj);
  if (timed) a.seconds = summarize(sec);
  return a;
}

std::size_t worker_count() {
  if (const char* env = std::getenv("CKM_WORKERS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && v > 0) return static_cast<std::size_t>(v);
    throw ConfigError(std::string("CKM_WORKERS must be a positive integer, got '") + env + "'");
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

SeedRow run_seed(const RunSpec& spec, const Dataset& data, std::size_t k, std::uint64_t seed) {
  const auto start = std::chrono::steady_clock::now();
  Labels pred;
  double objective = 0.0;
  switch (spec.method) {
    case Method::km: {
      LloydResult r = lloyd_best_of(data.X, k, spec.kmeans, seed);
      pred = std::move(r.labels);
      objective = r.objective;
      break;
    }
    case Method::shallow_ckm: {
      ShallowConfig cfg = spec.shallow;
      cfg.k = k;
      cfg.seed = seed;
      ShallowResult r = shallow_ckm_fit(data.X, cfg);
      pred = std::move(r.labels);
      objective = r.objective;
      break;
    }
    case Method::ae_km: {
      TrainConfig cfg = spec.deep;
      cfg.k = k;
      cfg.seed = seed;
      const Autoencoder ae = pretrain(data.X, cfg);
      LloydResult r = ae_kmeans(data.X, ae, k, spec.kmeans, seed);
      pred = std::move(r.labels);
      objective = r.objective;
      break;
    }
    case Method::deep_ckm: {
      TrainConfig cfg = spec.deep;
      cfg.k = k;
      cfg.seed = seed;
      DeepResult r = train_ckm(data.X, cfg);
      if (!spec.checkpoint_dir.empty()) {
        std::filesystem::create_directories(spec.checkpoint_dir);
        const auto path = std::filesystem::path(spec.checkpoint_dir) /
                          (data.name + "_seed" + std::to_string(seed) + ".ckpt.json");
        save_checkpoint(path.string(), Checkpoint{cfg.encoder, r.ae, r.centroids, cfg});
      }
      pred = std::move(r.labels);
      objective = r.objective;
      break;
    }
  }
  const Scores s = evaluate(*data.labels, pred, spec.nmi_norm);
  SeedRow row;
  row.seed = seed;
  row.nmi = s.nmi;
  row.ari = s.ari;
  row.acc = s.acc;
  row.objective = objective;
  if (spec.timing) {
    row.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  }
  return row;
}

MetricsReport run(const RunSpec& spec, const Dataset* preloaded) {
  spec.validate();
  Dataset owned;
  if (preloaded == nullptr) owned = load_dataset(spec.dataset);
  const Dataset& data = preloaded != nullptr ? *preloaded : owned;
  if (!data.labels) {
    throw InputError("dataset '" + data.name + "' has no labels; metrics cannot be computed");
  }
  const std::size_t k = spec.k.value_or(data.num_classes());
  if (k == 0) throw ConfigError("run spec: k not given and dataset has no classes");

  MetricsReport report;
  report.method = to_string(spec.method);
  report.dataset = data.name;
  report.rows.resize(spec.seeds.size());

  const std::size_t workers = std::min(worker_count(), spec.seeds.size());
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mu;
  auto work = [&] {
    for (std::size_t i = next++; i < spec.seeds.size(); i = next++) {
      try {
        report.rows[i] = run_seed(spec, data, k, spec.seeds[i]);
      } catch (...) {
        std::lock_guard<std::mutex> lock(failure_mu);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  if (workers <= 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(work);
    for (auto& t : pool) t.join();
  }
  if (failure) std::rethrow_exception(failure);
  report.summary = aggregate(report.rows);
  return report;
}

// --- reports ---------------------------------------------------------------

std::string format_reports(const std::vector<MetricsReport>& reports, ReportFormat f) {
  std::ostringstream os;
  if (f == ReportFormat::json) {
    if (reports.size() == 1) return report_to_json(reports.front()).dump(2) + "\n";
    json arr = json::array();
    for (const auto& r : reports) arr.push_back(report_to_json(r));
    return arr.dump(2) + "\n";
  }
  if (f == ReportFormat::tsv) {
    os << "method\tdataset\tseed\tnmi\tari\tacc\tobjective\tseconds\n";
    for (const auto& r : reports) {
      for (const SeedRow& s : r.rows) {
        os << r.method << '\t' << r.dataset << '\t' << s.seed << '\t' << exact(s.nmi) << '\t'
           << exact(s.ari) << '\t' << exact(s.acc) << '\t' << exact(s.objective) << '\t'
           << (s.seconds ? exact(*s.seconds) : "NA") << '\n';
      }
      const Aggregate& a = r.summary;
      os << r.method << '\t' << r.dataset << '\t' << "mean±std" << '\t'
         << pm(a.nmi, "%.17g", 1.0) << '\t' << pm(a.ari, "%.17g", 1.0) << '\t'
         << pm(a.acc, "%.17g", 1.0) << '\t' << pm(a.objective, "%.17g", 1.0) << '\t'
         << (a.seconds ? pm(*a.seconds, "%.17g", 1.0) : "NA") << '\n';
    }
    return os.str();
  }
  os << "| Method | Dataset | Seeds | NMI | ARI | ACC | Objective |\n";
  os << "|---|---|---|---|---|---|---|\n";
  for (const auto& r : reports) {
    const Aggregate& a = r.summary;
    os << "| " << r.method << " | " << r.dataset << " | " << r.rows.size() << " | "
       << pm(a.nmi, "%.1f", 100.0) << " | " << pm(a.ari, "%.1f", 100.0) << " | "
       << pm(a.acc, "%.1f", 100.0) << " | " << pm(a.objective, "%.6g", 1.0) << " |\n";
  }
  return os.str();
}

std::string format_report(const MetricsReport& report, ReportFormat f) {
  return format_reports({report}, f);
}

void report_emit(const std::vector<MetricsReport>& reports, ReportFormat f,
                 const std::string& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("cannot write report to " + path);
  os << format_reports(reports, f);
  if (!os) throw IoError("write failed: " + path);
}

std::vector<MetricsReport> reports_from_json(const std::string& text) {
  try {
    const json j = json::parse(text);
    std::vector<MetricsReport> out;
    if (j.is_array()) {
      for (const json& r : j) out.push_back(report_from_json(r));
    } else {
      out.push_back(report_from_json(j));
    }
    return out;
  } catch (const json::exception& e) {
    throw FormatError(std::string("report: ") + e.what());
  }
}

}  // namespace ckm
