#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "ckm/bench.hpp"
#include "ckm/concrete.hpp"
#include "ckm/data.hpp"
#include "ckm/deep.hpp"
#include "ckm/error.hpp"
#include "ckm/kmeans.hpp"
#include "ckm/metrics.hpp"
#include "ckm/shallow.hpp"

namespace py = pybind11;
using namespace ckm;

namespace {

py::tuple dataset_tuple(const Dataset& d) { return py::make_tuple(d.X, *d.labels); }

AnnealUnit anneal_unit_from_string(const std::string& s) {
  if (s == "epoch") return AnnealUnit::epoch;
  if (s == "step") return AnnealUnit::step;
  throw ConfigError("anneal_unit must be \"epoch\" or \"step\", got \"" + s + "\"");
}

std::string anneal_unit_name(AnnealUnit u) { return u == AnnealUnit::epoch ? "epoch" : "step"; }

// Shared by ShallowConfig and TrainConfig, which spell the schedule the same way.
template <class Config, class Class>
void bind_schedule_fields(Class& c) {
  c.def_readwrite("k", &Config::k)
      .def_readwrite("sigma", &Config::sigma)
      .def_readwrite("tau0", &Config::tau0)
      .def_readwrite("tau_min", &Config::tau_min)
      .def_readwrite("anneal_fraction", &Config::anneal_fraction)
      .def_readwrite("decay_rate", &Config::decay_rate)
      .def_readwrite("batch_size", &Config::batch_size)
      .def_readwrite("seed", &Config::seed)
      .def_property(
          "anneal_unit", [](const Config& cfg) { return anneal_unit_name(cfg.anneal_unit); },
          [](Config& cfg, const std::string& s) { cfg.anneal_unit = anneal_unit_from_string(s); })
      .def_property(
          "optimizer", [](const Config& cfg) { return to_string(cfg.optimizer); },
          [](Config& cfg, const std::string& s) { cfg.optimizer = optimizer_from_string(s); });
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Concrete k-means clustering";

  auto base = py::register_exception<Error>(m, "CkmError", PyExc_RuntimeError);
  py::register_exception<ConfigError>(m, "ConfigError", base.ptr());
  py::register_exception<InputError>(m, "InputError", base.ptr());

  py::class_<LloydResult>(m, "LloydResult")
      .def_property_readonly("centroids", [](const LloydResult& r) { return r.centroids.M; })
      .def_readonly("labels", &LloydResult::labels)
      .def_readonly("objective", &LloydResult::objective)
      .def_readonly("iterations", &LloydResult::iterations)
      .def_readonly("converged", &LloydResult::converged);

  m.def("kmeanspp_init",
        [](const Tensor& X, std::size_t k, std::uint64_t seed) {
          Rng rng(seed);
          return kmeanspp_init(X, k, rng).M;
        },
        py::arg("X"), py::arg("k"), py::arg("seed") = 0);
  m.def("lloyd",
        [](const Tensor& X, const Tensor& init, std::size_t max_iter) {
          return lloyd(X, CentroidSet{init}, max_iter);
        },
        py::arg("X"), py::arg("init"), py::arg("max_iter") = 300);
  m.def("lloyd_best_of",
        [](const Tensor& X, std::size_t k, std::size_t restarts, std::size_t max_iter,
           std::uint64_t seed) {
          LloydConfig cfg;
          cfg.restarts = restarts;
          cfg.max_iter = max_iter;
          return lloyd_best_of(X, k, cfg, seed);
        },
        py::arg("X"), py::arg("k"), py::arg("restarts") = 10, py::arg("max_iter") = 300,
        py::arg("seed") = 0);
  m.def("kmeans_objective",
        [](const Tensor& X, const Labels& labels, const Tensor& centroids) {
          return kmeans_objective(X, labels, CentroidSet{centroids});
        },
        py::arg("X"), py::arg("labels"), py::arg("centroids"));

  m.def("rbf_log_probs", py::overload_cast<const Tensor&, const Tensor&, double>(&rbf_log_probs),
        py::arg("Z"), py::arg("centroids"), py::arg("sigma") = 1.0);
  m.def("gumbel_sample",
        [](std::size_t n, std::size_t k, std::uint64_t seed) {
          Rng rng(seed);
          return gumbel_sample(n, k, rng);
        },
        py::arg("n"), py::arg("k"), py::arg("seed") = 0);
  m.def("hard_assign", &hard_assign, py::arg("Z"), py::arg("centroids"), py::arg("sigma") = 1.0);

  auto shallow = py::class_<ShallowConfig>(m, "ShallowConfig").def(py::init<>());
  bind_schedule_fields<ShallowConfig>(shallow);
  shallow.def_readwrite("lr", &ShallowConfig::lr)
      .def_readwrite("epochs", &ShallowConfig::epochs)
      .def_readwrite("restarts", &ShallowConfig::restarts);

  py::class_<ShallowResult, LloydResult>(m, "ShallowResult")
      .def_readonly("loss_history", &ShallowResult::loss_history)
      .def_readonly("restart", &ShallowResult::restart);
  m.def("shallow_ckm_fit", &shallow_ckm_fit, py::arg("X"), py::arg("config") = ShallowConfig{},
        py::call_guard<py::gil_scoped_release>());

  auto train = py::class_<TrainConfig>(m, "TrainConfig").def(py::init<>());
  bind_schedule_fields<TrainConfig>(train);
  train.def_readwrite("lambda_", &TrainConfig::lambda)
      .def_readwrite("pretrain_lr", &TrainConfig::pretrain_lr)
      .def_readwrite("joint_lr", &TrainConfig::joint_lr)
      .def_readwrite("pretrain_epochs", &TrainConfig::pretrain_epochs)
      .def_readwrite("joint_epochs", &TrainConfig::joint_epochs)
      .def_readwrite("init_restarts", &TrainConfig::init_restarts)
      .def_property(
          "encoder", [](const TrainConfig& cfg) { return cfg.encoder.widths; },
          [](TrainConfig& cfg, std::vector<std::size_t> widths) { cfg.encoder.widths = std::move(widths); })
      .def_property(
          "centroid_init", [](const TrainConfig& cfg) { return to_string(cfg.centroid_init); },
          [](TrainConfig& cfg, const std::string& s) { cfg.centroid_init = centroid_init_from_string(s); });

  py::class_<DeepResult>(m, "DeepResult")
      .def_property_readonly("centroids", [](const DeepResult& r) { return r.centroids.M; })
      .def_readonly("labels", &DeepResult::labels)
      .def_readonly("objective", &DeepResult::objective)
      .def_property_readonly("pretrain_loss", [](const DeepResult& r) { return r.history.pretrain_loss; })
      .def_property_readonly("joint_ae_loss", [](const DeepResult& r) { return r.history.joint_ae_loss; })
      .def_property_readonly("joint_ckm_loss", [](const DeepResult& r) { return r.history.joint_ckm_loss; })
      .def("encode", [](const DeepResult& r, const Tensor& X) { return encode(r.ae, X); }, py::arg("X"));
  m.def("train_ckm", &train_ckm, py::arg("X"), py::arg("config") = TrainConfig{},
        py::call_guard<py::gil_scoped_release>());
  m.def("ae_kmeans",
        [](const Tensor& X, const DeepResult& r, std::size_t k, std::uint64_t seed) {
          return ae_kmeans(X, r.ae, k, LloydConfig{}, seed);
        },
        py::arg("X"), py::arg("trained"), py::arg("k"), py::arg("seed") = 0,
        "Best-of-10 Lloyd on the latent codes of a trained model's encoder.");

  py::class_<Checkpoint>(m, "Checkpoint")
      .def_property_readonly("centroids", [](const Checkpoint& c) { return c.centroids.M; })
      .def_property_readonly("sigma", [](const Checkpoint& c) { return c.config.sigma; })
      .def("encode", [](const Checkpoint& c, const Tensor& X) { return encode(c.ae, X); }, py::arg("X"))
      .def("predict",
           [](const Checkpoint& c, const Tensor& X) {
             return hard_assign(encode(c.ae, X), c.centroids.M, c.config.sigma);
           },
           py::arg("X"));
  m.def("load_checkpoint", &load_checkpoint, py::arg("path"));
  m.def("save_checkpoint",
        [](const std::string& path, const DeepResult& r, const TrainConfig& cfg) {
          save_checkpoint(path, Checkpoint{cfg.encoder, r.ae, r.centroids, cfg});
        },
        py::arg("path"), py::arg("trained"), py::arg("config"));

  py::class_<Scores>(m, "Scores")
      .def_readonly("nmi", &Scores::nmi)
      .def_readonly("ari", &Scores::ari)
      .def_readonly("acc", &Scores::acc)
      .def("__repr__", [](const Scores& s) {
        return "Scores(nmi=" + std::to_string(s.nmi) + ", ari=" + std::to_string(s.ari) +
               ", acc=" + std::to_string(s.acc) + ")";
      });
  m.def("evaluate",
        [](const Labels& truth, const Labels& pred, const std::string& norm) {
          return evaluate(truth, pred, nmi_normalization_from_string(norm));
        },
        py::arg("truth"), py::arg("pred"), py::arg("nmi_norm") = "geometric");

  m.def("make_blobs",
        [](std::size_t n_per_cluster, const Tensor& centers, double spread, std::uint64_t seed) {
          Rng rng(seed);
          return dataset_tuple(make_blobs(n_per_cluster, centers, spread, rng));
        },
        py::arg("n_per_cluster"), py::arg("centers"), py::arg("spread") = 1.0, py::arg("seed") = 0);
  m.def("make_twonorm",
        [](std::size_t n, std::size_t d, std::uint64_t seed) {
          Rng rng(seed);
          return dataset_tuple(make_twonorm(n, d, rng));
        },
        py::arg("n") = 7400, py::arg("d") = 20, py::arg("seed") = 0);
  m.def("make_embedded_blobs",
        [](std::size_t k, std::size_t n_per_cluster, std::size_t intrinsic_dim, std::size_t ambient_dim,
           double separation, double noise, std::uint64_t seed) {
          Rng rng(seed);
          return dataset_tuple(
              make_embedded_blobs(k, n_per_cluster, intrinsic_dim, ambient_dim, separation, noise, rng));
        },
        py::arg("k"), py::arg("n_per_cluster"), py::arg("intrinsic_dim"), py::arg("ambient_dim"),
        py::arg("separation") = 3.0, py::arg("noise") = 0.5, py::arg("seed") = 0);
  m.def("standardize", [](const Tensor& X) { return standardize(X); }, py::arg("X"));

  m.def("run",
        [](const std::string& spec_json, const std::string& format) {
          const RunSpec spec = parse_run_spec(spec_json);
          const ReportFormat fmt = report_format_from_string(format);
          py::gil_scoped_release release;
          return format_report(run(spec), fmt);
        },
        py::arg("spec_json"), py::arg("format") = "tsv",
        "Runs a benchmark spec given as JSON text and returns the formatted report.");
}
