#include <fstream>
#include <sstream>

#include "ckm/deep.hpp"
#include "ckm/error.hpp"
#include "json_io.hpp"

namespace ckm {

namespace json_io {

void reject_unknown_keys(const json& j, std::initializer_list<const char*> allowed,
                         const std::string& section) {
  if (!j.is_object()) throw ConfigError(section + ": expected an object");
  for (const auto& [key, value] : j.items()) {
    bool ok = false;
    for (const char* a : allowed) ok = ok || key == a;
    if (!ok) throw ConfigError(section + ": unknown key '" + key + "'");
  }
}

json tensor_to_json(const Tensor& t) {
  json data = json::array();
  for (Eigen::Index i = 0; i < t.size(); ++i) data.push_back(t.data()[i]);
  return json{{"rows", t.rows()}, {"cols", t.cols()}, {"data", std::move(data)}};
}

Tensor tensor_from_json(const json& j) {
  const auto rows = j.at("rows").get<Eigen::Index>();
  const auto cols = j.at("cols").get<Eigen::Index>();
  const json& data = j.at("data");
  if (rows < 0 || cols < 0 || static_cast<Eigen::Index>(data.size()) != rows * cols) {
    throw FormatError("tensor: data length does not match " + std::to_string(rows) + "x" +
                      std::to_string(cols));
  }
  Tensor t(rows, cols);
  for (Eigen::Index i = 0; i < t.size(); ++i) t.data()[i] = data[static_cast<std::size_t>(i)].get<double>();
  return t;
}

json mlp_to_json(const Mlp& mlp) {
  json layers = json::array();
  for (const DenseLayer& l : mlp.layers()) {
    layers.push_back({{"weight", tensor_to_json(l.weight)}, {"bias", tensor_to_json(l.bias)}});
  }
  return layers;
}

Mlp mlp_from_json(const json& j) {
  std::vector<DenseLayer> layers;
  for (const json& l : j) {
    layers.push_back({tensor_from_json(l.at("weight")), tensor_from_json(l.at("bias"))});
  }
  return Mlp(std::move(layers));
}

std::string to_string(AnnealUnit unit) { return unit == AnnealUnit::epoch ? "epoch" : "step"; }

AnnealUnit anneal_unit_from_string(const std::string& name) {
  if (name == "epoch") return AnnealUnit::epoch;
  if (name == "step") return AnnealUnit::step;
  throw ConfigError("unknown anneal unit '" + name + "' (expected epoch|step)");
}

json to_json(const ShallowConfig& c) {
  json j{{"k", c.k},
         {"sigma", c.sigma},
         {"tau0", c.tau0},
         {"tau_min", c.tau_min},
         {"anneal_fraction", c.anneal_fraction},
         {"anneal_unit", to_string(c.anneal_unit)},
         {"optimizer", ckm::to_string(c.optimizer)},
         {"lr", c.lr},
         {"batch_size", c.batch_size},
         {"epochs", c.epochs},
         {"seed", c.seed},
         {"restarts", c.restarts}};
  if (c.decay_rate) j["decay_rate"] = *c.decay_rate;
  return j;
}

ShallowConfig shallow_from_json(const json& j, ShallowConfig c) {
  reject_unknown_keys(j,
                      {"k", "sigma", "tau0", "tau_min", "anneal_fraction", "decay_rate",
                       "anneal_unit", "optimizer", "lr", "batch_size", "epochs", "seed", "restarts"},
                      "shallow");
  if (j.contains("k")) c.k = j["k"].get<std::size_t>();
  if (j.contains("sigma")) c.sigma = j["sigma"].get<double>();
  if (j.contains("tau0")) c.tau0 = j["tau0"].get<double>();
  if (j.contains("tau_min")) c.tau_min = j["tau_min"].get<double>();
  if (j.contains("anneal_fraction")) c.anneal_fraction = j["anneal_fraction"].get<double>();
  if (j.contains("decay_rate")) c.decay_rate = j["decay_rate"].get<double>();
  if (j.contains("anneal_unit")) c.anneal_unit = anneal_unit_from_string(j["anneal_unit"]);
  if (j.contains("optimizer")) c.optimizer = optimizer_from_string(j["optimizer"]);
  if (j.contains("lr")) c.lr = j["lr"].get<double>();
  if (j.contains("batch_size")) c.batch_size = j["batch_size"].get<std::size_t>();
  if (j.contains("epochs")) c.epochs = j["epochs"].get<std::size_t>();
  if (j.contains("seed")) c.seed = j["seed"].get<std::uint64_t>();
  if (j.contains("restarts")) c.restarts = j["restarts"].get<std::size_t>();
  return c;
}

json to_json(const TrainConfig& c) {
  json j{{"k", c.k},
         {"sigma", c.sigma},
         {"tau0", c.tau0},
         {"tau_min", c.tau_min},
         {"anneal_fraction", c.anneal_fraction},
         {"anneal_unit", to_string(c.anneal_unit)},
         {"lambda", c.lambda},
         {"pretrain_lr", c.pretrain_lr},
         {"joint_lr", c.joint_lr},
         {"optimizer", ckm::to_string(c.optimizer)},
         {"batch_size", c.batch_size},
         {"pretrain_epochs", c.pretrain_epochs},
         {"joint_epochs", c.joint_epochs},
         {"seed", c.seed},
         {"encoder", c.encoder.widths},
         {"centroid_init", ckm::to_string(c.centroid_init)},
         {"init_restarts", c.init_restarts}};
  if (c.decay_rate) j["decay_rate"] = *c.decay_rate;
  return j;
}

TrainConfig train_from_json(const json& j, TrainConfig c) {
  reject_unknown_keys(j,
                      {"k", "sigma", "tau0", "tau_min", "anneal_fraction", "decay_rate",
                       "anneal_unit", "lambda", "pretrain_lr", "joint_lr", "optimizer",
                       "batch_size", "pretrain_epochs", "joint_epochs", "seed", "encoder",
                       "centroid_init", "init_restarts"},
                      "deep");
  if (j.contains("k")) c.k = j["k"].get<std::size_t>();
  if (j.contains("sigma")) c.sigma = j["sigma"].get<double>();
  if (j.contains("tau0")) c.tau0 = j["tau0"].get<double>();
  if (j.contains("tau_min")) c.tau_min = j["tau_min"].get<double>();
  if (j.contains("anneal_fraction")) c.anneal_fraction = j["anneal_fraction"].get<double>();
  if (j.contains("decay_rate")) c.decay_rate = j["decay_rate"].get<double>();
  if (j.contains("anneal_unit")) c.anneal_unit = anneal_unit_from_string(j["anneal_unit"]);
  if (j.contains("lambda")) c.lambda = j["lambda"].get<double>();
  if (j.contains("pretrain_lr")) c.pretrain_lr = j["pretrain_lr"].get<double>();
  if (j.contains("joint_lr")) c.joint_lr = j["joint_lr"].get<double>();
  if (j.contains("optimizer")) c.optimizer = optimizer_from_string(j["optimizer"]);
  if (j.contains("batch_size")) c.batch_size = j["batch_size"].get<std::size_t>();
  if (j.contains("pretrain_epochs")) c.pretrain_epochs = j["pretrain_epochs"].get<std::size_t>();
  if (j.contains("joint_epochs")) c.joint_epochs = j["joint_epochs"].get<std::size_t>();
  if (j.contains("seed")) c.seed = j["seed"].get<std::uint64_t>();
  if (j.contains("encoder")) {
    const json& e = j["encoder"];
    if (e.is_string()) {
      const std::string name = e.get<std::string>();
      if (name == "image") {
        c.encoder = MlpSpec::image_encoder();
      } else if (name == "text") {
        c.encoder = MlpSpec::text_encoder();
      } else if (name == "small") {
        c.encoder = MlpSpec::small();
      } else {
        throw ConfigError("deep: unknown encoder preset '" + name + "' (image|text|small)");
      }
    } else {
      c.encoder.widths = e.get<std::vector<std::size_t>>();
    }
  }
  if (j.contains("centroid_init")) c.centroid_init = centroid_init_from_string(j["centroid_init"]);
  if (j.contains("init_restarts")) c.init_restarts = j["init_restarts"].get<std::size_t>();
  return c;
}

}  // namespace json_io

namespace {
constexpr const char* kCheckpointFormat = "concrete-kmeans-checkpoint";
}

std::string checkpoint_to_string(const Checkpoint& ckpt) {
  using json_io::json;
  json j{{"format", kCheckpointFormat},
         {"version", kCheckpointVersion},
         {"spec", ckpt.spec.widths},
         {"encoder", json_io::mlp_to_json(ckpt.ae.encoder)},
         {"decoder", json_io::mlp_to_json(ckpt.ae.decoder)},
         {"centroids", json_io::tensor_to_json(ckpt.centroids.M)},
         {"config", json_io::to_json(ckpt.config)},
         {"seed", ckpt.config.seed}};
  return j.dump(1);
}

Checkpoint checkpoint_from_string(const std::string& text) {
  using json_io::json;
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw FormatError(std::string("checkpoint: ") + e.what());
  }
  if (!j.is_object() || j.value("format", "") != kCheckpointFormat) {
    throw FormatError("checkpoint: not a concrete k-means checkpoint");
  }
  if (j.value("version", 0) != kCheckpointVersion) {
    throw FormatError("checkpoint: unsupported version " + j.value("version", json(0)).dump());
  }
  try {
    Checkpoint c;
    c.spec.widths = j.at("spec").get<std::vector<std::size_t>>();
    c.ae.encoder = json_io::mlp_from_json(j.at("encoder"));
    c.ae.decoder = json_io::mlp_from_json(j.at("decoder"));
    c.centroids.M = json_io::tensor_from_json(j.at("centroids"));
    c.config = json_io::train_from_json(j.at("config"));
    if (c.centroids.dim() != c.ae.latent_dim()) {
      throw FormatError("checkpoint: centroid dimension does not match latent dimension");
    }
    return c;
  } catch (const json::exception& e) {
    throw FormatError(std::string("checkpoint: ") + e.what());
  }
}

void save_checkpoint(const std::string& path, const Checkpoint& ckpt) {
  std::ofstream os(path);
  if (!os) throw IoError("cannot write " + path);
  os << checkpoint_to_string(ckpt) << '\n';
  if (!os) throw IoError("write failed: " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot open " + path);
  std::ostringstream buf;
  buf << is.rdbuf();
  return checkpoint_from_string(buf.str());
}

}  // namespace ckm
