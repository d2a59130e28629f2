#include "ckm/deep.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "ckm/error.hpp"

namespace ckm {

namespace {

// Independent RNG streams per training run.
enum Stream : std::uint64_t {
  kInitStream = 0,
  kPretrainShuffle = 1,
  kGumbelStream = 2,
  kSeedingStream = 3,
  kJointShuffle = 4,
};

TemperatureSchedule make_schedule(double tau0, double tau_min, double fraction,
                                  const std::optional<double>& decay, AnnealUnit unit,
                                  std::size_t epochs, std::size_t steps_per_epoch) {
  if (decay) return TemperatureSchedule{tau0, tau_min, *decay};
  const double clock = unit == AnnealUnit::epoch ? static_cast<double>(epochs)
                                                 : static_cast<double>(epochs * steps_per_epoch);
  const auto floor_at = static_cast<std::size_t>(std::max(1.0, std::round(fraction * clock)));
  return TemperatureSchedule::reaching_floor_at(tau0, tau_min, floor_at);
}

void step_mlp(Mlp& mlp, const BoundMlp& bound, std::vector<AdamState>& state, OptimizerKind kind,
              double lr) {
  auto& layers = mlp.layers();
  state.resize(2 * layers.size());
  for (std::size_t l = 0; l < layers.size(); ++l) {
    optimizer_step(kind, layers[l].weight, bound.weights()[l].grad(), state[2 * l], lr);
    optimizer_step(kind, layers[l].bias, bound.biases()[l].grad(), state[2 * l + 1], lr);
  }
}

}  // namespace

// --- MlpSpec / Mlp ---------------------------------------------------------

std::vector<std::size_t> MlpSpec::mirrored(std::size_t input_dim) const {
  std::vector<std::size_t> out(widths.rbegin() + 1, widths.rend());
  out.push_back(input_dim);
  return out;
}

void MlpSpec::validate() const {
  if (widths.empty()) throw ConfigError("MlpSpec: at least one layer required");
  for (std::size_t w : widths) {
    if (w == 0) throw ConfigError("MlpSpec: layer widths must be positive");
  }
}

Mlp::Mlp(std::size_t input_dim, const std::vector<std::size_t>& widths, Rng& rng) {
  if (input_dim == 0) throw ConfigError("Mlp: input dimension must be positive");
  std::size_t fan_in = input_dim;
  for (std::size_t fan_out : widths) {
    if (fan_out == 0) throw ConfigError("Mlp: layer widths must be positive");
    DenseLayer layer;
    const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    layer.weight.resize(static_cast<Eigen::Index>(fan_in), static_cast<Eigen::Index>(fan_out));
    for (Eigen::Index i = 0; i < layer.weight.size(); ++i) {
      layer.weight.data()[i] = limit * (2.0 * rng.uniform() - 1.0);
    }
    layer.bias = Tensor::Zero(1, static_cast<Eigen::Index>(fan_out));
    layers_.push_back(std::move(layer));
    fan_in = fan_out;
  }
}

Mlp::Mlp(std::vector<DenseLayer> layers) : layers_(std::move(layers)) {
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    const DenseLayer& d = layers_[l];
    if (d.bias.rows() != 1 || d.bias.cols() != d.weight.cols()) {
      throw DimensionError("Mlp: bias " + shape_string(d.bias) + " does not match weight " +
                           shape_string(d.weight));
    }
    if (l > 0 && layers_[l - 1].weight.cols() != d.weight.rows()) {
      throw DimensionError("Mlp: layer " + std::to_string(l) + " input does not match previous output");
    }
  }
}

std::size_t Mlp::input_dim() const {
  return layers_.empty() ? 0 : static_cast<std::size_t>(layers_.front().weight.rows());
}

std::size_t Mlp::output_dim() const {
  return layers_.empty() ? 0 : static_cast<std::size_t>(layers_.back().weight.cols());
}

std::size_t Mlp::parameter_count() const {
  std::size_t n = 0;
  for (const auto& l : layers_) n += static_cast<std::size_t>(l.weight.size() + l.bias.size());
  return n;
}

Tensor Mlp::apply(const Tensor& x) const {
  if (static_cast<std::size_t>(x.cols()) != input_dim()) {
    throw DimensionError("Mlp::apply: input " + shape_string(x) + " but network expects " +
                         std::to_string(input_dim()) + " features");
  }
  Tensor h = x;
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    Tensor next;
    next.noalias() = h * layers_[l].weight;
    next.rowwise() += layers_[l].bias.row(0);
    if (l + 1 < layers_.size()) next = next.cwiseMax(0.0);
    h = std::move(next);
  }
  return h;
}

BoundMlp::BoundMlp(ad::Tape& tape, const Mlp& mlp) {
  for (const DenseLayer& l : mlp.layers()) {
    weights_.push_back(tape.parameter(l.weight));
    biases_.push_back(tape.parameter(l.bias));
  }
}

ad::Var BoundMlp::forward(ad::Var x) const {
  ad::Var h = x;
  for (std::size_t l = 0; l < weights_.size(); ++l) {
    h = ad::add_row_broadcast(ad::matmul(h, weights_[l]), biases_[l]);
    if (l + 1 < weights_.size()) h = ad::relu(h);
  }
  return h;
}

Autoencoder Autoencoder::create(std::size_t input_dim, const MlpSpec& spec, Rng& rng) {
  spec.validate();
  Autoencoder ae;
  ae.encoder = Mlp(input_dim, spec.widths, rng);
  ae.decoder = Mlp(spec.widths.back(), spec.mirrored(input_dim), rng);
  return ae;
}

ad::Var encode(const BoundAutoencoder& ae, ad::Var x) { return ae.encoder.forward(x); }
ad::Var decode(const BoundAutoencoder& ae, ad::Var z) { return ae.decoder.forward(z); }

Tensor encode(const Autoencoder& ae, const Tensor& X, std::size_t batch) {
  if (batch == 0) batch = 1;
  Tensor Z(X.rows(), static_cast<Eigen::Index>(ae.latent_dim()));
  for (Eigen::Index begin = 0; begin < X.rows(); begin += static_cast<Eigen::Index>(batch)) {
    const Eigen::Index len = std::min<Eigen::Index>(static_cast<Eigen::Index>(batch), X.rows() - begin);
    Z.middleRows(begin, len) = ae.encoder.apply(X.middleRows(begin, len));
  }
  return Z;
}

ad::Var ae_loss(const BoundAutoencoder& ae, ad::Var x) {
  return ad::sq_frobenius(ad::sub(x, decode(ae, encode(ae, x))));
}

CkmLoss ckm_loss(ad::Var z, ad::Var centroids, double sigma, double tau, const Tensor& gumbel) {
  ad::Var log_p = rbf_log_probs(z, centroids, sigma);
  ad::Var h = straight_through(concrete_sample(log_p, gumbel, tau));
  CkmLoss out;
  out.discrete = h.value();
  out.loss = ad::sq_frobenius(ad::sub(z, ad::matmul(h, centroids)));
  return out;
}

CkmLoss ckm_loss(ad::Var z, ad::Var centroids, double sigma, double tau, Rng& rng) {
  const Tensor g = gumbel_sample(static_cast<std::size_t>(z.rows()),
                                 static_cast<std::size_t>(centroids.rows()), rng);
  return ckm_loss(z, centroids, sigma, tau, g);
}

// --- config ----------------------------------------------------------------

std::string to_string(CentroidInit init) {
  return init == CentroidInit::kmeanspp ? "kmeans++" : "kmeans";
}

CentroidInit centroid_init_from_string(const std::string& name) {
  if (name == "kmeans++" || name == "kmeanspp") return CentroidInit::kmeanspp;
  if (name == "kmeans" || name == "lloyd") return CentroidInit::kmeans;
  throw ConfigError("unknown centroid_init '" + name + "' (expected kmeans++|kmeans)");
}

void TrainConfig::validate() const {
  if (k == 0) throw ConfigError("deep: k must be positive");
  if (!(sigma > 0.0)) throw ConfigError("deep: sigma must be positive");
  if (!(lambda >= 0.0)) throw ConfigError("deep: lambda must be non-negative");
  if (!(pretrain_lr > 0.0) || !(joint_lr > 0.0)) throw ConfigError("deep: learning rates must be positive");
  if (batch_size == 0) throw ConfigError("deep: batch_size must be positive");
  if (!(anneal_fraction > 0.0)) throw ConfigError("deep: anneal_fraction must be positive");
  if (init_restarts == 0) throw ConfigError("deep: init_restarts must be positive");
  encoder.validate();
  TemperatureSchedule{tau0, tau_min, decay_rate.value_or(0.0)}.validate();
}

TemperatureSchedule TrainConfig::schedule(std::size_t steps_per_epoch) const {
  return make_schedule(tau0, tau_min, anneal_fraction, decay_rate, anneal_unit,
                       std::max<std::size_t>(joint_epochs, 1), steps_per_epoch);
}

// --- trainer ---------------------------------------------------------------

DeepCkmTrainer::DeepCkmTrainer(const Tensor& X, TrainConfig cfg)
    : X_(&X),
      cfg_(std::move(cfg)),
      shuffle_rng_(derive_seed(cfg_.seed, kPretrainShuffle)),
      gumbel_rng_(derive_seed(cfg_.seed, kGumbelStream)) {
  cfg_.validate();
  Rng init(derive_seed(cfg_.seed, kInitStream));
  ae_ = Autoencoder::create(static_cast<std::size_t>(X.cols()), cfg_.encoder, init);
}

DeepCkmTrainer::DeepCkmTrainer(const Tensor& X, TrainConfig cfg, Autoencoder ae)
    : X_(&X),
      cfg_(std::move(cfg)),
      ae_(std::move(ae)),
      shuffle_rng_(derive_seed(cfg_.seed, kPretrainShuffle)),
      gumbel_rng_(derive_seed(cfg_.seed, kGumbelStream)) {
  cfg_.validate();
  if (ae_.input_dim() != static_cast<std::size_t>(X.cols())) {
    throw DimensionError("DeepCkmTrainer: autoencoder expects " + std::to_string(ae_.input_dim()) +
                         " features, data has " + std::to_string(X.cols()));
  }
}

Tensor DeepCkmTrainer::batch_rows(const std::vector<std::size_t>& rows) const {
  Tensor out(static_cast<Eigen::Index>(rows.size()), X_->cols());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    out.row(static_cast<Eigen::Index>(r)) = X_->row(static_cast<Eigen::Index>(rows[r]));
  }
  return out;
}

std::vector<std::vector<std::size_t>> DeepCkmTrainer::shuffled_batches() {
  const auto n = static_cast<std::size_t>(X_->rows());
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  shuffle_rng_.shuffle(order);
  const std::size_t batch = std::min(cfg_.batch_size, n);
  std::vector<std::vector<std::size_t>> out;
  for (std::size_t b = 0; b < n; b += batch) {
    out.emplace_back(order.begin() + static_cast<std::ptrdiff_t>(b),
                     order.begin() + static_cast<std::ptrdiff_t>(std::min(n, b + batch)));
  }
  return out;
}

double DeepCkmTrainer::pretrain_epoch() {
  double total = 0.0;
  for (const auto& rows : shuffled_batches()) {
    ad::Tape tape;
    BoundAutoencoder bound(tape, ae_);
    ad::Var x = tape.constant(batch_rows(rows));
    ad::Var loss = ae_loss(bound, x);
    tape.backward(loss);
    total += loss.value()(0, 0);
    step_mlp(ae_.encoder, bound.encoder, encoder_state_, cfg_.optimizer, cfg_.pretrain_lr);
    step_mlp(ae_.decoder, bound.decoder, decoder_state_, cfg_.optimizer, cfg_.pretrain_lr);
  }
  history_.pretrain_loss.push_back(total);
  return total;
}

void DeepCkmTrainer::pretrain() {
  for (std::size_t e = 0; e < cfg_.pretrain_epochs; ++e) pretrain_epoch();
}

void DeepCkmTrainer::init_centroids() {
  const Tensor Z = embed();
  if (static_cast<std::size_t>(Z.rows()) < cfg_.k) {
    throw InputError("train_ckm: need N >= k, got N=" + std::to_string(Z.rows()) +
                     " k=" + std::to_string(cfg_.k));
  }
  if (cfg_.centroid_init == CentroidInit::kmeanspp) {
    Rng seeding(derive_seed(cfg_.seed, kSeedingStream));
    set_centroids(kmeanspp_init(Z, cfg_.k, seeding));
  } else {
    LloydConfig lc;
    lc.restarts = cfg_.init_restarts;
    set_centroids(lloyd_best_of(Z, cfg_.k, lc, derive_seed(cfg_.seed, kSeedingStream)).centroids);
  }
}

void DeepCkmTrainer::set_centroids(CentroidSet centroids) {
  if (centroids.dim() != ae_.latent_dim()) {
    throw DimensionError("centroid dimension " + std::to_string(centroids.dim()) +
                         " differs from latent dimension " + std::to_string(ae_.latent_dim()));
  }
  centroids_ = std::move(centroids);
  // Encoder and decoder keep their Adam moments from pretraining; fresh
  // moments make the first joint steps move every weight by about eta.
  centroid_state_ = AdamState{};
  shuffle_rng_ = Rng(derive_seed(cfg_.seed, kJointShuffle));
  joint_epochs_done_ = 0;
  joint_steps_done_ = 0;
}

JointLosses DeepCkmTrainer::joint_step(const std::vector<std::size_t>& rows, double tau) {
  if (centroids_.k() == 0) throw ContractError("joint_step: centroids not initialised");
  ad::Tape tape;
  BoundAutoencoder bound(tape, ae_);
  ad::Var mu = tape.parameter(centroids_.M);
  ad::Var x = tape.constant(batch_rows(rows));

  ad::Var z = encode(bound, x);
  ad::Var l_ae = ad::sq_frobenius(ad::sub(x, decode(bound, z)));
  CkmLoss l_ckm = ckm_loss(z, mu, cfg_.sigma, tau, gumbel_rng_);
  ad::Var total = ad::add(l_ae, ad::scale(l_ckm.loss, cfg_.lambda));
  tape.backward(total);

  step_mlp(ae_.encoder, bound.encoder, encoder_state_, cfg_.optimizer, cfg_.joint_lr);
  step_mlp(ae_.decoder, bound.decoder, decoder_state_, cfg_.optimizer, cfg_.joint_lr);
  optimizer_step(cfg_.optimizer, centroids_.M, mu.grad(), centroid_state_, cfg_.joint_lr);
  ++joint_steps_done_;
  return {l_ae.value()(0, 0), l_ckm.loss.value()(0, 0)};
}

JointLosses DeepCkmTrainer::joint_epoch() {
  const auto batches = shuffled_batches();
  const TemperatureSchedule schedule = cfg_.schedule(batches.size());
  JointLosses sum;
  double tau = 0.0;
  for (const auto& rows : batches) {
    tau = tau_at(schedule,
                 cfg_.anneal_unit == AnnealUnit::epoch ? joint_epochs_done_ : joint_steps_done_);
    const JointLosses l = joint_step(rows, tau);
    sum.ae += l.ae;
    sum.ckm += l.ckm;
  }
  ++joint_epochs_done_;
  history_.joint_ae_loss.push_back(sum.ae);
  history_.joint_ckm_loss.push_back(sum.ckm);
  history_.tau.push_back(tau);
  return sum;
}

void DeepCkmTrainer::train_joint() {
  for (std::size_t e = 0; e < cfg_.joint_epochs; ++e) joint_epoch();
}

Tensor DeepCkmTrainer::embed() const { return encode(ae_, *X_); }

Labels DeepCkmTrainer::labels() const { return hard_assign(embed(), centroids_.M, cfg_.sigma); }

double DeepCkmTrainer::objective() const {
  const Tensor Z = embed();
  return kmeans_objective(Z, hard_assign(Z, centroids_.M, cfg_.sigma), centroids_);
}

// --- entry points ----------------------------------------------------------

Autoencoder pretrain(const Tensor& X, const TrainConfig& cfg) {
  DeepCkmTrainer t(X, cfg);
  t.pretrain();
  return t.autoencoder();
}

namespace {

void require_k_rows(const Tensor& X, std::size_t k) {
  if (static_cast<std::size_t>(X.rows()) < k) {
    throw InputError("train_ckm: need N >= k, got N=" + std::to_string(X.rows()) +
                     " k=" + std::to_string(k));
  }
}

}  // namespace

DeepResult train_ckm_joint(DeepCkmTrainer& t) {
  require_k_rows(t.data(), t.config().k);
  t.init_centroids();
  t.train_joint();
  DeepResult r;
  const Tensor Z = t.embed();
  r.labels = hard_assign(Z, t.centroids().M, t.config().sigma);
  r.objective = kmeans_objective(Z, r.labels, t.centroids());
  r.ae = t.autoencoder();
  r.centroids = t.centroids();
  r.history = t.history();
  return r;
}

DeepResult train_ckm_from(const Tensor& X, const TrainConfig& cfg, Autoencoder pretrained) {
  require_k_rows(X, cfg.k);
  DeepCkmTrainer t(X, cfg, std::move(pretrained));
  return train_ckm_joint(t);
}

DeepResult train_ckm(const Tensor& X, const TrainConfig& cfg) {
  require_k_rows(X, cfg.k);
  DeepCkmTrainer t(X, cfg);
  t.pretrain();
  return train_ckm_joint(t);
}

LloydResult ae_kmeans(const Tensor& X, const Autoencoder& ae, std::size_t k,
                      const LloydConfig& lloyd_cfg, std::uint64_t seed) {
  return lloyd_best_of(encode(ae, X), k, lloyd_cfg, seed);
}

}  // namespace ckm
