#pragma once

// Deep concrete k-means.
//
// An autoencoder f (encoder) / g (decoder) is pretrained on reconstruction,
// centroids are seeded in the latent space, and then the joint objective
//
//     L = L_AE + lambda * L_CKM
//
// is minimised. L_CKM depends on the encoder and the centroids only and L_AE
// on the encoder and decoder only, so a single backward pass through L
// routes the gradients exactly as the three update lines of the training
// loop require: the encoder sees both terms, the decoder only L_AE, the
// centroids only lambda * L_CKM.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "ckm/autodiff.hpp"
#include "ckm/concrete.hpp"
#include "ckm/kmeans.hpp"
#include "ckm/optim.hpp"
#include "ckm/tensor.hpp"

namespace ckm {

/// Encoder layer widths; the decoder mirrors them back to the input size.
struct MlpSpec {
  std::vector<std::size_t> widths;

  /// 500-500-2000-10, the fully connected image encoder.
  static MlpSpec image_encoder() { return {{500, 500, 2000, 10}}; }
  /// 250-100-20 text encoder.
  static MlpSpec text_encoder() { return {{250, 100, 20}}; }
  /// 64-32-8, sized for synthetic tests.
  static MlpSpec small() { return {{64, 32, 8}}; }

  /// Widths of the mirrored decoder for `input_dim` inputs.
  std::vector<std::size_t> mirrored(std::size_t input_dim) const;
  void validate() const;
};

/// y = x W + b with W stored in x out.
struct DenseLayer {
  Tensor weight;
  Tensor bias;
};

/// Fully connected network: relu on hidden layers, linear output.
class Mlp {
 public:
  Mlp() = default;
  /// Glorot-uniform weights, zero biases.
  Mlp(std::size_t input_dim, const std::vector<std::size_t>& widths, Rng& rng);
  explicit Mlp(std::vector<DenseLayer> layers);

  std::size_t input_dim() const;
  std::size_t output_dim() const;
  std::size_t depth() const { return layers_.size(); }
  std::size_t parameter_count() const;

  const std::vector<DenseLayer>& layers() const { return layers_; }
  std::vector<DenseLayer>& layers() { return layers_; }

  /// Tape-free forward pass.
  Tensor apply(const Tensor& x) const;

 private:
  std::vector<DenseLayer> layers_;
};

/// Parameters of an Mlp registered on a tape.
class BoundMlp {
 public:
  BoundMlp(ad::Tape& tape, const Mlp& mlp);

  ad::Var forward(ad::Var x) const;
  const std::vector<ad::Var>& weights() const { return weights_; }
  const std::vector<ad::Var>& biases() const { return biases_; }

 private:
  std::vector<ad::Var> weights_;
  std::vector<ad::Var> biases_;
};

struct Autoencoder {
  Mlp encoder;
  Mlp decoder;

  static Autoencoder create(std::size_t input_dim, const MlpSpec& spec, Rng& rng);
  std::size_t input_dim() const { return encoder.input_dim(); }
  std::size_t latent_dim() const { return encoder.output_dim(); }
};

struct BoundAutoencoder {
  BoundAutoencoder(ad::Tape& tape, const Autoencoder& ae)
      : encoder(tape, ae.encoder), decoder(tape, ae.decoder) {}
  BoundMlp encoder;
  BoundMlp decoder;
};

ad::Var encode(const BoundAutoencoder& ae, ad::Var x);
ad::Var decode(const BoundAutoencoder& ae, ad::Var z);
/// Latent codes for every row, computed in batches without a tape.
Tensor encode(const Autoencoder& ae, const Tensor& X, std::size_t batch = 1024);

/// sum_i ||x_i - g(f(x_i))||^2.
ad::Var ae_loss(const BoundAutoencoder& ae, ad::Var x);

struct CkmLoss {
  ad::Var loss;
  /// The sampled one-hot rows used in the forward pass.
  Tensor discrete;
};

/// sum_i ||z_i - h~_i M||^2 where h~ is the straight-through rounding of a
/// Gumbel-Softmax sample with noise `gumbel` at temperature `tau`.
CkmLoss ckm_loss(ad::Var z, ad::Var centroids, double sigma, double tau, const Tensor& gumbel);
CkmLoss ckm_loss(ad::Var z, ad::Var centroids, double sigma, double tau, Rng& rng);

enum class CentroidInit {
  /// D^2 seeding only.
  kmeanspp,
  /// D^2 seeding refined by best-of-R Lloyd runs.
  kmeans,
};

std::string to_string(CentroidInit init);
CentroidInit centroid_init_from_string(const std::string& name);

struct TrainConfig {
  std::size_t k = 10;
  double sigma = 1.0;
  double tau0 = 1.0;
  double tau_min = 0.1;
  double anneal_fraction = 0.5;
  std::optional<double> decay_rate;
  AnnealUnit anneal_unit = AnnealUnit::epoch;
  /// Weight of L_CKM in the joint objective. Also scales the centroid update.
  double lambda = 1.0;
  double pretrain_lr = 1e-3;
  double joint_lr = 1e-3;
  OptimizerKind optimizer = OptimizerKind::adam;
  std::size_t batch_size = 256;
  std::size_t pretrain_epochs = 50;
  std::size_t joint_epochs = 100;
  std::uint64_t seed = 0;
  MlpSpec encoder = MlpSpec::small();
  CentroidInit centroid_init = CentroidInit::kmeans;
  std::size_t init_restarts = 10;

  void validate() const;
  TemperatureSchedule schedule(std::size_t steps_per_epoch) const;
};

struct TrainHistory {
  std::vector<double> pretrain_loss;
  std::vector<double> joint_ae_loss;
  std::vector<double> joint_ckm_loss;
  std::vector<double> tau;
};

struct JointLosses {
  double ae = 0.0;
  double ckm = 0.0;
};

/// Stateful trainer. Copyable, so a run can be forked to compare steps.
class DeepCkmTrainer {
 public:
  DeepCkmTrainer(const Tensor& X, TrainConfig cfg);
  /// Starts from an existing (typically pretrained) autoencoder.
  DeepCkmTrainer(const Tensor& X, TrainConfig cfg, Autoencoder ae);

  /// One pass of minibatch reconstruction training at rate pretrain_lr.
  double pretrain_epoch();
  void pretrain();

  /// Seeds the centroids in the current latent space.
  void init_centroids();
  void set_centroids(CentroidSet centroids);

  /// One update of all parameters on the given rows at temperature `tau`.
  JointLosses joint_step(const std::vector<std::size_t>& rows, double tau);
  /// Shuffled pass over the data; tau follows the schedule.
  JointLosses joint_epoch();
  void train_joint();

  Tensor embed() const;
  Labels labels() const;
  /// k-means objective of the current labels and centroids in latent space.
  double objective() const;

  const Autoencoder& autoencoder() const { return ae_; }
  Autoencoder& autoencoder() { return ae_; }
  const CentroidSet& centroids() const { return centroids_; }
  const TrainConfig& config() const { return cfg_; }
  TrainConfig& config() { return cfg_; }
  const TrainHistory& history() const { return history_; }
  const Tensor& data() const { return *X_; }

 private:
  Tensor batch_rows(const std::vector<std::size_t>& rows) const;
  std::vector<std::vector<std::size_t>> shuffled_batches();

  const Tensor* X_;
  TrainConfig cfg_;
  Autoencoder ae_;
  CentroidSet centroids_;
  Rng shuffle_rng_;
  Rng gumbel_rng_;
  std::vector<AdamState> encoder_state_;
  std::vector<AdamState> decoder_state_;
  AdamState centroid_state_;
  std::size_t joint_epochs_done_ = 0;
  std::size_t joint_steps_done_ = 0;
  TrainHistory history_;
};

struct DeepResult {
  Autoencoder ae;
  CentroidSet centroids;
  Labels labels;
  double objective = 0.0;
  TrainHistory history;
};

/// Pretraining only; deterministic in cfg.seed.
Autoencoder pretrain(const Tensor& X, const TrainConfig& cfg);

/// Full training loop: pretrain, seed centroids in latent space, joint
/// training, hard assignment of the re-encoded data.
DeepResult train_ckm(const Tensor& X, const TrainConfig& cfg);
/// Same, skipping pretraining. The optimizer starts with fresh moments.
DeepResult train_ckm_from(const Tensor& X, const TrainConfig& cfg, Autoencoder pretrained);
/// Seeds centroids and runs the joint phase on a trainer that has already
/// pretrained, so its autoencoder optimizer state carries over.
DeepResult train_ckm_joint(DeepCkmTrainer& trainer);

/// Two-step baseline: best-of-R Lloyd on the latent codes of `ae`.
LloydResult ae_kmeans(const Tensor& X, const Autoencoder& ae, std::size_t k,
                      const LloydConfig& lloyd_cfg, std::uint64_t seed);

// --- checkpoints ----------------------------------------------------------

struct Checkpoint {
  MlpSpec spec;
  Autoencoder ae;
  CentroidSet centroids;
  TrainConfig config;
};

inline constexpr int kCheckpointVersion = 1;

/// Versioned JSON container. Doubles are written with round-trip precision.
void save_checkpoint(const std::string& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::string& path);
std::string checkpoint_to_string(const Checkpoint& ckpt);
Checkpoint checkpoint_from_string(const std::string& text);

}  // namespace ckm
