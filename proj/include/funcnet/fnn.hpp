#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "funcnet/dataset.hpp"
#include "funcnet/quadrature.hpp"

namespace funcnet {

enum class Activation { Relu, Sigmoid, Tanh, Linear, Softmax };
enum class Optimizer { Sgd, Adam };

std::string to_string(Activation a);
Activation activation_from_string(const std::string& name);
std::string to_string(Optimizer o);
Optimizer optimizer_from_string(const std::string& name);

/// Network hyperparameters. The layer lists cover the whole stack including
/// the output layer, so the last activation must be softmax and the last
/// neuron count must equal the number of classes.
struct NetworkConfig {
  std::vector<int> neurons;             // n_1..n_U, n_U = H
  std::vector<Activation> activations;  // per layer, last = softmax
  std::vector<double> dropout_rates;    // per layer in [0,1); empty = all zero
  double learn_rate = 0.01;
  double decay_rate = 0.0;       // lr_e = learn_rate / (1 + decay_rate * epoch)
  double validation_split = 0.0;
  std::vector<int> weight_basis_sizes;  // M_1..M_K
  BasisKind weight_basis_kind = BasisKind::Fourier;
  int epochs = 100;
  int batch_size = 32;
  int early_stop_patience = 0;  // 0 disables early stopping
  Optimizer optimizer = Optimizer::Adam;
  bool standardize = true;
  std::uint64_t seed = 0;

  int n_layers() const { return static_cast<int>(neurons.size()); }
  void validate() const;
};

/// Column-wise standardization fitted on training data.
struct Scaler {
  Eigen::VectorXd mean, scale;

  static Scaler fit(const Eigen::MatrixXd& x);
  static Scaler identity(int dim);
  Eigen::MatrixXd apply(const Eigen::MatrixXd& x) const;
  int dim() const { return static_cast<int>(mean.size()); }
};

/// Cached integral features and scalar covariates, one row per observation:
/// [J_11..J_1M1, ..., J_K1..J_KMK, z_1..z_J].
struct DesignMatrix {
  Eigen::MatrixXd x;
  std::vector<int> block_sizes;  // M_1..M_K
  int n_scalars = 0;

  int dim() const { return static_cast<int>(x.cols()); }
};

DesignMatrix compute_design(const Dataset& ds, const std::vector<BasisSystem>& weight_bases);

/// Per-layer forward state for one batch (rows = observations).
struct ForwardCache {
  std::vector<Eigen::MatrixXd> preact;  // z_u
  std::vector<Eigen::MatrixXd> act;     // a_u after activation (and dropout)
  std::vector<Eigen::MatrixXd> mask;    // dropout masks; empty matrix when unused
  const Eigen::MatrixXd& probs() const { return act.back(); }
};

struct TrainHistory {
  std::vector<double> train_loss;
  std::vector<double> val_loss;      // NaN entries when no validation split
  std::vector<double> val_accuracy;  // NaN entries when no validation split
  bool stopped_early = false;
  int stopped_epoch = 0;  // epochs actually run
};

struct Prediction {
  std::vector<int> labels;
  Eigen::MatrixXd probs;  // N x H
};

/// Tracks a monitored loss and signals when it has stopped improving.
class EarlyStopper {
 public:
  explicit EarlyStopper(int patience) : patience_(patience) {}

  /// Feed one epoch's monitor value; returns true when training should stop.
  bool update(double value);
  bool improved_last() const { return improved_last_; }
  bool enabled() const { return patience_ > 0; }
  int best_epoch() const { return best_epoch_; }
  double best_value() const { return best_value_; }

 private:
  int patience_;
  int wait_ = 0;
  int epoch_ = -1;
  int best_epoch_ = -1;
  double best_value_ = std::numeric_limits<double>::infinity();
  bool improved_last_ = false;
};

/// The functional network. The first layer applies per-neuron functional
/// weights to the cached integral features of each functional covariate plus
/// ordinary weights to scalar covariates; later layers are dense. Parameters
/// live in one flat vector with block views, in this order:
/// C_1 (n1 x M_1) ... C_K, W1 (n1 x J), b1, then W_u, b_u per later layer.
class FnnModel {
 public:
  FnnModel() = default;

  static FnnModel init(const NetworkConfig& config, int K, int J, int H,
                       std::uint64_t seed);

  int n_functional() const { return K_; }
  int n_scalars() const { return J_; }
  int n_classes() const { return H_; }
  int input_dim() const;
  const NetworkConfig& config() const { return config_; }

  const std::vector<BasisSystem>& weight_bases() const { return weight_bases_; }
  void set_weight_bases(std::vector<BasisSystem> bases);
  const Scaler& scaler() const { return scaler_; }
  void set_scaler(Scaler s) { scaler_ = std::move(s); }

  const Eigen::VectorXd& params() const { return params_; }
  void set_params(const Eigen::VectorXd& p);
  long param_count() const { return params_.size(); }
  long first_layer_param_count() const;

  // block views into the flat parameter vector
  Eigen::Map<const Eigen::MatrixXd> functional_coefs(int k) const;
  Eigen::Map<const Eigen::MatrixXd> scalar_weights() const;
  Eigen::Map<const Eigen::VectorXd> bias(int layer) const;
  Eigen::Map<const Eigen::MatrixXd> layer_weights(int layer) const;  // layer >= 1

  /// Forward pass over standardized feature rows. `rng` drives dropout and is
  /// required when training is true and any dropout rate is positive.
  ForwardCache forward(const Eigen::MatrixXd& features, bool training = false,
                       std::mt19937_64* rng = nullptr) const;
  /// Probabilities for a single feature vector (inference mode).
  Eigen::VectorXd forward_probs(const Eigen::VectorXd& features) const;

  /// Gradient of the mean batch cross-entropy for every parameter, flattened
  /// in parameter order.
  Eigen::VectorXd backward(const Eigen::MatrixXd& features, const std::vector<int>& labels,
                           const ForwardCache& cache) const;

  /// Mean cross-entropy of the batch under the current parameters.
  double batch_loss(const Eigen::MatrixXd& features, const std::vector<int>& labels) const;

  /// One optimizer update; `epoch` selects the decayed learning rate.
  void step(const Eigen::VectorXd& grad, int epoch);

  /// Average functional weight for covariate k evaluated on a grid.
  Eigen::VectorXd extract_functional_weights(int k, const Grid& grid) const;

  // persistence hooks (see model_io)
  const Eigen::VectorXd& adam_m() const { return adam_m_; }
  const Eigen::VectorXd& adam_v() const { return adam_v_; }
  long adam_t() const { return adam_t_; }
  long sgd_steps() const { return sgd_steps_; }
  void restore_optimizer_state(Eigen::VectorXd m, Eigen::VectorXd v, long t, long steps);

 private:
  struct Block {
    long offset;
    int rows, cols;
  };

  void build_layout();
  Eigen::Map<Eigen::MatrixXd> block_matrix(const Block& b);
  Eigen::Map<const Eigen::MatrixXd> block_matrix(const Block& b) const;

  NetworkConfig config_;
  int K_ = 0, J_ = 0, H_ = 0;
  std::vector<BasisSystem> weight_bases_;
  Scaler scaler_;

  std::vector<Block> func_blocks_;           // C_k
  Block scalar_block_{};                     // W1
  std::vector<Block> weight_blocks_;         // W_u for u >= 2 (index 1..)
  std::vector<Block> bias_blocks_;           // b_u for all layers
  Eigen::VectorXd params_;

  Eigen::VectorXd adam_m_, adam_v_;
  long adam_t_ = 0;
  long sgd_steps_ = 0;

  friend struct FnnModelAccess;
};

/// Cross-entropy of one predicted distribution, with a 1e-12 floor.
double cross_entropy(const Eigen::VectorXd& probs, int label);

struct TrainResult {
  FnnModel model;
  TrainHistory history;
};

/// Train on a labeled dataset: precompute integral features, standardize,
/// shuffle, split off validation, run mini-batch epochs with optional decay,
/// dropout and early stopping. Deterministic given config.seed.
TrainResult train(const Dataset& ds, const NetworkConfig& config);

/// Labels and class probabilities; dropout is disabled, argmax ties resolve
/// to the lowest class index.
Prediction predict(const FnnModel& model, const Dataset& ds);

std::vector<int> argmax_labels(const Eigen::MatrixXd& probs);

}  // namespace funcnet
