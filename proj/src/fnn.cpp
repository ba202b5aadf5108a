#include "funcnet/fnn.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <numeric>
#include <stdexcept>

#include "funcnet/seeds.hpp"

namespace funcnet {

std::string to_string(Activation a) {
  switch (a) {
    case Activation::Relu: return "relu";
    case Activation::Sigmoid: return "sigmoid";
    case Activation::Tanh: return "tanh";
    case Activation::Linear: return "linear";
    case Activation::Softmax: return "softmax";
  }
  throw std::logic_error("unknown activation");
}

Activation activation_from_string(const std::string& name) {
  if (name == "relu") return Activation::Relu;
  if (name == "sigmoid") return Activation::Sigmoid;
  if (name == "tanh") return Activation::Tanh;
  if (name == "linear") return Activation::Linear;
  if (name == "softmax") return Activation::Softmax;
  throw std::invalid_argument("unknown activation: " + name);
}

std::string to_string(Optimizer o) {
  return o == Optimizer::Sgd ? "sgd" : "adam";
}

Optimizer optimizer_from_string(const std::string& name) {
  if (name == "sgd") return Optimizer::Sgd;
  if (name == "adam") return Optimizer::Adam;
  throw std::invalid_argument("unknown optimizer: " + name);
}

void NetworkConfig::validate() const {
  const int u = n_layers();
  if (u < 1) throw std::invalid_argument("network needs at least one layer");
  if (static_cast<int>(activations.size()) != u)
    throw std::invalid_argument("one activation per layer required");
  if (!dropout_rates.empty() && static_cast<int>(dropout_rates.size()) != u)
    throw std::invalid_argument("dropout_rates must be empty or one per layer");
  for (int n : neurons)
    if (n < 1) throw std::invalid_argument("layer sizes must be positive");
  if (activations.back() != Activation::Softmax)
    throw std::invalid_argument("final activation must be softmax");
  for (int i = 0; i + 1 < u; ++i)
    if (activations[i] == Activation::Softmax)
      throw std::invalid_argument("softmax is only allowed on the final layer");
  for (std::size_t i = 0; i < dropout_rates.size(); ++i) {
    const double r = dropout_rates[i];
    if (r < 0.0 || r >= 1.0) throw std::invalid_argument("dropout rates must be in [0,1)");
    if (i + 1 == dropout_rates.size() && r != 0.0)
      throw std::invalid_argument("dropout on the output layer must be 0");
  }
  if (!(learn_rate > 0)) throw std::invalid_argument("learn_rate must be positive");
  if (decay_rate < 0) throw std::invalid_argument("decay_rate must be nonnegative");
  if (validation_split < 0 || validation_split >= 1)
    throw std::invalid_argument("validation_split must be in [0,1)");
  if (epochs < 1) throw std::invalid_argument("epochs must be >= 1");
  if (batch_size < 1) throw std::invalid_argument("batch_size must be >= 1");
  if (early_stop_patience < 0) throw std::invalid_argument("patience must be nonnegative");
  for (int m : weight_basis_sizes)
    if (m < 1) throw std::invalid_argument("weight basis sizes must be >= 1");
}

Scaler Scaler::fit(const Eigen::MatrixXd& x) {
  Scaler s;
  const auto n = x.rows();
  s.mean = x.colwise().mean().transpose();
  if (n > 1) {
    Eigen::VectorXd var = ((x.rowwise() - s.mean.transpose()).array().square().colwise().sum() /
                           double(n - 1))
                              .transpose();
    s.scale = var.array().sqrt().matrix();
  } else {
    s.scale = Eigen::VectorXd::Ones(x.cols());
  }
  for (int i = 0; i < s.scale.size(); ++i)
    if (s.scale(i) < 1e-12) s.scale(i) = 1.0;  // constant column
  return s;
}

Scaler Scaler::identity(int dim) {
  Scaler s;
  s.mean = Eigen::VectorXd::Zero(dim);
  s.scale = Eigen::VectorXd::Ones(dim);
  return s;
}

Eigen::MatrixXd Scaler::apply(const Eigen::MatrixXd& x) const {
  if (x.cols() != mean.size()) throw std::invalid_argument("scaler dimension mismatch");
  Eigen::MatrixXd out = x.rowwise() - mean.transpose();
  for (int c = 0; c < out.cols(); ++c) out.col(c) /= scale(c);
  return out;
}

DesignMatrix compute_design(const Dataset& ds, const std::vector<BasisSystem>& weight_bases) {
  if (static_cast<int>(weight_bases.size()) != ds.k())
    throw std::invalid_argument("one weight basis per functional covariate required");
  DesignMatrix d;
  d.n_scalars = ds.j();
  int dim = ds.j();
  for (const auto& wb : weight_bases) {
    d.block_sizes.push_back(wb.n_basis());
    dim += wb.n_basis();
  }
  d.x.resize(ds.n(), dim);
  int off = 0;
  for (int k = 0; k < ds.k(); ++k) {
    const auto& fc = ds.functional[k];
    const QuadratureRule rule = feature_rule(fc.basis, fc.grid);
    d.x.middleCols(off, d.block_sizes[k]) =
        integral_features_matrix(fc.coefs, fc.basis, weight_bases[k], rule);
    off += d.block_sizes[k];
  }
  if (ds.j() > 0) d.x.middleCols(off, ds.j()) = ds.scalars;
  return d;
}

bool EarlyStopper::update(double value) {
  ++epoch_;
  if (value < best_value_) {
    best_value_ = value;
    best_epoch_ = epoch_;
    wait_ = 0;
    improved_last_ = true;
  } else {
    ++wait_;
    improved_last_ = false;
  }
  return enabled() && wait_ >= patience_;
}

// ---------------------------------------------------------------------------
// FnnModel

void FnnModel::build_layout() {
  const int n1 = config_.neurons.front();
  long off = 0;
  func_blocks_.clear();
  for (int k = 0; k < K_; ++k) {
    const int m = config_.weight_basis_sizes[k];
    func_blocks_.push_back({off, n1, m});
    off += static_cast<long>(n1) * m;
  }
  scalar_block_ = {off, n1, J_};
  off += static_cast<long>(n1) * J_;
  bias_blocks_.assign(config_.n_layers(), Block{});
  weight_blocks_.assign(config_.n_layers(), Block{});
  bias_blocks_[0] = {off, n1, 1};
  off += n1;
  for (int u = 1; u < config_.n_layers(); ++u) {
    const int rows = config_.neurons[u];
    const int cols = config_.neurons[u - 1];
    weight_blocks_[u] = {off, rows, cols};
    off += static_cast<long>(rows) * cols;
    bias_blocks_[u] = {off, rows, 1};
    off += rows;
  }
  params_ = Eigen::VectorXd::Zero(off);
}

Eigen::Map<Eigen::MatrixXd> FnnModel::block_matrix(const Block& b) {
  return {params_.data() + b.offset, b.rows, b.cols};
}
Eigen::Map<const Eigen::MatrixXd> FnnModel::block_matrix(const Block& b) const {
  return {params_.data() + b.offset, b.rows, b.cols};
}

FnnModel FnnModel::init(const NetworkConfig& config, int K, int J, int H,
                        std::uint64_t seed) {
  config.validate();
  if (K < 0 || J < 0) throw std::invalid_argument("covariate counts must be nonnegative");
  if (H < 2) throw std::invalid_argument("need at least two classes");
  if (static_cast<int>(config.weight_basis_sizes.size()) != K)
    throw std::invalid_argument("weight_basis_sizes must have one entry per functional covariate");
  if (config.neurons.back() != H)
    throw std::invalid_argument("final layer width must equal the class count");

  FnnModel m;
  m.config_ = config;
  m.K_ = K;
  m.J_ = J;
  m.H_ = H;
  m.build_layout();
  m.scaler_ = Scaler::identity(m.input_dim());

  std::mt19937_64 rng(seed);
  auto glorot_fill = [&rng](Eigen::Map<Eigen::MatrixXd> w, int fan_in, int fan_out) {
    const double bound = std::sqrt(6.0 / (fan_in + fan_out));
    std::uniform_real_distribution<double> u(-bound, bound);
    for (long i = 0; i < w.size(); ++i) w.data()[i] = u(rng);
  };

  const int n1 = config.neurons.front();
  const int fan_in_1 = m.input_dim();
  for (int k = 0; k < K; ++k) glorot_fill(m.block_matrix(m.func_blocks_[k]), fan_in_1, n1);
  if (J > 0) glorot_fill(m.block_matrix(m.scalar_block_), fan_in_1, n1);
  for (int u = 1; u < config.n_layers(); ++u)
    glorot_fill(m.block_matrix(m.weight_blocks_[u]), config.neurons[u - 1], config.neurons[u]);
  // biases stay zero
  return m;
}

int FnnModel::input_dim() const {
  int d = J_;
  for (int k = 0; k < K_; ++k) d += config_.weight_basis_sizes[k];
  return d;
}

long FnnModel::first_layer_param_count() const {
  return static_cast<long>(config_.neurons.front()) * (input_dim() + 1);
}

void FnnModel::set_params(const Eigen::VectorXd& p) {
  if (p.size() != params_.size()) throw std::invalid_argument("parameter size mismatch");
  if (!p.allFinite()) throw std::invalid_argument("parameters must be finite");
  params_ = p;
}

void FnnModel::set_weight_bases(std::vector<BasisSystem> bases) {
  if (static_cast<int>(bases.size()) != K_)
    throw std::invalid_argument("one weight basis per functional covariate required");
  for (int k = 0; k < K_; ++k)
    if (bases[k].n_basis() != config_.weight_basis_sizes[k])
      throw std::invalid_argument("weight basis size disagrees with config");
  weight_bases_ = std::move(bases);
}

Eigen::Map<const Eigen::MatrixXd> FnnModel::functional_coefs(int k) const {
  if (k < 0 || k >= K_) throw std::out_of_range("functional covariate index out of range");
  return block_matrix(func_blocks_[k]);
}
Eigen::Map<const Eigen::MatrixXd> FnnModel::scalar_weights() const {
  return block_matrix(scalar_block_);
}
Eigen::Map<const Eigen::VectorXd> FnnModel::bias(int layer) const {
  const Block& b = bias_blocks_.at(layer);
  return {params_.data() + b.offset, b.rows};
}
Eigen::Map<const Eigen::MatrixXd> FnnModel::layer_weights(int layer) const {
  if (layer < 1 || layer >= config_.n_layers())
    throw std::out_of_range("dense layer index out of range");
  return block_matrix(weight_blocks_[layer]);
}

namespace {

void apply_activation(Activation act, Eigen::MatrixXd& z) {
  switch (act) {
    case Activation::Relu:
      z = z.cwiseMax(0.0);
      break;
    case Activation::Sigmoid:
      z = (1.0 / (1.0 + (-z.array()).exp())).matrix();
      break;
    case Activation::Tanh:
      z = z.array().tanh().matrix();
      break;
    case Activation::Linear:
      break;
    case Activation::Softmax: {
      for (long i = 0; i < z.rows(); ++i) {
        const double m = z.row(i).maxCoeff();
        Eigen::ArrayXd e = (z.row(i).array() - m).exp();
        z.row(i) = (e / e.sum()).matrix();
      }
      break;
    }
  }
}

Eigen::MatrixXd activation_grad(Activation act, const Eigen::MatrixXd& z,
                                const Eigen::MatrixXd& a) {
  switch (act) {
    case Activation::Relu:
      return (z.array() > 0.0).cast<double>().matrix();
    case Activation::Sigmoid: {
      Eigen::ArrayXXd s = 1.0 / (1.0 + (-z.array()).exp());
      return (s * (1.0 - s)).matrix();
    }
    case Activation::Tanh:
      return (1.0 - z.array().tanh().square()).matrix();
    case Activation::Linear:
      return Eigen::MatrixXd::Ones(a.rows(), a.cols());
    case Activation::Softmax:
      throw std::logic_error("softmax gradient is handled with the loss");
  }
  throw std::logic_error("unknown activation");
}

}  // namespace

ForwardCache FnnModel::forward(const Eigen::MatrixXd& x, bool training,
                               std::mt19937_64* rng) const {
  if (x.cols() != input_dim()) throw std::invalid_argument("feature dimension mismatch");
  if (!x.allFinite()) throw std::invalid_argument("features must be finite");
  const int u_count = config_.n_layers();
  const long batch = x.rows();

  ForwardCache cache;
  cache.preact.resize(u_count);
  cache.act.resize(u_count);
  cache.mask.resize(u_count);

  // functional layer: sum per-covariate feature blocks, then scalars
  Eigen::MatrixXd z = bias(0).transpose().replicate(batch, 1);
  int off = 0;
  for (int k = 0; k < K_; ++k) {
    const int m = func_blocks_[k].cols;
    z.noalias() += x.middleCols(off, m) * functional_coefs(k).transpose();
    off += m;
  }
  if (J_ > 0) z.noalias() += x.middleCols(off, J_) * scalar_weights().transpose();

  for (int u = 0; u < u_count; ++u) {
    if (u > 0) {
      z = cache.act[u - 1] * layer_weights(u).transpose();
      z.rowwise() += bias(u).transpose();
    }
    cache.preact[u] = z;
    apply_activation(config_.activations[u], z);
    const double rate = config_.dropout_rates.empty() ? 0.0 : config_.dropout_rates[u];
    if (training && rate > 0.0) {
      if (rng == nullptr) throw std::invalid_argument("dropout needs an rng in training mode");
      std::uniform_real_distribution<double> unit(0.0, 1.0);
      Eigen::MatrixXd mask(z.rows(), z.cols());
      const double keep_scale = 1.0 / (1.0 - rate);
      for (long i = 0; i < z.rows(); ++i)
        for (long c = 0; c < z.cols(); ++c)
          mask(i, c) = unit(*rng) < rate ? 0.0 : keep_scale;
      z = z.cwiseProduct(mask);
      cache.mask[u] = std::move(mask);
    }
    cache.act[u] = z;
  }
  return cache;
}

Eigen::VectorXd FnnModel::forward_probs(const Eigen::VectorXd& features) const {
  return forward(features.transpose()).probs().row(0).transpose();
}

Eigen::VectorXd FnnModel::backward(const Eigen::MatrixXd& x, const std::vector<int>& labels,
                                   const ForwardCache& cache) const {
  const long batch = x.rows();
  if (static_cast<long>(labels.size()) != batch)
    throw std::invalid_argument("label count does not match batch size");
  Eigen::VectorXd grad = Eigen::VectorXd::Zero(params_.size());
  auto grad_block = [&grad](const Block& b) {
    return Eigen::Map<Eigen::MatrixXd>(grad.data() + b.offset, b.rows, b.cols);
  };

  // softmax with cross-entropy: delta = (p - y) / B
  Eigen::MatrixXd delta = cache.probs();
  for (long i = 0; i < batch; ++i) {
    const int y = labels[i];
    if (y < 0 || y >= H_) throw std::invalid_argument("label out of range");
    delta(i, y) -= 1.0;
  }
  delta /= static_cast<double>(batch);

  for (int u = config_.n_layers() - 1; u >= 1; --u) {
    grad_block(weight_blocks_[u]).noalias() = delta.transpose() * cache.act[u - 1];
    grad_block(bias_blocks_[u]) = delta.colwise().sum().transpose();
    Eigen::MatrixXd da = delta * layer_weights(u);
    if (cache.mask[u - 1].size() > 0) da = da.cwiseProduct(cache.mask[u - 1]);
    delta = da.cwiseProduct(activation_grad(config_.activations[u - 1], cache.preact[u - 1],
                                            cache.act[u - 1]));
  }

  int off = 0;
  for (int k = 0; k < K_; ++k) {
    const int m = func_blocks_[k].cols;
    grad_block(func_blocks_[k]).noalias() = delta.transpose() * x.middleCols(off, m);
    off += m;
  }
  if (J_ > 0) grad_block(scalar_block_).noalias() = delta.transpose() * x.middleCols(off, J_);
  grad_block(bias_blocks_[0]) = delta.colwise().sum().transpose();
  return grad;
}

double cross_entropy(const Eigen::VectorXd& probs, int label) {
  if (label < 0 || label >= probs.size()) throw std::invalid_argument("label out of range");
  return -std::log(std::max(probs(label), 1e-12));
}

namespace {
double mean_cross_entropy(const Eigen::MatrixXd& probs, const std::vector<int>& labels) {
  double sum = 0.0;
  for (long i = 0; i < probs.rows(); ++i)
    sum += cross_entropy(probs.row(i).transpose(), labels[i]);
  return sum / static_cast<double>(probs.rows());
}
}  // namespace

double FnnModel::batch_loss(const Eigen::MatrixXd& features,
                            const std::vector<int>& labels) const {
  return mean_cross_entropy(forward(features).probs(), labels);
}

void FnnModel::step(const Eigen::VectorXd& grad, int epoch) {
  if (grad.size() != params_.size()) throw std::invalid_argument("gradient size mismatch");
  if (!grad.allFinite()) {
    long bad = 0;
    for (long i = 0; i < grad.size(); ++i)
      if (!std::isfinite(grad(i))) { bad = i; break; }
    throw std::runtime_error("non-finite gradient at parameter index " + std::to_string(bad));
  }
  const double lr = config_.learn_rate / (1.0 + config_.decay_rate * epoch);
  if (config_.optimizer == Optimizer::Sgd) {
    params_ -= lr * grad;
    ++sgd_steps_;
  } else {
    if (adam_m_.size() != params_.size()) {
      adam_m_ = Eigen::VectorXd::Zero(params_.size());
      adam_v_ = Eigen::VectorXd::Zero(params_.size());
      adam_t_ = 0;
    }
    constexpr double b1 = 0.9, b2 = 0.999, eps = 1e-8;
    ++adam_t_;
    adam_m_ = b1 * adam_m_ + (1.0 - b1) * grad;
    adam_v_ = (b2 * adam_v_.array() + (1.0 - b2) * grad.array().square()).matrix();
    const double c1 = 1.0 - std::pow(b1, static_cast<double>(adam_t_));
    const double c2 = 1.0 - std::pow(b2, static_cast<double>(adam_t_));
    params_.array() -=
        lr * (adam_m_.array() / c1) / ((adam_v_.array() / c2).sqrt() + eps);
  }
  if (!params_.allFinite())
    throw std::runtime_error("parameters became non-finite after an optimizer step");
}

void FnnModel::restore_optimizer_state(Eigen::VectorXd m, Eigen::VectorXd v, long t,
                                       long steps) {
  adam_m_ = std::move(m);
  adam_v_ = std::move(v);
  adam_t_ = t;
  sgd_steps_ = steps;
}

Eigen::VectorXd FnnModel::extract_functional_weights(int k, const Grid& grid) const {
  if (k < 0 || k >= K_) throw std::out_of_range("functional covariate index out of range");
  if (weight_bases_.empty()) throw std::logic_error("model has no weight bases attached");
  const Eigen::VectorXd avg_coefs = functional_coefs(k).colwise().mean().transpose();
  return weight_bases_[k].eval(grid) * avg_coefs;
}

std::vector<int> argmax_labels(const Eigen::MatrixXd& probs) {
  std::vector<int> labels(probs.rows());
  for (long i = 0; i < probs.rows(); ++i) {
    int best = 0;
    for (int h = 1; h < probs.cols(); ++h)
      if (probs(i, h) > probs(i, best)) best = h;  // ties keep the lowest index
    labels[i] = best;
  }
  return labels;
}

TrainResult train(const Dataset& ds, const NetworkConfig& config) {
  config.validate();
  ds.validate();
  if (ds.labels.empty()) throw std::invalid_argument("training requires labels");
  const int k_count = ds.k(), j_count = ds.j(), h_count = ds.n_classes;
  if (config.neurons.back() != h_count)
    throw std::invalid_argument("final layer width must equal the class count");
  if (static_cast<int>(config.weight_basis_sizes.size()) != k_count)
    throw std::invalid_argument("weight_basis_sizes must have one entry per functional covariate");

  std::vector<BasisSystem> weight_bases;
  for (int k = 0; k < k_count; ++k) {
    const auto& db = ds.functional[k].basis;
    weight_bases.push_back(BasisSystem::make(config.weight_basis_kind, db.a(), db.b(),
                                             config.weight_basis_sizes[k]));
  }
  const DesignMatrix design = compute_design(ds, weight_bases);

  const int n = ds.n();
  std::mt19937_64 rng(derive_seed(config.seed, 0x7261696e));
  std::vector<int> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  std::shuffle(perm.begin(), perm.end(), rng);

  const int n_val = static_cast<int>(std::floor(config.validation_split * n));
  const int n_train = n - n_val;
  if (n_train <= 0) throw std::invalid_argument("empty training split");
  std::vector<int> train_idx(perm.begin(), perm.begin() + n_train);
  std::vector<int> val_idx(perm.begin() + n_train, perm.end());

  int batch_size = config.batch_size;
  if (batch_size > n_train) {
    std::cerr << "warning: batch_size " << batch_size << " clamped to training size "
              << n_train << "\n";
    batch_size = n_train;
  }

  Eigen::MatrixXd train_rows(n_train, design.dim());
  for (int i = 0; i < n_train; ++i) train_rows.row(i) = design.x.row(train_idx[i]);
  const Scaler scaler =
      config.standardize ? Scaler::fit(train_rows) : Scaler::identity(design.dim());
  const Eigen::MatrixXd x_all = scaler.apply(design.x);

  FnnModel model = FnnModel::init(config, k_count, j_count, h_count,
                                  derive_seed(config.seed, 0x696e6974));
  model.set_weight_bases(weight_bases);
  model.set_scaler(scaler);

  Eigen::MatrixXd x_val(n_val, design.dim());
  std::vector<int> y_val(n_val);
  for (int i = 0; i < n_val; ++i) {
    x_val.row(i) = x_all.row(val_idx[i]);
    y_val[i] = ds.labels[val_idx[i]];
  }

  TrainHistory history;
  EarlyStopper stopper(config.early_stop_patience);
  Eigen::VectorXd best_params = model.params();
  const double nan = std::numeric_limits<double>::quiet_NaN();

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    std::shuffle(train_idx.begin(), train_idx.end(), rng);
    double loss_sum = 0.0;
    int n_batches = 0;
    for (int start = 0; start < n_train; start += batch_size) {
      const int size = std::min(batch_size, n_train - start);
      Eigen::MatrixXd xb(size, design.dim());
      std::vector<int> yb(size);
      for (int i = 0; i < size; ++i) {
        xb.row(i) = x_all.row(train_idx[start + i]);
        yb[i] = ds.labels[train_idx[start + i]];
      }
      ForwardCache cache = model.forward(xb, true, &rng);
      loss_sum += mean_cross_entropy(cache.probs(), yb);
      model.step(model.backward(xb, yb, cache), epoch);
      ++n_batches;
    }
    history.train_loss.push_back(loss_sum / n_batches);

    double monitor;
    if (n_val > 0) {
      const Eigen::MatrixXd val_probs = model.forward(x_val).probs();
      const double val_loss = mean_cross_entropy(val_probs, y_val);
      const auto val_pred = argmax_labels(val_probs);
      int correct = 0;
      for (int i = 0; i < n_val; ++i) correct += val_pred[i] == y_val[i];
      history.val_loss.push_back(val_loss);
      history.val_accuracy.push_back(static_cast<double>(correct) / n_val);
      monitor = val_loss;
    } else {
      history.val_loss.push_back(nan);
      history.val_accuracy.push_back(nan);
      monitor = history.train_loss.back();
    }

    const bool stop = stopper.update(monitor);
    if (stopper.enabled() && stopper.improved_last()) best_params = model.params();
    history.stopped_epoch = epoch + 1;
    if (stop) {
      history.stopped_early = true;
      model.set_params(best_params);
      break;
    }
  }
  return {std::move(model), std::move(history)};
}

Prediction predict(const FnnModel& model, const Dataset& ds) {
  ds.validate();
  if (ds.k() != model.n_functional() || ds.j() != model.n_scalars())
    throw std::invalid_argument("dataset covariates do not match the model");
  const DesignMatrix design = compute_design(ds, model.weight_bases());
  const Eigen::MatrixXd x = model.scaler().apply(design.x);
  Prediction out;
  out.probs = model.forward(x).probs();
  out.labels = argmax_labels(out.probs);
  return out;
}

}  // namespace funcnet
