#include "funcnet/flm.hpp"

#include <cmath>
#include <numeric>
#include <random>
#include <stdexcept>

#include "funcnet/quadrature.hpp"
#include "funcnet/seeds.hpp"

namespace funcnet {

Eigen::MatrixXd roughness_penalty(const BasisSystem& basis) {
  const auto rule = QuadratureRule::simpson(basis.a(), basis.b(), 401);
  const Eigen::MatrixXd d2 = basis.eval_deriv(rule.grid, 2);
  const Eigen::MatrixXd weighted = rule.weights.array().sqrt().matrix().asDiagonal() * d2;
  return weighted.transpose() * weighted;  // symmetric PSD by construction
}

namespace {

Eigen::MatrixXd softmax_rows(const Eigen::MatrixXd& scores) {
  Eigen::MatrixXd probs(scores.rows(), scores.cols());
  for (long i = 0; i < scores.rows(); ++i) {
    const double m = scores.row(i).maxCoeff();
    Eigen::ArrayXd e = (scores.row(i).array() - m).exp();
    probs.row(i) = (e / e.sum()).matrix();
  }
  return probs;
}

struct FlmProblem {
  Eigen::MatrixXd x;  // N x (1 + D) with leading intercept column
  std::vector<int> labels;
  int h;
  double lambda;
  std::vector<Eigen::MatrixXd> penalties;  // R_k
  std::vector<int> block_offsets;          // offsets of c blocks inside theta cols

  double objective(const Eigen::MatrixXd& theta) const {
    const Eigen::MatrixXd probs = softmax_rows(x * theta.transpose());
    double loss = 0.0;
    for (long i = 0; i < x.rows(); ++i)
      loss += -std::log(std::max(probs(i, labels[i]), 1e-12));
    loss /= static_cast<double>(x.rows());
    if (lambda > 0.0) {
      for (std::size_t k = 0; k < penalties.size(); ++k) {
        const int off = block_offsets[k];
        const int m = static_cast<int>(penalties[k].rows());
        for (int c = 0; c < h; ++c) {
          const Eigen::VectorXd ck = theta.row(c).segment(off, m).transpose();
          loss += lambda * ck.dot(penalties[k] * ck);
        }
      }
    }
    return loss;
  }

  Eigen::MatrixXd gradient(const Eigen::MatrixXd& theta) const {
    const Eigen::MatrixXd probs = softmax_rows(x * theta.transpose());
    Eigen::MatrixXd delta = probs;
    for (long i = 0; i < x.rows(); ++i) delta(i, labels[i]) -= 1.0;
    Eigen::MatrixXd grad = delta.transpose() * x / static_cast<double>(x.rows());
    if (lambda > 0.0) {
      for (std::size_t k = 0; k < penalties.size(); ++k) {
        const int off = block_offsets[k];
        const int m = static_cast<int>(penalties[k].rows());
        for (int c = 0; c < h; ++c) {
          const Eigen::VectorXd ck = theta.row(c).segment(off, m).transpose();
          grad.row(c).segment(off, m) += (2.0 * lambda * (penalties[k] * ck)).transpose();
        }
      }
    }
    return grad;
  }
};

}  // namespace

FlmModel fit_flm(const Dataset& ds, const std::vector<BasisSystem>& weight_bases,
                 double lambda, std::uint64_t seed) {
  ds.validate();
  if (ds.labels.empty()) throw std::invalid_argument("fitting requires labels");
  if (lambda < 0.0) throw std::invalid_argument("lambda must be nonnegative");
  const DesignMatrix design = compute_design(ds, weight_bases);
  const int n = ds.n(), h = ds.n_classes, d = design.dim();

  FlmProblem prob;
  prob.x.resize(n, d + 1);
  prob.x.col(0).setOnes();
  prob.x.rightCols(d) = design.x;
  prob.labels = ds.labels;
  prob.h = h;
  prob.lambda = lambda;
  int off = 1;
  for (std::size_t k = 0; k < weight_bases.size(); ++k) {
    prob.block_offsets.push_back(off);
    prob.penalties.push_back(roughness_penalty(weight_bases[k]));
    off += weight_bases[k].n_basis();
  }

  std::mt19937_64 rng(derive_seed(seed, 0x666c6d));
  std::uniform_real_distribution<double> u(-0.01, 0.01);
  Eigen::MatrixXd theta(h, d + 1);
  for (long i = 0; i < theta.size(); ++i) theta.data()[i] = u(rng);

  constexpr int max_iters = 10000;
  constexpr double grad_tol = 1e-8;
  constexpr double armijo = 1e-4;

  FlmModel model;
  model.weight_bases = weight_bases;
  model.lambda = lambda;
  model.block_sizes = design.block_sizes;
  model.n_scalars = design.n_scalars;

  double fval = prob.objective(theta);
  model.objective_path.push_back(fval);
  double step = 1.0;
  int iter = 0;
  double grad_norm = 0.0;
  for (; iter < max_iters; ++iter) {
    const Eigen::MatrixXd grad = prob.gradient(theta);
    grad_norm = grad.norm();
    if (grad_norm < grad_tol) {
      model.converged = true;
      break;
    }
    // backtracking line search on the penalized objective
    const double slope = grad.squaredNorm();
    double t = step;
    Eigen::MatrixXd candidate;
    double fnew = fval;
    bool accepted = false;
    for (int halvings = 0; halvings < 60; ++halvings) {
      candidate = theta - t * grad;
      fnew = prob.objective(candidate);
      if (fnew <= fval - armijo * t * slope) {
        accepted = true;
        break;
      }
      t *= 0.5;
    }
    if (!accepted) break;  // no descent step found at machine precision
    theta = candidate;
    fval = fnew;
    model.objective_path.push_back(fval);
    step = std::min(t * 2.0, 1e6);
  }

  model.theta = theta;
  model.iterations = iter;
  model.final_grad_norm = grad_norm;
  return model;
}

Prediction predict_flm(const FlmModel& model, const Dataset& ds) {
  ds.validate();
  const DesignMatrix design = compute_design(ds, model.weight_bases);
  if (design.dim() + 1 != model.theta.cols())
    throw std::invalid_argument("dataset dimensions do not match the fitted model");
  Eigen::MatrixXd x(ds.n(), design.dim() + 1);
  x.col(0).setOnes();
  x.rightCols(design.dim()) = design.x;
  Prediction out;
  out.probs = softmax_rows(x * model.theta.transpose());
  out.labels = argmax_labels(out.probs);
  return out;
}

FlmModel fit_flm_tuned(const Dataset& ds, const std::vector<BasisSystem>& weight_bases,
                       const std::vector<double>& lambdas, std::uint64_t seed) {
  if (lambdas.empty()) throw std::invalid_argument("lambda grid is empty");
  if (lambdas.size() == 1) return fit_flm(ds, weight_bases, lambdas.front(), seed);

  const int n = ds.n();
  std::vector<int> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  std::mt19937_64 rng(derive_seed(seed, 0x73706c69));
  std::shuffle(perm.begin(), perm.end(), rng);
  const int n_val = std::max(1, n / 4);
  const int n_train = n - n_val;
  if (n_train < 1) throw std::invalid_argument("too few observations to tune lambda");
  const Dataset train = ds.subset({perm.begin(), perm.begin() + n_train});
  const Dataset val = ds.subset({perm.begin() + n_train, perm.end()});

  double best_acc = -1.0;
  std::size_t best_idx = 0;
  for (std::size_t i = 0; i < lambdas.size(); ++i) {
    const FlmModel m = fit_flm(train, weight_bases, lambdas[i], seed);
    const Prediction pred = predict_flm(m, val);
    int correct = 0;
    for (int r = 0; r < val.n(); ++r) correct += pred.labels[r] == val.labels[r];
    const double acc = static_cast<double>(correct) / val.n();
    if (acc > best_acc) {  // ties keep the earlier (smaller) lambda entry
      best_acc = acc;
      best_idx = i;
    }
  }
  return fit_flm(ds, weight_bases, lambdas[best_idx], seed);
}

Eigen::VectorXd flm_beta(const FlmModel& model, int class_index, int k, const Grid& grid) {
  if (class_index < 0 || class_index >= model.n_classes())
    throw std::out_of_range("class index out of range");
  if (k < 0 || k >= static_cast<int>(model.weight_bases.size()))
    throw std::out_of_range("covariate index out of range");
  int off = 1;
  for (int i = 0; i < k; ++i) off += model.block_sizes[i];
  const Eigen::VectorXd coefs =
      model.theta.row(class_index).segment(off, model.block_sizes[k]).transpose();
  return model.weight_bases[k].eval(grid) * coefs;
}

}  // namespace funcnet
