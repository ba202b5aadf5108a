#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "funcnet/dataset.hpp"
#include "funcnet/fnn.hpp"

namespace funcnet {

/// Multinomial logistic regression on integral features with an optional
/// roughness penalty lambda * sum_h c_h' R c_h on the functional coefficient
/// blocks, R_{mm'} = integral of phi''_m phi''_{m'}.
struct FlmModel {
  std::vector<BasisSystem> weight_bases;
  Eigen::MatrixXd theta;  // H x (1 + sum M_k + J): [intercept | c_1..c_K | w]
  double lambda = 0.0;
  std::vector<int> block_sizes;  // M_k per covariate
  int n_scalars = 0;

  // fit diagnostics
  bool converged = false;
  double final_grad_norm = 0.0;
  int iterations = 0;
  std::vector<double> objective_path;

  int n_classes() const { return static_cast<int>(theta.rows()); }
};

/// Second-derivative penalty matrix by Simpson quadrature on a 401-point grid.
Eigen::MatrixXd roughness_penalty(const BasisSystem& basis);

/// Deterministic full-batch gradient descent with backtracking line search,
/// run until the gradient norm falls below 1e-8 or 10000 iterations.
FlmModel fit_flm(const Dataset& ds, const std::vector<BasisSystem>& weight_bases,
                 double lambda, std::uint64_t seed);

Prediction predict_flm(const FlmModel& model, const Dataset& ds);

/// Pick lambda from a candidate grid by accuracy on a held-out quarter of the
/// training data, then refit on everything with the winner.
FlmModel fit_flm_tuned(const Dataset& ds, const std::vector<BasisSystem>& weight_bases,
                       const std::vector<double>& lambdas, std::uint64_t seed);

/// Evaluation of the fitted coefficient function for class h, covariate k.
Eigen::VectorXd flm_beta(const FlmModel& model, int class_index, int k, const Grid& grid);

}  // namespace funcnet
