#pragma once

#include <Eigen/Dense>

#include "funcnet/basis.hpp"

namespace funcnet {

/// Composite Simpson weights on a uniform grid with an odd point count.
struct QuadratureRule {
  Grid grid;
  Eigen::VectorXd weights;  // h/3 * {1, 4, 2, 4, ..., 4, 1}

  static QuadratureRule simpson(double a, double b, int n_points);
  static QuadratureRule simpson(const Grid& uniform_odd_grid);

  int size() const { return grid.size(); }
};

double integrate(const Eigen::VectorXd& values, const QuadratureRule& rule);

/// Integral features J_m = integral of phi_m(t) * x(t) dt for every function
/// phi_m of the weight basis.
Eigen::VectorXd integral_features(const FunctionalObservation& x,
                                  const BasisSystem& weight_basis,
                                  const QuadratureRule& rule);

/// Batch version: rows of `coefs` are observations in `data_basis`.
/// Returns the N x M_w feature matrix.
Eigen::MatrixXd integral_features_matrix(const Eigen::MatrixXd& coefs,
                                         const BasisSystem& data_basis,
                                         const BasisSystem& weight_basis,
                                         const QuadratureRule& rule);

/// Rule used for feature integrals: the observation grid itself when it is
/// uniform with an odd point count, otherwise a uniform 101-point rule over
/// the basis domain.
QuadratureRule feature_rule(const BasisSystem& data_basis, const Grid& obs_grid);
QuadratureRule feature_rule(const BasisSystem& data_basis);

}  // namespace funcnet
