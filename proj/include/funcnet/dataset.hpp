#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "funcnet/basis.hpp"

namespace funcnet {

/// One functional covariate shared by all observations: a common basis, the
/// sampling grid the curves came from, and one coefficient row per curve.
struct FunctionalCovariate {
  BasisSystem basis;
  Grid grid;
  Eigen::MatrixXd coefs;  // N x basis.n_basis()

  FunctionalCovariate(BasisSystem b, Grid g, Eigen::MatrixXd c)
      : basis(std::move(b)), grid(std::move(g)), coefs(std::move(c)) {}
};

/// N observations with K functional covariates, J scalar covariates and an
/// integer class label in {0..H-1}. Labels may be empty for unlabeled data.
struct Dataset {
  std::vector<FunctionalCovariate> functional;  // K entries
  Eigen::MatrixXd scalars;                      // N x J
  std::vector<int> labels;                      // N or empty
  int n_classes = 0;                            // H
  std::vector<std::string> label_names;         // original label values, size H

  int n() const;
  int k() const { return static_cast<int>(functional.size()); }
  int j() const { return static_cast<int>(scalars.cols()); }

  void validate() const;

  /// Copy of the rows given by `idx` (bounds-checked).
  Dataset subset(const std::vector<int>& idx) const;
};

/// Smooth raw curves (rows of an N x P matrix) into a one-covariate dataset.
Dataset make_functional_dataset(const Eigen::MatrixXd& raw, const Grid& grid,
                                const BasisSystem& basis, std::vector<int> labels,
                                int n_classes);

/// Treat every grid point as one scalar covariate (K = 0, J = P).
Dataset make_conventional_nn_dataset(const Eigen::MatrixXd& raw, std::vector<int> labels,
                                     int n_classes);

}  // namespace funcnet
