#include "funcnet/quadrature.hpp"

#include <stdexcept>

namespace funcnet {

QuadratureRule QuadratureRule::simpson(double a, double b, int n_points) {
  return simpson(Grid::uniform(a, b, n_points));
}

QuadratureRule QuadratureRule::simpson(const Grid& grid) {
  grid.validate();
  const int n = grid.size();
  if (n % 2 == 0) throw std::invalid_argument("Simpson rule needs an odd point count");
  if (!grid.is_uniform()) throw std::invalid_argument("Simpson rule needs a uniform grid");
  const double h = grid.spacing();
  Eigen::VectorXd w(n);
  w(0) = w(n - 1) = h / 3.0;
  for (int i = 1; i + 1 < n; ++i) w(i) = (i % 2 == 1 ? 4.0 : 2.0) * h / 3.0;
  return QuadratureRule{grid, std::move(w)};
}

double integrate(const Eigen::VectorXd& values, const QuadratureRule& rule) {
  if (values.size() != rule.weights.size())
    throw std::invalid_argument("value count does not match quadrature rule");
  return rule.weights.dot(values);
}

Eigen::VectorXd integral_features(const FunctionalObservation& x,
                                  const BasisSystem& weight_basis,
                                  const QuadratureRule& rule) {
  if (weight_basis.a() != x.basis.a() || weight_basis.b() != x.basis.b())
    throw std::invalid_argument("weight basis domain does not match the curve domain");
  return integral_features_matrix(x.coefficients.transpose(), x.basis, weight_basis, rule)
      .row(0)
      .transpose();
}

Eigen::MatrixXd integral_features_matrix(const Eigen::MatrixXd& coefs,
                                         const BasisSystem& data_basis,
                                         const BasisSystem& weight_basis,
                                         const QuadratureRule& rule) {
  if (weight_basis.a() != data_basis.a() || weight_basis.b() != data_basis.b())
    throw std::invalid_argument("weight basis domain does not match the curve domain");
  if (rule.grid.front() < data_basis.a() || rule.grid.back() > data_basis.b())
    throw std::invalid_argument("quadrature rule extends outside the domain");
  // values of every curve at the rule points, then weighted inner products
  const Eigen::MatrixXd curve_vals = coefs * data_basis.eval(rule.grid).transpose();  // N x P
  const Eigen::MatrixXd weighted_phi =
      rule.weights.asDiagonal() * weight_basis.eval(rule.grid);  // P x M_w
  return curve_vals * weighted_phi;
}

QuadratureRule feature_rule(const BasisSystem& data_basis, const Grid& obs_grid) {
  if (obs_grid.size() >= 3 && obs_grid.size() % 2 == 1 && obs_grid.is_uniform() &&
      obs_grid.front() >= data_basis.a() && obs_grid.back() <= data_basis.b())
    return QuadratureRule::simpson(obs_grid);
  return feature_rule(data_basis);
}

QuadratureRule feature_rule(const BasisSystem& data_basis) {
  return QuadratureRule::simpson(data_basis.a(), data_basis.b(), 101);
}

}  // namespace funcnet
