#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

namespace funcnet {

enum class BasisKind { Fourier, BSpline, Legendre };

std::string to_string(BasisKind kind);
BasisKind basis_kind_from_string(const std::string& name);

/// Strictly increasing sample points, at least 3 of them.
struct Grid {
  std::vector<double> points;

  Grid() = default;
  explicit Grid(std::vector<double> pts) : points(std::move(pts)) {}

  static Grid uniform(double a, double b, int n);

  int size() const { return static_cast<int>(points.size()); }
  double front() const { return points.front(); }
  double back() const { return points.back(); }
  bool is_uniform(double rel_tol = 1e-9) const;
  double spacing() const;  // only meaningful when is_uniform()

  void validate() const;
};

/// A family of n_basis functions on [a, b].
///
/// Fourier: phi_1 = 1, then pairs sin(2*pi*r*s), cos(2*pi*r*s) with
/// s = (t - a)/(b - a), r = 1, 2, ...  (n_basis must be odd).
/// BSpline: order-`order` splines on equally spaced interior knots with
/// order-fold boundary multiplicity; interior knot count is n_basis - order.
/// Legendre: shifted Legendre polynomials P_0..P_{n_basis-1} mapped to [a, b].
class BasisSystem {
 public:
  static BasisSystem fourier(double a, double b, int n_basis);
  static BasisSystem bspline(double a, double b, int n_basis, int order = 4);
  static BasisSystem legendre(double a, double b, int n_basis);
  static BasisSystem make(BasisKind kind, double a, double b, int n_basis, int order = 4);

  BasisKind kind() const { return kind_; }
  double a() const { return a_; }
  double b() const { return b_; }
  int n_basis() const { return n_basis_; }
  int order() const { return order_; }
  const std::vector<double>& knots() const { return knots_; }

  /// P x M matrix, entry (p, m) = phi_m(t_p).
  Eigen::MatrixXd eval(const Grid& grid) const;
  /// Same, for the q-th derivative of each basis function (q <= 2).
  Eigen::MatrixXd eval_deriv(const Grid& grid, int deriv) const;

  /// Basis in which the derivative of an expansion lives.
  /// Fourier maps to itself; Legendre and BSpline drop one function.
  BasisSystem derivative_basis() const;
  /// M' x M map D such that coefficients of d/dt (c . phi) are D * c.
  Eigen::MatrixXd derivative_map() const;

  bool contains(double t) const { return t >= a_ && t <= b_; }
  bool operator==(const BasisSystem& other) const;

 private:
  BasisSystem(BasisKind kind, double a, double b, int n_basis, int order);

  Eigen::VectorXd eval_point(double t) const;

  BasisKind kind_;
  double a_, b_;
  int n_basis_;
  int order_;                  // B-spline only
  std::vector<double> knots_;  // B-spline only: full clamped knot vector
};

/// One curve stored as basis coefficients.
struct FunctionalObservation {
  BasisSystem basis;
  Eigen::VectorXd coefficients;

  FunctionalObservation(BasisSystem b, Eigen::VectorXd c);
};

/// Ordinary least squares fit of raw samples against the basis.
/// Throws if the design is rank deficient (fewer distinct points than
/// basis functions).
FunctionalObservation smooth(const Eigen::VectorXd& raw, const Grid& grid,
                             const BasisSystem& basis);

/// Row-wise smoothing of an N x P matrix of curves sampled on one grid.
/// Returns the N x M coefficient matrix.
Eigen::MatrixXd smooth_rows(const Eigen::MatrixXd& raw, const Grid& grid,
                            const BasisSystem& basis);

/// Values of the expansion at the grid points.
Eigen::VectorXd eval_function(const FunctionalObservation& f, const Grid& grid);

/// Coefficients of d^order f / dt^order in the compatible basis, order in {1, 2}.
FunctionalObservation derivative(const FunctionalObservation& f, int order);

}  // namespace funcnet
