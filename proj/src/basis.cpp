#include "funcnet/basis.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace funcnet {

std::string to_string(BasisKind kind) {
  switch (kind) {
    case BasisKind::Fourier: return "fourier";
    case BasisKind::BSpline: return "bspline";
    case BasisKind::Legendre: return "legendre";
  }
  throw std::logic_error("unknown basis kind");
}

BasisKind basis_kind_from_string(const std::string& name) {
  if (name == "fourier") return BasisKind::Fourier;
  if (name == "bspline") return BasisKind::BSpline;
  if (name == "legendre") return BasisKind::Legendre;
  throw std::invalid_argument("unknown basis kind: " + name);
}

Grid Grid::uniform(double a, double b, int n) {
  if (n < 3) throw std::invalid_argument("grid needs at least 3 points");
  if (!(a < b)) throw std::invalid_argument("grid interval is degenerate");
  std::vector<double> pts(n);
  const double h = (b - a) / (n - 1);
  for (int i = 0; i < n; ++i) pts[i] = a + h * i;
  pts.back() = b;
  return Grid(std::move(pts));
}

bool Grid::is_uniform(double rel_tol) const {
  if (size() < 3) return false;
  const double h = (points.back() - points.front()) / (size() - 1);
  for (int i = 1; i < size(); ++i) {
    if (std::abs(points[i] - points[i - 1] - h) > rel_tol * std::abs(h)) return false;
  }
  return true;
}

double Grid::spacing() const {
  return (points.back() - points.front()) / (size() - 1);
}

void Grid::validate() const {
  if (size() < 3) throw std::invalid_argument("grid needs at least 3 points");
  for (int i = 1; i < size(); ++i) {
    if (!(points[i] > points[i - 1]))
      throw std::invalid_argument("grid points must be strictly increasing");
  }
  for (double t : points) {
    if (!std::isfinite(t)) throw std::invalid_argument("grid point is not finite");
  }
}

BasisSystem::BasisSystem(BasisKind kind, double a, double b, int n_basis, int order)
    : kind_(kind), a_(a), b_(b), n_basis_(n_basis), order_(order) {
  if (!(a < b)) throw std::invalid_argument("basis domain is degenerate");
  if (n_basis < 1) throw std::invalid_argument("n_basis must be >= 1");
  if (kind == BasisKind::Fourier && n_basis % 2 == 0)
    throw std::invalid_argument("Fourier basis size must be odd (constant + sin/cos pairs)");
  if (kind == BasisKind::BSpline) {
    if (order < 1) throw std::invalid_argument("B-spline order must be >= 1");
    if (n_basis < order)
      throw std::invalid_argument("B-spline needs n_basis >= order");
    // clamped knot vector: a repeated `order` times, equally spaced interior
    // knots, b repeated `order` times
    const int n_interior = n_basis - order;
    knots_.reserve(n_basis + order);
    for (int i = 0; i < order; ++i) knots_.push_back(a);
    for (int i = 1; i <= n_interior; ++i)
      knots_.push_back(a + (b - a) * i / (n_interior + 1));
    for (int i = 0; i < order; ++i) knots_.push_back(b);
  }
}

BasisSystem BasisSystem::fourier(double a, double b, int n_basis) {
  return BasisSystem(BasisKind::Fourier, a, b, n_basis, 0);
}
BasisSystem BasisSystem::bspline(double a, double b, int n_basis, int order) {
  return BasisSystem(BasisKind::BSpline, a, b, n_basis, order);
}
BasisSystem BasisSystem::legendre(double a, double b, int n_basis) {
  return BasisSystem(BasisKind::Legendre, a, b, n_basis, 0);
}
BasisSystem BasisSystem::make(BasisKind kind, double a, double b, int n_basis, int order) {
  switch (kind) {
    case BasisKind::Fourier: return fourier(a, b, n_basis);
    case BasisKind::BSpline: return bspline(a, b, n_basis, order);
    case BasisKind::Legendre: return legendre(a, b, n_basis);
  }
  throw std::logic_error("unknown basis kind");
}

bool BasisSystem::operator==(const BasisSystem& other) const {
  return kind_ == other.kind_ && a_ == other.a_ && b_ == other.b_ &&
         n_basis_ == other.n_basis_ &&
         (kind_ != BasisKind::BSpline || order_ == other.order_);
}

namespace {

// Values of all M shifted Legendre polynomials at x in [-1, 1].
void legendre_row(double x, Eigen::VectorXd& out) {
  const int m = static_cast<int>(out.size());
  out(0) = 1.0;
  if (m > 1) out(1) = x;
  for (int n = 1; n + 1 < m; ++n)
    out(n + 1) = ((2 * n + 1) * x * out(n) - n * out(n - 1)) / (n + 1);
}

// Knot span index i with knots[i] <= t < knots[i+1], clamped at the right end.
int find_span(const std::vector<double>& knots, int order, int n_basis, double t) {
  const int last = n_basis - 1;  // highest basis index
  if (t >= knots[n_basis]) return last;
  auto it = std::upper_bound(knots.begin() + order - 1, knots.begin() + n_basis + 1, t);
  return static_cast<int>(it - knots.begin()) - 1;
}

// Cox-de Boor: the `order` non-vanishing B-spline values at t for span i.
void bspline_nonzero(const std::vector<double>& knots, int order, int span, double t,
                     Eigen::VectorXd& vals) {
  vals.setZero(order);
  vals(0) = 1.0;
  std::vector<double> left(order), right(order);
  for (int j = 1; j < order; ++j) {
    left[j] = t - knots[span + 1 - j];
    right[j] = knots[span + j] - t;
    double saved = 0.0;
    for (int r = 0; r < j; ++r) {
      const double denom = right[r + 1] + left[j - r];
      const double temp = denom != 0.0 ? vals(r) / denom : 0.0;
      vals(r) = saved + right[r + 1] * temp;
      saved = left[j - r] * temp;
    }
    vals(j) = saved;
  }
}

}  // namespace

Eigen::VectorXd BasisSystem::eval_point(double t) const {
  Eigen::VectorXd row(n_basis_);
  switch (kind_) {
    case BasisKind::Fourier: {
      const double s = (t - a_) / (b_ - a_);
      row(0) = 1.0;
      for (int r = 1; 2 * r < n_basis_; ++r) {
        const double arg = 2.0 * std::numbers::pi * r * s;
        row(2 * r - 1) = std::sin(arg);
        row(2 * r) = std::cos(arg);
      }
      break;
    }
    case BasisKind::Legendre: {
      const double x = 2.0 * (t - a_) / (b_ - a_) - 1.0;
      legendre_row(x, row);
      break;
    }
    case BasisKind::BSpline: {
      row.setZero();
      const int span = find_span(knots_, order_, n_basis_, t);
      Eigen::VectorXd vals;
      bspline_nonzero(knots_, order_, span, t, vals);
      for (int j = 0; j < order_; ++j) row(span - order_ + 1 + j) = vals(j);
      break;
    }
  }
  return row;
}

Eigen::MatrixXd BasisSystem::eval(const Grid& grid) const {
  grid.validate();
  if (grid.front() < a_ - 1e-12 * (b_ - a_) || grid.back() > b_ + 1e-12 * (b_ - a_))
    throw std::invalid_argument("grid point outside basis domain");
  Eigen::MatrixXd out(grid.size(), n_basis_);
  for (int p = 0; p < grid.size(); ++p) {
    const double t = std::clamp(grid.points[p], a_, b_);
    out.row(p) = eval_point(t).transpose();
  }
  return out;
}

BasisSystem BasisSystem::derivative_basis() const {
  switch (kind_) {
    case BasisKind::Fourier:
      return *this;
    case BasisKind::Legendre:
      return legendre(a_, b_, std::max(n_basis_ - 1, 1));
    case BasisKind::BSpline:
      if (order_ < 2)
        throw std::invalid_argument("B-spline order too low to differentiate");
      return bspline(a_, b_, n_basis_ - 1, order_ - 1);
  }
  throw std::logic_error("unknown basis kind");
}

Eigen::MatrixXd BasisSystem::derivative_map() const {
  switch (kind_) {
    case BasisKind::Fourier: {
      Eigen::MatrixXd d = Eigen::MatrixXd::Zero(n_basis_, n_basis_);
      for (int r = 1; 2 * r < n_basis_; ++r) {
        const double w = 2.0 * std::numbers::pi * r / (b_ - a_);
        d(2 * r - 1, 2 * r) = -w;  // cos -> -w sin
        d(2 * r, 2 * r - 1) = w;   // sin ->  w cos
      }
      return d;
    }
    case BasisKind::Legendre: {
      const int m_out = std::max(n_basis_ - 1, 1);
      Eigen::MatrixXd d = Eigen::MatrixXd::Zero(m_out, n_basis_);
      const double scale = 2.0 / (b_ - a_);
      // P'_j = sum over k < j with j - k odd of (2k + 1) P_k
      for (int j = 1; j < n_basis_; ++j)
        for (int k = j - 1; k >= 0; k -= 2) d(k, j) = scale * (2 * k + 1);
      return d;
    }
    case BasisKind::BSpline: {
      if (order_ < 2)
        throw std::invalid_argument("B-spline order too low to differentiate");
      Eigen::MatrixXd d = Eigen::MatrixXd::Zero(n_basis_ - 1, n_basis_);
      for (int j = 0; j + 1 < n_basis_; ++j) {
        const double span = knots_[j + order_] - knots_[j + 1];
        const double f = (order_ - 1) / span;
        d(j, j) = -f;
        d(j, j + 1) = f;
      }
      return d;
    }
  }
  throw std::logic_error("unknown basis kind");
}

Eigen::MatrixXd BasisSystem::eval_deriv(const Grid& grid, int deriv) const {
  if (deriv < 0 || deriv > 2) throw std::invalid_argument("derivative order must be 0, 1 or 2");
  if (deriv == 0) return eval(grid);
  BasisSystem db = derivative_basis();
  Eigen::MatrixXd map = derivative_map();
  if (deriv == 2) {
    map = db.derivative_map() * map;
    db = db.derivative_basis();
  }
  return db.eval(grid) * map;
}

FunctionalObservation::FunctionalObservation(BasisSystem b, Eigen::VectorXd c)
    : basis(std::move(b)), coefficients(std::move(c)) {
  if (coefficients.size() != basis.n_basis())
    throw std::invalid_argument("coefficient length does not match basis size");
  if (!coefficients.allFinite())
    throw std::invalid_argument("coefficients must be finite");
}

FunctionalObservation smooth(const Eigen::VectorXd& raw, const Grid& grid,
                             const BasisSystem& basis) {
  Eigen::MatrixXd coefs = smooth_rows(raw.transpose(), grid, basis);
  return FunctionalObservation(basis, coefs.row(0).transpose());
}

Eigen::MatrixXd smooth_rows(const Eigen::MatrixXd& raw, const Grid& grid,
                            const BasisSystem& basis) {
  if (raw.cols() != grid.size())
    throw std::invalid_argument("raw sample count does not match grid size");
  if (grid.size() < basis.n_basis())
    throw std::invalid_argument("fewer sample points than basis functions");
  if (!raw.allFinite()) throw std::invalid_argument("raw values must be finite");
  const Eigen::MatrixXd design = basis.eval(grid);
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(design);
  if (qr.rank() < basis.n_basis())
    throw std::runtime_error("smoothing design matrix is rank deficient");
  return qr.solve(raw.transpose()).transpose();
}

Eigen::VectorXd eval_function(const FunctionalObservation& f, const Grid& grid) {
  return f.basis.eval(grid) * f.coefficients;
}

FunctionalObservation derivative(const FunctionalObservation& f, int order) {
  if (order != 1 && order != 2) throw std::invalid_argument("derivative order must be 1 or 2");
  FunctionalObservation out(f.basis.derivative_basis(),
                            f.basis.derivative_map() * f.coefficients);
  if (order == 2) return derivative(out, 1);
  return out;
}

}  // namespace funcnet
