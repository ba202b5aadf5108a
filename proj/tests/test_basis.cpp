#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "funcnet/basis.hpp"

using namespace funcnet;

namespace {
constexpr double kPi = std::numbers::pi;

Eigen::VectorXd sample(const Grid& g, double (*f)(double)) {
  Eigen::VectorXd v(g.size());
  for (int i = 0; i < g.size(); ++i) v(i) = f(g.points[i]);
  return v;
}
}  // namespace

TEST_CASE("fourier basis closed-form values") {
  auto basis = BasisSystem::fourier(0.0, 1.0, 3);
  Grid g({0.25, 0.5, 0.75});
  Eigen::MatrixXd phi = basis.eval(g);
  CHECK(phi(0, 0) == doctest::Approx(1.0));
  CHECK(phi(0, 1) == doctest::Approx(std::sin(kPi / 2)));  // = 1
  CHECK(phi(0, 2) == doctest::Approx(std::cos(kPi / 2)).epsilon(1e-12));  // = 0
}

TEST_CASE("fourier constant column on any grid") {
  auto basis = BasisSystem::fourier(-2.0, 5.0, 1);
  Grid g = Grid::uniform(-2.0, 5.0, 17);
  Eigen::MatrixXd phi = basis.eval(g);
  CHECK(phi.cols() == 1);
  CHECK((phi.array() - 1.0).abs().maxCoeff() == doctest::Approx(0.0));
}

TEST_CASE("shifted legendre P1 values") {
  auto basis = BasisSystem::legendre(0.0, 1.0, 2);
  Grid g({0.0, 0.5, 1.0});
  Eigen::MatrixXd phi = basis.eval(g);
  CHECK(phi(1, 1) == doctest::Approx(0.0));  // 2t - 1 at t = 0.5

  auto basis3 = BasisSystem::legendre(0.0, 1.0, 3);
  Eigen::MatrixXd phi3 = basis3.eval(g);
  CHECK(phi3(0, 1) == doctest::Approx(-1.0));
  CHECK(phi3(1, 1) == doctest::Approx(0.0));
  CHECK(phi3(2, 1) == doctest::Approx(1.0));
}

TEST_CASE("bspline partition of unity") {
  // oracle: row sums of the evaluated basis matrix on a dense grid
  for (int m : {4, 6, 9}) {
    auto basis = BasisSystem::bspline(0.0, 1.0, m, 4);
    Grid g = Grid::uniform(0.0, 1.0, 101);
    Eigen::VectorXd row_sums = basis.eval(g).rowwise().sum();
    CHECK((row_sums.array() - 1.0).abs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("construction errors") {
  CHECK_THROWS(BasisSystem::fourier(0.0, 1.0, 4));   // even count
  CHECK_THROWS(BasisSystem::bspline(0.0, 1.0, 3, 4));  // n_basis < order
  CHECK_THROWS(BasisSystem::fourier(1.0, 1.0, 3));   // degenerate domain
  CHECK_THROWS(BasisSystem::legendre(2.0, 1.0, 3));
  auto basis = BasisSystem::fourier(0.0, 1.0, 3);
  CHECK_THROWS(basis.eval(Grid({0.0, 0.5, 1.5})));   // point outside domain
}

TEST_CASE("smoothing recovers constants and in-span sinusoids") {
  Grid g = Grid::uniform(0.0, 1.0, 41);
  auto basis = BasisSystem::fourier(0.0, 1.0, 5);

  Eigen::VectorXd constant = Eigen::VectorXd::Constant(g.size(), 3.0);
  auto f = smooth(constant, g, basis);
  CHECK(f.coefficients(0) == doctest::Approx(3.0).epsilon(1e-12));
  CHECK(f.coefficients.tail(4).cwiseAbs().maxCoeff() < 1e-10);

  Eigen::VectorXd sine = sample(g, [](double t) { return std::sin(2 * kPi * t); });
  auto fs = smooth(sine, g, basis);
  CHECK(std::abs(fs.coefficients(1) - 1.0) < 1e-10);
  CHECK(std::abs(fs.coefficients(0)) < 1e-10);
  CHECK(fs.coefficients.tail(3).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("nested-model residual monotonicity") {
  // oracle: refit with the larger basis and compare residual sums directly
  std::mt19937_64 rng(7);
  std::normal_distribution<double> noise(0.0, 0.3);
  Grid g = Grid::uniform(0.0, 1.0, 81);
  Eigen::VectorXd y(g.size());
  for (int i = 0; i < g.size(); ++i)
    y(i) = std::sin(2 * kPi * g.points[i]) + 0.5 * std::cos(6 * kPi * g.points[i]) + noise(rng);

  auto rss = [&](int m) {
    auto basis = BasisSystem::fourier(0.0, 1.0, m);
    auto f = smooth(y, g, basis);
    Eigen::VectorXd fitted = eval_function(f, g);
    return (y - fitted).squaredNorm();
  };
  CHECK(rss(35) <= rss(5) + 1e-12);
}

TEST_CASE("smoothing rejects rank-deficient designs") {
  auto basis = BasisSystem::legendre(0.0, 1.0, 5);
  Grid g({0.1, 0.5, 0.9});
  Eigen::VectorXd y = Eigen::VectorXd::Ones(3);
  CHECK_THROWS(smooth(y, g, basis));  // 3 points, 5 basis functions
}

TEST_CASE("eval_function basics and round trip") {
  auto basis = BasisSystem::fourier(0.0, 1.0, 7);
  Grid g = Grid::uniform(0.0, 1.0, 25);

  FunctionalObservation zero(basis, Eigen::VectorXd::Zero(7));
  CHECK(eval_function(zero, g).cwiseAbs().maxCoeff() == 0.0);

  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Eigen::VectorXd c(7);
  for (int i = 0; i < 7; ++i) c(i) = u(rng);
  FunctionalObservation f(basis, c);
  auto back = smooth(eval_function(f, g), g, basis);
  CHECK((back.coefficients - c).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("eval_function is linear in the coefficients") {
  auto basis = BasisSystem::bspline(0.0, 2.0, 8, 4);
  Grid g = Grid::uniform(0.0, 2.0, 33);
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  for (int rep = 0; rep < 20; ++rep) {
    Eigen::VectorXd cf(8), cg(8);
    for (int i = 0; i < 8; ++i) { cf(i) = u(rng); cg(i) = u(rng); }
    const double alpha = u(rng), beta = u(rng);
    FunctionalObservation f(basis, cf), h(basis, cg);
    FunctionalObservation combo(basis, alpha * cf + beta * cg);
    Eigen::VectorXd direct = alpha * eval_function(f, g) + beta * eval_function(h, g);
    CHECK((eval_function(combo, g) - direct).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("derivatives: constants, sinusoids, finite differences") {
  auto basis = BasisSystem::fourier(0.0, 2.0, 5);

  FunctionalObservation constant(basis, (Eigen::VectorXd(5) << 4.0, 0, 0, 0, 0).finished());
  auto dconst = derivative(constant, 1);
  CHECK(dconst.coefficients.cwiseAbs().maxCoeff() == 0.0);

  // d/dt sin(2 pi s) = (2 pi / (b - a)) cos(2 pi s)
  FunctionalObservation sine(basis, (Eigen::VectorXd(5) << 0, 1.0, 0, 0, 0).finished());
  auto dsine = derivative(sine, 1);
  CHECK(dsine.coefficients(2) == doctest::Approx(2 * kPi / 2.0));
  CHECK(std::abs(dsine.coefficients(1)) < 1e-14);

  // oracle: central finite differences of eval_function on an interior grid
  for (auto kind : {BasisKind::Fourier, BasisKind::Legendre, BasisKind::BSpline}) {
    auto bs = BasisSystem::make(kind, 0.0, 1.0, kind == BasisKind::Fourier ? 7 : 8, 5);
    std::mt19937_64 rng(13);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    Eigen::VectorXd c(bs.n_basis());
    for (int i = 0; i < c.size(); ++i) c(i) = u(rng);
    FunctionalObservation f(bs, c);
    auto d2 = derivative(f, 2);

    const double h = 1e-4;
    Grid interior = Grid::uniform(0.1, 0.9, 9);
    Eigen::VectorXd exact = eval_function(d2, interior);
    for (int i = 0; i < interior.size(); ++i) {
      const double t = interior.points[i];
      Grid stencil({t - h, t, t + h});
      Eigen::VectorXd vals = eval_function(f, stencil);
      const double fd = (vals(0) - 2 * vals(1) + vals(2)) / (h * h);
      CHECK(std::abs(fd - exact(i)) < 1e-4 * std::max(1.0, std::abs(exact(i))));
    }
  }

  FunctionalObservation g0(basis, Eigen::VectorXd::Zero(5));
  CHECK_THROWS(derivative(g0, 3));  // unsupported order
  auto lin = BasisSystem::bspline(0.0, 1.0, 4, 2);
  FunctionalObservation pw(lin, Eigen::VectorXd::Ones(4));
  CHECK_THROWS(derivative(pw, 2));  // order 2 spline has no second derivative
}

TEST_CASE("smoothing is a projection for any basis kind") {
  std::mt19937_64 rng(29);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (auto kind : {BasisKind::Fourier, BasisKind::Legendre, BasisKind::BSpline}) {
    auto basis = BasisSystem::make(kind, -1.0, 3.0, kind == BasisKind::Fourier ? 9 : 10, 4);
    Grid g = Grid::uniform(-1.0, 3.0, 37);
    Eigen::VectorXd c(basis.n_basis());
    for (int i = 0; i < c.size(); ++i) c(i) = u(rng);
    FunctionalObservation f(basis, c);
    auto back = smooth(eval_function(f, g), g, basis);
    CHECK((back.coefficients - c).cwiseAbs().maxCoeff() < 1e-10);
  }
}

TEST_CASE("fourier columns nearly orthogonal under dense uniform grid") {
  auto basis = BasisSystem::fourier(0.0, 1.0, 11);
  Grid g = Grid::uniform(0.0, 1.0, 1001);
  Eigen::MatrixXd phi = basis.eval(g);
  Eigen::MatrixXd gram = phi.transpose() * phi / g.size();
  for (int i = 0; i < gram.rows(); ++i)
    for (int j = 0; j < gram.cols(); ++j)
      if (i != j)
        CHECK(std::abs(gram(i, j)) / std::sqrt(gram(i, i) * gram(j, j)) < 1e-2);
}
