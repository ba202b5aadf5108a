#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "funcnet/quadrature.hpp"

using namespace funcnet;

namespace {
constexpr double kPi = std::numbers::pi;

double integrate_fn(double (*f)(double), const QuadratureRule& rule) {
  Eigen::VectorXd v(rule.size());
  for (int i = 0; i < rule.size(); ++i) v(i) = f(rule.grid.points[i]);
  return integrate(v, rule);
}
}  // namespace

TEST_CASE("simpson weights on one panel") {
  auto rule = QuadratureRule::simpson(0.0, 1.0, 3);
  CHECK(rule.weights(0) == doctest::Approx(1.0 / 6));
  CHECK(rule.weights(1) == doctest::Approx(4.0 / 6));
  CHECK(rule.weights(2) == doctest::Approx(1.0 / 6));
  CHECK(std::abs(rule.weights.sum() - 1.0) < 1e-12);
}

TEST_CASE("simpson is exact on cubics") {
  auto rule3 = QuadratureRule::simpson(0.0, 1.0, 3);
  CHECK(std::abs(integrate_fn([](double t) { return t * t * t; }, rule3) - 0.25) < 1e-12);

  // degree <= 3 on several point counts
  for (int p : {3, 11, 41}) {
    auto rule = QuadratureRule::simpson(0.0, 1.0, p);
    CHECK(std::abs(integrate_fn([](double t) { return 1.0; }, rule) - 1.0) < 1e-12);
    CHECK(std::abs(integrate_fn([](double t) { return t; }, rule) - 0.5) < 1e-12);
    CHECK(std::abs(integrate_fn([](double t) { return 6 * t * t - 6 * t + 1; }, rule)) < 1e-12);
    CHECK(std::abs(integrate_fn([](double t) { return t * t * t; }, rule) - 0.25) < 1e-12);
  }
}

TEST_CASE("simpson sine integral at P = 101") {
  auto rule = QuadratureRule::simpson(0.0, 1.0, 101);
  const double got = integrate_fn([](double t) { return std::sin(kPi * t); }, rule);
  CHECK(std::abs(got - 2.0 / kPi) < 1e-8);
}

TEST_CASE("simpson rejects even point counts and mismatched lengths") {
  CHECK_THROWS(QuadratureRule::simpson(0.0, 1.0, 10));
  auto rule = QuadratureRule::simpson(0.0, 1.0, 5);
  CHECK_THROWS(integrate(Eigen::VectorXd::Ones(4), rule));
}

TEST_CASE("simpson error falls like h^4 on a quartic") {
  // analytic integral of t^4 + t^3 over [0, 1] is 1/5 + 1/4
  const double exact = 0.45;
  auto err = [&](int p) {
    auto rule = QuadratureRule::simpson(0.0, 1.0, p);
    return std::abs(integrate_fn([](double t) { return t * t * t * t + t * t * t; }, rule) -
                    exact);
  };
  const double e11 = err(11), e21 = err(21), e41 = err(41);
  // halving h divides the error by about 16
  CHECK(e11 / e21 > 12.0);
  CHECK(e21 / e41 > 12.0);
}

TEST_CASE("integral features: zero and constant curves") {
  auto basis = BasisSystem::fourier(0.0, 1.0, 5);
  auto rule = feature_rule(basis);

  FunctionalObservation zero(basis, Eigen::VectorXd::Zero(5));
  CHECK(integral_features(zero, basis, rule).cwiseAbs().maxCoeff() == 0.0);

  // x = 1: sin and cos integrate to zero over whole periods
  Eigen::VectorXd c = Eigen::VectorXd::Zero(5);
  c(0) = 1.0;
  FunctionalObservation one(basis, c);
  auto weight_basis = BasisSystem::fourier(0.0, 1.0, 3);
  Eigen::VectorXd feats = integral_features(one, weight_basis, rule);
  CHECK(feats(0) == doctest::Approx(1.0).epsilon(1e-10));
  CHECK(std::abs(feats(1)) < 1e-10);
  CHECK(std::abs(feats(2)) < 1e-10);
}

TEST_CASE("integral features are linear in the curve") {
  auto data_basis = BasisSystem::bspline(0.0, 1.0, 7, 4);
  auto weight_basis = BasisSystem::fourier(0.0, 1.0, 5);
  auto rule = feature_rule(data_basis);
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int rep = 0; rep < 20; ++rep) {
    Eigen::VectorXd cx(7), cy(7);
    for (int i = 0; i < 7; ++i) { cx(i) = u(rng); cy(i) = u(rng); }
    const double alpha = u(rng), beta = u(rng);
    FunctionalObservation x(data_basis, cx), y(data_basis, cy);
    FunctionalObservation combo(data_basis, alpha * cx + beta * cy);
    Eigen::VectorXd direct = alpha * integral_features(x, weight_basis, rule) +
                             beta * integral_features(y, weight_basis, rule);
    Eigen::VectorXd got = integral_features(combo, weight_basis, rule);
    CHECK((got - direct).cwiseAbs().maxCoeff() < 1e-10);

    Eigen::VectorXd doubled = integral_features(FunctionalObservation(data_basis, 2 * cx),
                                                weight_basis, rule);
    CHECK((doubled - 2 * integral_features(x, weight_basis, rule)).cwiseAbs().maxCoeff() <
          1e-10);
  }
}

TEST_CASE("cached features match fresh computation bit for bit") {
  auto data_basis = BasisSystem::fourier(0.0, 1.0, 7);
  auto weight_basis = BasisSystem::fourier(0.0, 1.0, 5);
  auto rule = feature_rule(data_basis);
  std::mt19937_64 rng(19);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Eigen::MatrixXd coefs(6, 7);
  for (int i = 0; i < coefs.size(); ++i) coefs(i / 7, i % 7) = u(rng);
  Eigen::MatrixXd cached = integral_features_matrix(coefs, data_basis, weight_basis, rule);
  Eigen::MatrixXd fresh = integral_features_matrix(coefs, data_basis, weight_basis, rule);
  CHECK((cached.array() == fresh.array()).all());
}

TEST_CASE("feature rule reuses odd uniform grids and resamples otherwise") {
  auto basis = BasisSystem::fourier(0.0, 1.0, 3);
  Grid odd = Grid::uniform(0.0, 1.0, 51);
  CHECK(feature_rule(basis, odd).size() == 51);
  Grid even = Grid::uniform(0.0, 1.0, 100);
  CHECK(feature_rule(basis, even).size() == 101);
  Grid ragged({0.0, 0.1, 0.35, 0.7, 1.0});
  CHECK(feature_rule(basis, ragged).size() == 101);
}

TEST_CASE("domain mismatch is rejected") {
  auto data_basis = BasisSystem::fourier(0.0, 1.0, 3);
  auto weight_basis = BasisSystem::fourier(0.0, 2.0, 3);
  auto rule = feature_rule(data_basis);
  FunctionalObservation x(data_basis, Eigen::VectorXd::Ones(3));
  CHECK_THROWS(integral_features(x, weight_basis, rule));
}
