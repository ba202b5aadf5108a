#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "funcnet/simgen.hpp"

using namespace funcnet;

TEST_CASE("kl curves have zero mean and unit leading-score variance") {
  Grid g = Grid::uniform(0.0, 1.0, 21);
  const int n = 10000;
  Eigen::MatrixXd raw = generate_kl(n, BasisKind::Fourier, 7, g, 42);

  Eigen::VectorXd mean = raw.colwise().mean();
  CHECK(mean.cwiseAbs().maxCoeff() < 0.05);

  // a one-term expansion exposes xi_1 directly: the curve is xi_1 * P_0
  Eigen::MatrixXd tail = generate_kl(n, BasisKind::Legendre, 1, g, 7);
  CHECK((tail.col(0) - tail.col(20)).cwiseAbs().maxCoeff() == 0.0);  // constants

  double var = 0.0;
  Eigen::VectorXd score1 = tail.col(0);
  const double m = score1.mean();
  for (int i = 0; i < n; ++i) var += (score1(i) - m) * (score1(i) - m);
  var /= (n - 1);
  CHECK(var == doctest::Approx(1.0).epsilon(0.05));
}

TEST_CASE("scenario 1: balanced classes, determinism") {
  auto big = scenario1(10000, 11);
  double frac = 0.0;
  for (int y : big.labels) frac += y;
  frac /= big.labels.size();
  CHECK(frac == doctest::Approx(0.5).epsilon(0.04));

  auto a = scenario1(40, 5);
  auto b = scenario1(40, 5);
  CHECK(a.labels == b.labels);
  CHECK((a.raw.array() == b.raw.array()).all());
  auto c = scenario1(40, 6);
  CHECK((a.raw - c.raw).cwiseAbs().maxCoeff() > 0.0);
}

TEST_CASE("scenario 2 is the sinusoidal warp of scenario 1") {
  SimOptions quiet;
  quiet.with_noise = false;
  auto s1 = scenario1(30, 21, quiet);
  auto s2 = scenario2(30, 21, quiet);
  CHECK(s1.labels == s2.labels);
  CHECK(s2.raw.cwiseAbs().maxCoeff() <= 1.0);  // sine range before noise
  Eigen::MatrixXd expected = (2.0 * std::acos(-1.0) * s1.raw.array()).sin().matrix();
  CHECK((s2.raw - expected).cwiseAbs().maxCoeff() < 1e-15);
}

TEST_CASE("scenario 3 amplitudes by class") {
  SimOptions quiet;
  quiet.with_noise = false;
  auto sim = scenario3(200, 31, quiet);
  for (int i = 0; i < 200; ++i) {
    const double amp = sim.raw.row(i).cwiseAbs().maxCoeff();
    if (sim.labels[i] == 1) {
      CHECK(amp > 0.99);
      CHECK(amp <= 1.0);
    } else {
      CHECK(amp > 0.6 * 0.99);
      CHECK(amp <= 0.6);
    }
  }
}

TEST_CASE("noise is a per-curve level shift from U(0,1)") {
  Eigen::MatrixXd zeros = Eigen::MatrixXd::Zero(10000, 3);
  std::mt19937_64 rng(13);
  add_noise(zeros, rng);

  // same shift across a row, in [0, 1)
  for (int i = 0; i < 100; ++i) {
    CHECK(zeros(i, 0) == zeros(i, 1));
    CHECK(zeros(i, 0) == zeros(i, 2));
  }
  CHECK(zeros.minCoeff() >= 0.0);
  CHECK(zeros.maxCoeff() < 1.0);

  double mean = zeros.col(0).mean(), var = 0.0;
  for (int i = 0; i < zeros.rows(); ++i)
    var += (zeros(i, 0) - mean) * (zeros(i, 0) - mean);
  var /= (zeros.rows() - 1);
  CHECK(std::abs(var - 1.0 / 12.0) < 0.005);

  // zero-noise mode is the identity
  SimOptions quiet;
  quiet.with_noise = false;
  auto a = scenario3(20, 3, quiet);
  SimOptions loud = quiet;
  loud.with_noise = true;
  auto b = scenario3(20, 3, loud);
  CHECK(a.labels == b.labels);
  CHECK(((b.raw - a.raw).rowwise().maxCoeff() -
         (b.raw - a.raw).rowwise().minCoeff()).cwiseAbs().maxCoeff() < 1e-15);

  // per-point mode varies within a row
  Eigen::MatrixXd zeros2 = Eigen::MatrixXd::Zero(5, 4);
  std::mt19937_64 rng2(17);
  add_noise(zeros2, rng2, true);
  bool varies = false;
  for (int i = 0; i < 5; ++i)
    if (zeros2(i, 0) != zeros2(i, 1)) varies = true;
  CHECK(varies);
}

TEST_CASE("constant-basis kl curves are constants") {
  Grid g = Grid::uniform(0.0, 1.0, 11);
  Eigen::MatrixXd raw = generate_kl(50, BasisKind::Fourier, 1, g, 9);
  for (int i = 0; i < 50; ++i)
    CHECK((raw.row(i).maxCoeff() - raw.row(i).minCoeff()) == 0.0);
}

TEST_CASE("datasets built from simulations") {
  auto sim = scenario1(40, 77);
  Dataset fd = to_functional_dataset(sim, 35);
  CHECK(fd.k() == 1);
  CHECK(fd.j() == 0);
  CHECK(fd.n() == 40);
  CHECK(fd.n_classes == 2);
  CHECK(fd.functional[0].basis.n_basis() == 35);

  Dataset cd = to_conventional_dataset(sim);
  CHECK(cd.k() == 0);
  CHECK(cd.j() == sim.grid.size());
  CHECK(cd.n() == 40);
}
