#include "funcnet/simgen.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace funcnet {

namespace {

Eigen::VectorXd draw_kl_scores(int m_terms, std::mt19937_64& rng) {
  Eigen::VectorXd xi(m_terms);
  for (int m = 1; m <= m_terms; ++m) {
    std::normal_distribution<double> score(0.0, std::sqrt(1.0 / m));
    xi(m - 1) = score(rng);
  }
  return xi;
}

// Scenario 1/2 share the same curves; scenario 2 adds the sinusoidal warp.
Simulated scenario12(int n, std::uint64_t seed, const SimOptions& opts, bool warp) {
  if (n < 2) throw std::invalid_argument("scenario needs at least 2 observations");
  Simulated sim;
  sim.grid = Grid::uniform(0.0, 1.0, opts.grid_points);
  const auto fourier = BasisSystem::fourier(0.0, 1.0, opts.kl_terms);
  const auto legendre = BasisSystem::legendre(0.0, 1.0, opts.kl_terms);
  const Eigen::MatrixXd phi_fourier = fourier.eval(sim.grid);
  const Eigen::MatrixXd phi_legendre = legendre.eval(sim.grid);

  sim.raw.resize(n, sim.grid.size());
  sim.labels.resize(n);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int i = 0; i < n; ++i) {
    const bool polynomial = unit(rng) > 0.5;
    sim.labels[i] = polynomial ? 1 : 0;
    const Eigen::VectorXd xi = draw_kl_scores(opts.kl_terms, rng);
    sim.raw.row(i) = ((polynomial ? phi_legendre : phi_fourier) * xi).transpose();
  }
  if (warp)
    sim.raw = (2.0 * std::numbers::pi * sim.raw.array()).sin().matrix();
  if (opts.with_noise) add_noise(sim.raw, rng, opts.per_point_noise);
  return sim;
}

}  // namespace

Eigen::MatrixXd generate_kl(int n, BasisKind kind, int m_terms, const Grid& grid,
                            std::uint64_t seed) {
  if (n < 1) throw std::invalid_argument("need at least one curve");
  if (m_terms < 1) throw std::invalid_argument("need at least one expansion term");
  const auto basis = BasisSystem::make(kind, grid.front(), grid.back(), m_terms);
  const Eigen::MatrixXd phi = basis.eval(grid);
  Eigen::MatrixXd raw(n, grid.size());
  std::mt19937_64 rng(seed);
  for (int i = 0; i < n; ++i) raw.row(i) = (phi * draw_kl_scores(m_terms, rng)).transpose();
  return raw;
}

Simulated scenario1(int n, std::uint64_t seed, const SimOptions& opts) {
  return scenario12(n, seed, opts, false);
}

Simulated scenario2(int n, std::uint64_t seed, const SimOptions& opts) {
  return scenario12(n, seed, opts, true);
}

Simulated scenario3(int n, std::uint64_t seed, const SimOptions& opts) {
  if (n < 2) throw std::invalid_argument("scenario needs at least 2 observations");
  Simulated sim;
  sim.grid = Grid::uniform(0.0, 1.0, opts.grid_points);
  sim.raw.resize(n, sim.grid.size());
  sim.labels.resize(n);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double two_pi = 2.0 * std::numbers::pi;
  for (int i = 0; i < n; ++i) {
    const bool full = unit(rng) > 0.5;
    sim.labels[i] = full ? 1 : 0;
    const double amplitude = full ? 1.0 : 0.6;
    const double phase = two_pi * unit(rng);
    for (int p = 0; p < sim.grid.size(); ++p)
      sim.raw(i, p) = amplitude * std::sin(two_pi * sim.grid.points[p] + phase);
  }
  if (opts.with_noise) add_noise(sim.raw, rng, opts.per_point_noise);
  return sim;
}

Simulated simulate_scenario(int scenario, int n, std::uint64_t seed, const SimOptions& opts) {
  switch (scenario) {
    case 1: return scenario1(n, seed, opts);
    case 2: return scenario2(n, seed, opts);
    case 3: return scenario3(n, seed, opts);
  }
  throw std::invalid_argument("scenario must be 1, 2 or 3");
}

void add_noise(Eigen::MatrixXd& raw, std::mt19937_64& rng, bool per_point) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  if (per_point) {
    for (long i = 0; i < raw.rows(); ++i)
      for (long p = 0; p < raw.cols(); ++p) raw(i, p) += unit(rng);
  } else {
    for (long i = 0; i < raw.rows(); ++i) raw.row(i).array() += unit(rng);
  }
}

Dataset to_functional_dataset(const Simulated& sim, int n_fourier) {
  const auto basis = BasisSystem::fourier(0.0, 1.0, n_fourier);
  return make_functional_dataset(sim.raw, sim.grid, basis, sim.labels, 2);
}

Dataset to_conventional_dataset(const Simulated& sim) {
  return make_conventional_nn_dataset(sim.raw, sim.labels, 2);
}

}  // namespace funcnet
