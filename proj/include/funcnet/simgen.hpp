#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <random>

#include "funcnet/dataset.hpp"

namespace funcnet {

/// Knobs shared by the three scenario generators.
struct SimOptions {
  int grid_points = 100;  // equally spaced on [0, 1]
  int kl_terms = 35;      // truncation of the random-curve expansion
  bool with_noise = true;
  bool per_point_noise = false;  // sensitivity mode: independent draw per sample
};

struct Simulated {
  Eigen::MatrixXd raw;      // n x P sampled curves
  std::vector<int> labels;  // in {0, 1}
  Grid grid;
};

/// Random curves f_i = sum_m xi_im phi_m with xi_im ~ Normal(0, 1/m),
/// evaluated on the grid. Deterministic under the seed.
Eigen::MatrixXd generate_kl(int n, BasisKind kind, int m_terms, const Grid& grid,
                            std::uint64_t seed);

/// Class 0 draws curves from the Fourier family, class 1 from the Legendre
/// (polynomial) family; class chosen by a uniform draw above 0.5.
Simulated scenario1(int n, std::uint64_t seed, const SimOptions& opts = {});

/// Scenario-1 curves passed pointwise through sin(2 pi f), noise added after
/// the transform.
Simulated scenario2(int n, std::uint64_t seed, const SimOptions& opts = {});

/// Sinusoids with a uniform random phase; class 1 has amplitude 1, class 0
/// has amplitude 0.6.
Simulated scenario3(int n, std::uint64_t seed, const SimOptions& opts = {});

Simulated simulate_scenario(int scenario, int n, std::uint64_t seed,
                            const SimOptions& opts = {});

/// One U(0,1) level shift per curve (or per sample in per-point mode).
void add_noise(Eigen::MatrixXd& raw, std::mt19937_64& rng, bool per_point = false);

/// Smooth the raw curves with a Fourier basis into a one-covariate dataset.
Dataset to_functional_dataset(const Simulated& sim, int n_fourier = 35);

/// Raw grid values as scalar covariates (conventional-network view).
Dataset to_conventional_dataset(const Simulated& sim);

}  // namespace funcnet
