#pragma once

#include <cstddef>
#include <vector>

#include "streamcqr/renewable.hpp"

namespace streamcqr {

/// rho_tau(u) = u (tau - I(u <= 0)).
double check_loss(double u, double tau) noexcept;

/// Levels j / (count + 1), j = 1..count.
std::vector<double> uniform_taus(std::size_t count);

/// Evenly spaced grid of `size` points over [lo, hi]; a single point sits at the midpoint.
std::vector<double> even_grid(const Interval& I, std::size_t size);

/// Indices of the k validation points nearest to x (ties prefer the smaller covariate).
std::vector<std::size_t> nearest_covariates(double x, const Chunk& data, std::size_t k);

/// Minimizer of sum rho_tau(y_q - c) over c: the order statistic of rank ceil(k tau) (lower one on ties).
double sample_quantile(std::vector<double> ys, double tau);

/// Sample tau-quantile of the responses of the k nearest covariate neighbours of x.
double local_quantile(double x, const Chunk& data, double tau, std::size_t k);

struct PilotConfig {
  Interval domain{0.0, 1.0};
  std::size_t grid_size = 100;
  std::vector<double> taus = uniform_taus(99);
  int degree = 3;
  /// k = max(neighbour_fraction * #data, #taus)
  double neighbour_fraction = 0.1;
};

struct PilotGrids {
  std::vector<double> grid;
  std::vector<std::vector<double>> nodes;
  std::size_t jittered = 0;  ///< node sets that needed jitter to reach degree + 1 distinct nodes
};

PilotGrids build_grids(const Chunk& validation, const PilotConfig& config);

/// Strictly increasing node set from sorted quantiles: duplicates dropped, then jitter if fewer than
/// min_size distinct values remain.
std::vector<double> dedup_nodes(std::vector<double> sorted_values, std::size_t min_size, bool* jittered = nullptr);

}  // namespace streamcqr
