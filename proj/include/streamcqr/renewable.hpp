#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "streamcqr/bandwidth.hpp"
#include "streamcqr/kernel.hpp"
#include "streamcqr/piecewise.hpp"

namespace streamcqr {

struct Interval {
  double lo = 0.0;
  double hi = 1.0;
  double length() const noexcept { return hi - lo; }
  bool contains(double x) const noexcept { return x >= lo && x <= hi; }
  friend bool operator==(const Interval&, const Interval&) = default;
};

/// Indicator of the closed interval as a piecewise polynomial.
PiecewisePolynomial indicator(const Interval& I);

/// Structural settings fixed at initialization.
struct StateConfig {
  Interval domain;  ///< I_*
  Kernel kernel;
  int degree = 3;
  double alpha = 0.1;
  PiecewisePolynomial W;  ///< covariate weight; empty means the indicator of the domain
};

/// A batch of (x, y) observations.
struct Chunk {
  std::vector<double> x;
  std::vector<double> y;

  std::size_t size() const noexcept { return x.size(); }
  bool empty() const noexcept { return x.empty(); }
  void push_back(double xv, double yv) {
    x.push_back(xv);
    y.push_back(yv);
  }
};

/// Throws DataError on size mismatch or non-finite values.
void validate_chunk(const Chunk& chunk);

/// Cumulative statistics; all accumulators are running means over N samples.
struct RenewableState {
  StateConfig config;
  std::vector<double> grid;                ///< G_*
  std::vector<std::vector<double>> nodes;  ///< G_{x_i}
  std::uint64_t N = 0;
  std::vector<double> fX;              ///< kernel density at x_i
  std::vector<std::vector<double>> S;  ///< sub-CDF at (x_i, y_ij)
  double E_WY = 0.0;
  double E_WY2 = 0.0;
  BandwidthState bandwidth;
  std::uint64_t fingerprint = 0;

  std::size_t grid_size() const noexcept { return grid.size(); }
};

RenewableState init_state(std::vector<double> grid, std::vector<std::vector<double>> nodes, StateConfig config,
                          BandwidthState bandwidth = {});

/// FNV-1a hash of grid, nodes, kernel, degree, alpha and W.
std::uint64_t config_fingerprint(const RenewableState& state);

/// Applies one chunk with a common bandwidth. An empty chunk is a no-op.
void update_chunk(RenewableState& state, const Chunk& chunk, double h);

/// Applies one chunk with a bandwidth per grid point.
void update_chunk(RenewableState& state, const Chunk& chunk, std::span<const double> h_per_point);

/// Draws the next bandwidth(s) from state.bandwidth and applies the chunk. Returns the common
/// bandwidth, or the mean of the per-point bandwidths in variable mode. Empty chunks return 0.
double ingest(RenewableState& state, const Chunk& chunk);

/// W evaluated with the state's convention.
double covariate_weight(const StateConfig& config, double x) noexcept;

}  // namespace streamcqr
