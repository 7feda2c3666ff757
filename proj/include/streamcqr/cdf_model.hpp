#pragma once

#include <cstddef>
#include <utility>
#include <vector>

#include "streamcqr/lpi.hpp"
#include "streamcqr/renewable.hpp"

namespace streamcqr {

/// Sub-points per inter-node interval for scans and quadrature.
inline constexpr int kMeshPerInterval = 40;

/// Densities below this value make S/fX unreliable: 1e-6 of the uniform density on the domain.
double density_floor(const StateConfig& config) noexcept;

/// Interpolated conditional CDF at one covariate grid point. Immutable.
class InterpolatedCDF {
public:
  InterpolatedCDF(std::vector<double> nodes, std::vector<double> node_values, int degree,
                  std::size_t clamped_nodes = 0);

  /// Interpolant clamped to [0, 1].
  double operator()(double y) const noexcept;
  double raw(double y) const noexcept { return interp_(y); }
  /// Derivative of the interpolant, floored at 0.
  double density(double y) const noexcept;

  const Interpolant& interpolant() const noexcept { return interp_; }
  double lo() const noexcept { return interp_.lo(); }
  double hi() const noexcept { return interp_.hi(); }

  std::size_t clamped_nodes() const noexcept { return clamped_; }
  /// Segments on which the fitted polynomial decreases somewhere.
  std::size_t nonmonotone_segments() const noexcept { return nonmonotone_; }

  /// Evaluation mesh: every node plus kMeshPerInterval - 1 interior points per interval.
  std::vector<double> mesh() const;

  /// Smallest interval containing {y : utau <= F(y) <= btau} within the node range.
  /// Throws LevelSetEmpty when no such y exists.
  std::pair<double, double> support_preimage(double utau, double btau) const;

  /// True when [utau, btau] is not fully covered: F(lo) > utau or F(hi) < btau.
  bool partial_coverage(double utau, double btau) const noexcept;

private:
  Interpolant interp_;
  std::size_t clamped_ = 0;
  std::size_t nonmonotone_ = 0;
};

/// F(y_ij) = clamp(S_ij / fX_i, 0, 1) interpolated over the node set of grid point i.
InterpolatedCDF build_cdf(const RenewableState& state, std::size_t i);

}  // namespace streamcqr
