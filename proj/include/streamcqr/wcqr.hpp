#pragma once

#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "streamcqr/cdf_model.hpp"
#include "streamcqr/weights.hpp"

namespace streamcqr {

/// Stieltjes integral of y J(F(y)) dF(y) for the raw interpolant, taken between the last node with
/// F <= min supp J and the first node with F >= max supp J. Decreasing stretches count with negative
/// sign and stencil-switch jumps count as point masses, so the total J mass is exact. Throws
/// LevelSetEmpty if F never meets supp J.
double wcqr_integral(const InterpolatedCDF& cdf, const WeightFunction& J);

/// Several weight functions sharing one pass over the cells.
std::vector<double> wcqr_integrals(const InterpolatedCDF& cdf, std::span<const WeightFunction* const> Js);

enum class CurveKind { Mean, Sd, LowerComponent, UpperComponent, Density, Custom };

/// Values over G_* plus their interpolant. Skipped grid points hold NaN and are left out of the interpolant.
struct CurveEstimate {
  CurveKind kind = CurveKind::Custom;
  std::vector<double> grid;
  std::vector<double> values;
  Interpolant interpolant;
  std::vector<std::size_t> skipped;
  std::vector<std::string> skip_reasons;
  std::vector<std::size_t> partial;  ///< grid points whose node range only partly covers supp J
  int degree = 3;

  /// Builds the interpolant over the grid points with finite values.
  static CurveEstimate from_values(CurveKind kind, std::vector<double> grid, std::vector<double> values, int degree);

  double operator()(double x) const noexcept { return interpolant(x); }
  bool complete() const noexcept { return skipped.empty(); }

  /// a * c1 + b * c2 on the common grid; skipped sets are merged.
  static CurveEstimate combine(double a, const CurveEstimate& c1, double b, const CurveEstimate& c2,
                               CurveKind kind);
};

struct ScalarWeightParams {
  double w_hat = 0.5;
  double theta_hat = 1.0;
  double E_WY = 0.0;
  double E_WL = 0.0;
  double E_WU = 0.0;
  double E_WY2 = 0.0;
  double E_Wm2 = 0.0;
  double E_Wr2 = 0.0;
};

/// Floor on |E_WL - E_WU| and on E_Wr2.
inline constexpr double kSeparationFloor = 1e-8;

enum class MeanMode { Ntm, Bctm };
enum class SdMode { Ntsd, Rtsd };

struct EstimatorOptions {
  bool symmetric_model = false;  ///< theta uses the NTM mean instead of the BCTM mean
  bool lenient = false;          ///< skip failing grid points instead of throwing GridPointError
};

/// Estimation part over a snapshot of a renewable state. Curves for L_alpha and U_alpha are cached.
class Estimator {
public:
  explicit Estimator(RenewableState state, EstimatorOptions options = {});

  const RenewableState& state() const noexcept { return state_; }
  const EstimatorOptions& options() const noexcept { return options_; }

  /// CDF at grid point i; throws GridPointError when it cannot be built.
  const InterpolatedCDF& cdf(std::size_t i) const;

  CurveEstimate curve(const WeightFunction& J, CurveKind kind = CurveKind::Custom) const;
  const CurveEstimate& density() const;
  const CurveEstimate& lower() const;
  const CurveEstimate& upper() const;

  /// Integral over the grid range of W(x) g(x) fhat(x), Simpson on G_* refined 4x.
  double weighted_integral(const std::function<double(double)>& g) const;

  ScalarWeightParams estimate_w() const;
  ScalarWeightParams estimate_theta(const CurveEstimate& mean_curve) const;
  ScalarWeightParams estimate_theta() const;

  CurveEstimate mean(MeanMode mode) const;
  CurveEstimate sd(SdMode mode) const;
  CurveEstimate sd(SdMode mode, MeanMode mean_mode) const;

private:
  void build_components() const;
  CurveEstimate finish(std::vector<double> values, std::vector<std::size_t> skipped,
                       std::vector<std::string> reasons, std::vector<std::size_t> partial, CurveKind kind) const;

  RenewableState state_;
  EstimatorOptions options_;
  std::vector<std::optional<InterpolatedCDF>> cdfs_;
  std::vector<std::string> cdf_errors_;
  mutable std::optional<CurveEstimate> density_;
  mutable std::optional<CurveEstimate> lower_;
  mutable std::optional<CurveEstimate> upper_;
};

CurveEstimate curve_estimate(const RenewableState& state, const WeightFunction& J);
CurveEstimate interpolated_density(const RenewableState& state);
ScalarWeightParams estimate_w(const RenewableState& state);
ScalarWeightParams estimate_theta(const RenewableState& state, const CurveEstimate& mean_curve);
CurveEstimate estimate_mean(const RenewableState& state, MeanMode mode);
CurveEstimate estimate_sd(const RenewableState& state, SdMode mode, MeanMode mean_mode);

}  // namespace streamcqr
