#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "streamcqr/error_law.hpp"
#include "streamcqr/kernel.hpp"
#include "streamcqr/weights.hpp"

namespace streamcqr {

enum class BandwidthMode { Oracle, Renewable };

/// Running bandwidth schedule. In oracle mode every chunk uses C_h^(1/5) N_total^(-1/5).
/// With per-point constants (C_h_x nonempty) the same recursion runs per grid point.
struct BandwidthState {
  BandwidthMode mode = BandwidthMode::Renewable;
  double C_h = 1.0;
  std::uint64_t N_total = 0;
  double S_h = 0.0;
  double last_h = 0.0;
  std::uint64_t t = 0;
  std::vector<double> C_h_x;
  std::vector<double> S_h_x;
  std::vector<double> last_h_x;

  bool variable() const noexcept { return !C_h_x.empty(); }
};

/// (B sum n_s h_s^2 / N)^2 + (1/N) sum n_s / (N h_s) Sigma.
double error_function(std::span<const double> H, std::span<const double> n, double B, double Sigma);

/// h^4 B^2 + Sigma / (n_t h) + 2 h^2 B^2 sum_{s<t} n_s h_s^2 / n_t.
double error_increment(double h_t, double n_t, std::span<const double> H_prev, std::span<const double> n_prev,
                       double B, double Sigma);

double oracle_bandwidth(double C_h, double N_total);

/// Next constant bandwidth; advances the state. Requires n_t >= 1.
double next_bandwidth(BandwidthState& bw, std::uint64_t n_t);

/// Next per-grid-point bandwidths for variable mode; advances the state.
std::vector<double> next_variable_bandwidths(BandwidthState& bw, std::uint64_t n_t);

/// Solves h^3 (S_prev + n_t h^2) = C_h for h > 0.
double fixed_point_bandwidth(double C_h, double S_prev, double n_t);

/// Analytic description of a location-scale regression model at the covariate level.
struct ModelOracle {
  std::function<double(double)> m, dm, d2m;
  std::function<double(double)> sigma, dsigma, d2sigma;
  std::function<double(double)> fx, dfx;
};

struct AsymptoticConstants {
  double B_mx = 0.0;
  double Sigma_mx = 0.0;
  double C_h_x = 0.0;
};

/// Dominant bias and variance constants of the WCQR curve at x with error law `law`.
AsymptoticConstants asymptotic_constants(const ModelOracle& model, const ErrorLaw& law, const WeightFunction& J,
                                         double x, const KernelMoments& moments);

}  // namespace streamcqr
