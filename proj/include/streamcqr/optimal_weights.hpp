#pragma once

#include <array>

#include "streamcqr/error_law.hpp"
#include "streamcqr/weights.hpp"

namespace streamcqr {

enum class Target { Mean, Sd };

/// Double integral over [utau, btau]^2 of (min(s,t) - s t) J(s) J(t) / (f(F^-1(s)) f(F^-1(t))).
double variance_functional(const WeightFunction& J, const ErrorLaw& law, double utau, double btau);

/// Psi_1 = -(log f)''(F^-1(tau)); Psi_2 = -(y log f)''(F^-1(tau)).
double psi_basis(int i, double tau, const ErrorLaw& law);

struct OptimalWeightSolution {
  WeightFunction J_star;
  double C1 = 0.0;
  double C2 = 0.0;
  std::array<std::array<double, 2>, 2> A{};  ///< A[k][j-1] = int (F^-1)^k Psi_j
  double V_star = 0.0;
};

/// Number of tau samples used to materialize J*.
inline constexpr int kOptimalWeightSamples = 400;

OptimalWeightSolution optimal_weight(Target z, const ErrorLaw& law, double utau, double btau);

}  // namespace streamcqr
