#pragma once

#include "streamcqr/piecewise.hpp"

namespace streamcqr {

/// Weight function J on [0, 1]; zero outside its pieces.
using WeightFunction = PiecewisePolynomial;

enum class TrimSide { Lower, Upper };

/// Throws InvalidArgument unless every piece lies inside [0, 1].
void validate_weight(const WeightFunction& J);

/// L_alpha = I[alpha <= tau <= 1/2] / (1/2 - alpha); U_alpha = I[1/2 < tau <= 1 - alpha] / (1/2 - alpha).
WeightFunction trimmed_component(double alpha, TrimSide side);

/// J_{m,w} = w L_alpha + (1 - w) U_alpha. Integrates to 1.
WeightFunction mean_weight(double alpha, double w);

/// J_{sigma,theta} = theta (U_alpha - L_alpha). Integrates to 0.
WeightFunction sd_weight(double alpha, double theta);

/// Integral of J(tau) g(tau) where g is given in closed form; used for constraint checks.
template <class G>
double weighted_integral(const WeightFunction& J, G&& g, int panels_per_piece = 64);

}  // namespace streamcqr

#include <boost/math/quadrature/gauss.hpp>

namespace streamcqr {

template <class G>
double weighted_integral(const WeightFunction& J, G&& g, int panels_per_piece) {
  using boost::math::quadrature::gauss;
  double s = 0.0;
  for (const auto& p : J.pieces()) {
    const double w = (p.hi - p.lo) / panels_per_piece;
    for (int k = 0; k < panels_per_piece; ++k) {
      const double a = p.lo + k * w, b = (k + 1 == panels_per_piece) ? p.hi : a + w;
      s += gauss<double, 10>::integrate([&](double t) { return p.poly(t) * g(t); }, a, b);
    }
  }
  return s;
}

}  // namespace streamcqr
