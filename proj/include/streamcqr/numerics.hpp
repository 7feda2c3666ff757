#pragma once

#include <cmath>
#include <span>
#include <vector>

namespace streamcqr {

/// Neumaier compensated accumulator.
class CompensatedSum {
public:
  void add(double v) noexcept {
    const double t = sum_ + v;
    if (std::abs(sum_) >= std::abs(v)) {
      comp_ += (sum_ - t) + v;
    } else {
      comp_ += (v - t) + sum_;
    }
    sum_ = t;
  }
  double value() const noexcept { return sum_ + comp_; }
  void reset() noexcept { sum_ = comp_ = 0.0; }

private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

/// Polynomial in powers of (x - center); coeffs[k] multiplies (x - center)^k.
struct ShiftedPolynomial {
  double center = 0.0;
  std::vector<double> coeffs;

  double operator()(double x) const noexcept {
    const double t = x - center;
    double acc = 0.0;
    for (auto it = coeffs.rbegin(); it != coeffs.rend(); ++it) acc = acc * t + *it;
    return acc;
  }

  double derivative(double x) const noexcept {
    const double t = x - center;
    double acc = 0.0;
    for (std::size_t k = coeffs.size(); k-- > 1;) acc = acc * t + static_cast<double>(k) * coeffs[k];
    return acc;
  }

  /// Same polynomial re-expanded around a new center.
  ShiftedPolynomial recentered(double new_center) const;

  /// Exact integral over [a, b].
  double integral(double a, double b) const noexcept;
};

/// Coefficients (around `center`) of the interpolating polynomial through (xs[i], ys[i]).
ShiftedPolynomial interpolating_polynomial(std::span<const double> xs, std::span<const double> ys,
                                           double center);

/// Roots of p(x) = level inside the open interval (a, b), assuming p monotone there and
/// the level strictly between p(a) and p(b). Safeguarded Newton.
double solve_monotone(const ShiftedPolynomial& p, double level, double a, double b);

/// Points in (a, b) where the derivative of p changes sign, ascending.
std::vector<double> derivative_sign_changes(const ShiftedPolynomial& p, double a, double b);

}  // namespace streamcqr
