#pragma once

#include <vector>

#include "streamcqr/numerics.hpp"

namespace streamcqr {

/// One polynomial piece on (lo, hi], or on [lo, hi] when lo_closed is set.
struct PolyPiece {
  double lo = 0.0;
  double hi = 0.0;
  bool lo_closed = false;
  ShiftedPolynomial poly;

  bool contains(double x) const noexcept { return (x > lo || (lo_closed && x == lo)) && x <= hi; }
};

/// Piecewise polynomial, zero outside its pieces. Pieces are sorted and disjoint.
class PiecewisePolynomial {
public:
  PiecewisePolynomial() = default;
  explicit PiecewisePolynomial(std::vector<PolyPiece> pieces);

  static PiecewisePolynomial constant(double lo, double hi, double value, bool lo_closed = true);

  double operator()(double x) const noexcept;
  const PolyPiece* piece_at(double x) const noexcept;
  const std::vector<PolyPiece>& pieces() const noexcept { return pieces_; }
  bool empty() const noexcept { return pieces_.empty(); }

  /// Sorted distinct piece endpoints.
  std::vector<double> breakpoints() const;
  double support_lo() const noexcept;
  double support_hi() const noexcept;

  double integral() const noexcept;
  double integral(double a, double b) const noexcept;
  /// Exact integral of x^k times this function.
  double moment(int k) const;

  PiecewisePolynomial scaled(double s) const;
  /// a*f + b*g on the union of both breakpoint sets.
  static PiecewisePolynomial combine(double a, const PiecewisePolynomial& f, double b,
                                     const PiecewisePolynomial& g);

private:
  std::vector<PolyPiece> pieces_;
};

}  // namespace streamcqr
