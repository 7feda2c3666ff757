#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "streamcqr/numerics.hpp"

namespace streamcqr {

/// Throws InvalidArgument unless nodes are finite, strictly increasing and at least degree + 1.
void validate_nodes(std::span<const double> nodes, int degree);

/// Indices of the `count` nodes nearest to y; on equal distance the smaller node wins.
/// The result is a contiguous ascending index range.
std::vector<std::size_t> nearest_nodes(double y, std::span<const double> nodes, std::size_t count);

/// First index of the nearest-(degree+1) stencil around y.
std::size_t stencil_start(double y, std::span<const double> nodes, int degree);

/// Lagrange basis of node i restricted to the active stencil at y.
double lpi_basis(double y, std::size_t i, std::span<const double> nodes, int degree);

/// max_deriv * spacing^(degree+1).
double error_bound(double max_deriv, double spacing, int degree);

/// Degree-l local polynomial interpolant. Immutable.
class Interpolant {
public:
  struct Segment {
    double lo;
    double hi;
    std::size_t start;
    ShiftedPolynomial poly;  ///< centered at lo
  };

  Interpolant() = default;
  /// Degree is clamped to nodes.size() - 1.
  Interpolant(std::vector<double> nodes, std::vector<double> values, int degree);

  double operator()(double y) const noexcept { return evaluate(y); }
  double evaluate(double y) const noexcept;
  double derivative(double y) const noexcept;

  bool in_range(double y) const noexcept { return y >= nodes_.front() && y <= nodes_.back(); }
  double lo() const noexcept { return nodes_.front(); }
  double hi() const noexcept { return nodes_.back(); }
  double max_spacing() const noexcept;

  const std::vector<double>& nodes() const noexcept { return nodes_; }
  const std::vector<double>& values() const noexcept { return values_; }
  int degree() const noexcept { return degree_; }

  /// Polynomial pieces covering [lo(), hi()], split at stencil switch points.
  const std::vector<Segment>& segments() const noexcept { return segments_; }
  const Segment& segment_at(double y) const noexcept;

  /// Exact integral of the interpolant over [a, b] within the node range.
  double integral(double a, double b) const noexcept;

private:
  std::vector<double> nodes_;
  std::vector<double> values_;
  int degree_ = 0;
  std::vector<Segment> segments_;
};

}  // namespace streamcqr
