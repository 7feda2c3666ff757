#include "streamcqr/lpi.hpp"

#include <algorithm>
#include <cmath>

#include "streamcqr/errors.hpp"

namespace streamcqr {

void validate_nodes(std::span<const double> nodes, int degree) {
  if (degree < 0) throw InvalidArgument("interpolation degree must be nonnegative");
  if (nodes.size() < static_cast<std::size_t>(degree) + 1) {
    throw InvalidArgument("need at least degree + 1 interpolation nodes");
  }
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    if (!std::isfinite(nodes[i])) throw InvalidArgument("interpolation nodes must be finite");
    if (i > 0 && !(nodes[i] > nodes[i - 1])) throw InvalidArgument("interpolation nodes must be strictly increasing");
  }
}

namespace {

// Window [s, s + count) moves to s + 1 exactly when y is strictly closer to nodes[s + count]
// than to nodes[s], i.e. when y > (nodes[s] + nodes[s + count]) / 2; midpoints increase in s.
std::size_t window_start(double y, std::span<const double> nodes, std::size_t count) {
  const std::size_t n = nodes.size();
  if (count == 0 || count >= n) return 0;
  std::size_t lo = 0, hi = n - count;  // answer in [0, n - count]
  while (lo < hi) {
    const std::size_t s = lo + (hi - lo) / 2;
    if (0.5 * (nodes[s] + nodes[s + count]) < y) {
      lo = s + 1;
    } else {
      hi = s;
    }
  }
  return lo;
}

}  // namespace

std::vector<std::size_t> nearest_nodes(double y, std::span<const double> nodes, std::size_t count) {
  if (count > nodes.size()) throw InvalidArgument("nearest_nodes: count exceeds node count");
  const std::size_t s = window_start(y, nodes, count);
  std::vector<std::size_t> out(count);
  for (std::size_t k = 0; k < count; ++k) out[k] = s + k;
  return out;
}

std::size_t stencil_start(double y, std::span<const double> nodes, int degree) {
  return window_start(y, nodes, static_cast<std::size_t>(degree) + 1);
}

double lpi_basis(double y, std::size_t i, std::span<const double> nodes, int degree) {
  if (i >= nodes.size()) throw InvalidArgument("lpi_basis: node index out of range");
  const std::size_t s = stencil_start(y, nodes, degree);
  const std::size_t e = s + static_cast<std::size_t>(degree);
  if (i < s || i > e) return 0.0;
  double v = 1.0;
  for (std::size_t j = s; j <= e; ++j)
    if (j != i) v *= (y - nodes[j]) / (nodes[i] - nodes[j]);
  return v;
}

double error_bound(double max_deriv, double spacing, int degree) {
  return max_deriv * std::pow(spacing, degree + 1);
}

Interpolant::Interpolant(std::vector<double> nodes, std::vector<double> values, int degree)
    : nodes_(std::move(nodes)), values_(std::move(values)) {
  if (nodes_.empty() || nodes_.size() != values_.size()) {
    throw InvalidArgument("interpolant: nodes and values must be nonempty and of equal size");
  }
  degree_ = std::min<int>(degree, static_cast<int>(nodes_.size()) - 1);
  validate_nodes(nodes_, degree_);
  const std::size_t n = nodes_.size(), w = static_cast<std::size_t>(degree_) + 1;
  std::vector<double> cuts{nodes_.front()};
  for (std::size_t s = 0; s + w < n; ++s) cuts.push_back(0.5 * (nodes_[s] + nodes_[s + w]));
  cuts.push_back(nodes_.back());
  segments_.reserve(cuts.size() - 1);
  for (std::size_t k = 0; k + 1 < cuts.size(); ++k) {
    std::span<const double> xs(&nodes_[k], w), ys(&values_[k], w);
    segments_.push_back(Segment{cuts[k], cuts[k + 1], k, interpolating_polynomial(xs, ys, cuts[k])});
  }
  if (n == 1) segments_.front().hi = nodes_.front();
}

double Interpolant::evaluate(double y) const noexcept {
  const std::size_t s = stencil_start(y, nodes_, degree_);
  const std::size_t e = s + static_cast<std::size_t>(degree_);
  double acc = 0.0;
  for (std::size_t i = s; i <= e; ++i) {
    double l = 1.0;
    for (std::size_t j = s; j <= e; ++j)
      if (j != i) l *= (y - nodes_[j]) / (nodes_[i] - nodes_[j]);
    acc += values_[i] * l;
  }
  return acc;
}

const Interpolant::Segment& Interpolant::segment_at(double y) const noexcept {
  const std::size_t s = stencil_start(y, nodes_, degree_);
  return segments_[std::min(s, segments_.size() - 1)];
}

double Interpolant::derivative(double y) const noexcept { return segment_at(y).poly.derivative(y); }

double Interpolant::max_spacing() const noexcept {
  double d = 0.0;
  for (std::size_t i = 1; i < nodes_.size(); ++i) d = std::max(d, nodes_[i] - nodes_[i - 1]);
  return d;
}

double Interpolant::integral(double a, double b) const noexcept {
  double s = 0.0;
  for (const auto& seg : segments_) {
    const double lo = std::max(a, seg.lo), hi = std::min(b, seg.hi);
    if (lo < hi) s += seg.poly.integral(lo, hi);
  }
  return s;
}

}  // namespace streamcqr
