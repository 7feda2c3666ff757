#include "streamcqr/cdf_model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "streamcqr/errors.hpp"

namespace streamcqr {

double density_floor(const StateConfig& config) noexcept { return 1e-6 / config.domain.length(); }

InterpolatedCDF::InterpolatedCDF(std::vector<double> nodes, std::vector<double> node_values, int degree,
                                 std::size_t clamped_nodes)
    : interp_(std::move(nodes), std::move(node_values), degree), clamped_(clamped_nodes) {
  for (const auto& seg : interp_.segments()) {
    if (!(seg.hi > seg.lo)) continue;
    // an interior sign change of the derivative implies a decreasing stretch
    if (seg.poly.derivative(seg.lo) < 0.0 || seg.poly.derivative(seg.hi) < 0.0 ||
        !derivative_sign_changes(seg.poly, seg.lo, seg.hi).empty()) {
      ++nonmonotone_;
    }
  }
}

double InterpolatedCDF::operator()(double y) const noexcept { return std::clamp(interp_(y), 0.0, 1.0); }

double InterpolatedCDF::density(double y) const noexcept {
  const double v = interp_(y);
  if (v < 0.0 || v > 1.0) return 0.0;
  return std::max(0.0, interp_.derivative(y));
}

std::vector<double> InterpolatedCDF::mesh() const {
  const auto& y = interp_.nodes();
  std::vector<double> out;
  out.reserve((y.size() - 1) * kMeshPerInterval + 1);
  for (std::size_t k = 0; k + 1 < y.size(); ++k) {
    for (int m = 0; m < kMeshPerInterval; ++m) out.push_back(y[k] + (y[k + 1] - y[k]) * m / kMeshPerInterval);
  }
  out.push_back(y.back());
  return out;
}

bool InterpolatedCDF::partial_coverage(double utau, double btau) const noexcept {
  return (*this)(lo()) > utau || (*this)(hi()) < btau;
}

std::pair<double, double> InterpolatedCDF::support_preimage(double utau, double btau) const {
  if (!(utau >= 0.0 && utau < btau && btau <= 1.0)) throw InvalidArgument("support_preimage: need 0 <= utau < btau <= 1");
  const auto ys = mesh();
  std::vector<double> F(ys.size());
  for (std::size_t k = 0; k < ys.size(); ++k) F[k] = (*this)(ys[k]);
  auto in_band = [&](double v) { return v >= utau && v <= btau; };
  auto refine = [&](double out_y, double in_y) {
    // boundary of the band between an outside and an inside point
    for (int it = 0; it < 80; ++it) {
      const double mid = 0.5 * (out_y + in_y);
      if (mid == out_y || mid == in_y) break;
      (in_band((*this)(mid)) ? in_y : out_y) = mid;
    }
    return in_y;
  };
  auto crossing = [&](std::size_t k) -> double {
    // band jumped over between mesh points k and k+1; locate a level inside it
    const double level = 0.5 * (utau + btau);
    double a = ys[k], b = ys[k + 1];
    const bool up = F[k] < level;
    for (int it = 0; it < 80; ++it) {
      const double mid = 0.5 * (a + b);
      const double v = (*this)(mid);
      if (in_band(v)) return mid;
      ((v < level) == up ? a : b) = mid;
    }
    return std::numeric_limits<double>::quiet_NaN();
  };

  std::size_t first = ys.size(), last = ys.size();
  for (std::size_t k = 0; k < ys.size(); ++k) {
    if (in_band(F[k])) {
      if (first == ys.size()) first = k;
      last = k;
    }
  }
  double lo_y = std::numeric_limits<double>::quiet_NaN(), hi_y = lo_y;
  if (first < ys.size()) {
    lo_y = first > 0 ? refine(ys[first - 1], ys[first]) : ys[first];
    hi_y = last + 1 < ys.size() ? refine(ys[last + 1], ys[last]) : ys[last];
  }
  // band crossings strictly between mesh points can extend either end
  for (std::size_t k = 0; k + 1 < ys.size(); ++k) {
    const bool jump = (F[k] < utau && F[k + 1] > btau) || (F[k] > btau && F[k + 1] < utau);
    if (!jump) continue;
    const double c = crossing(k);
    if (std::isnan(c)) continue;
    if (std::isnan(lo_y) || c < lo_y) lo_y = c;
    if (std::isnan(hi_y) || c > hi_y) hi_y = c;
  }
  if (std::isnan(lo_y)) throw LevelSetEmpty("conditional CDF never enters the weight support");
  return {lo_y, hi_y};
}

InterpolatedCDF build_cdf(const RenewableState& st, std::size_t i) {
  if (i >= st.grid.size()) throw InvalidArgument("build_cdf: grid index out of range");
  if (st.N == 0) throw StateError("build_cdf: no data has been ingested");
  const double f = st.fX[i];
  if (!(f >= density_floor(st.config))) throw DensityTooSmall("covariate density below floor");
  std::vector<double> v(st.S[i].size());
  std::size_t clamped = 0;
  for (std::size_t j = 0; j < v.size(); ++j) {
    const double r = st.S[i][j] / f;
    v[j] = std::clamp(r, 0.0, 1.0);
    if (v[j] != r) ++clamped;
  }
  return InterpolatedCDF(st.nodes[i], std::move(v), st.config.degree, clamped);
}

}  // namespace streamcqr
