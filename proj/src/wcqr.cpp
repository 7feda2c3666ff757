#include "streamcqr/wcqr.hpp"

#include <algorithm>
#include <cmath>

#include "streamcqr/errors.hpp"
#include "streamcqr/numerics.hpp"

namespace streamcqr {

std::vector<double> wcqr_integrals(const InterpolatedCDF& cdf, std::span<const WeightFunction* const> Js) {
  const std::size_t nJ = Js.size();
  std::vector<double> levels{0.0, 1.0};
  for (const auto* J : Js)
    for (double b : J->breakpoints())
      if (b > 0.0 && b < 1.0) levels.push_back(b);
  std::sort(levels.begin(), levels.end());
  levels.erase(std::unique(levels.begin(), levels.end()), levels.end());

  // int y J(F) dF = y0 int J(F) dF + int (y - y0) J(F) dF; the offset form keeps tight node sets far
  // from the origin free of cancellation.
  std::vector<CompensatedSum> sums(nJ), masses(nJ);
  std::vector<char> touched(nJ, 0);
  auto note_band = [&](double fa, double fb) {
    for (std::size_t j = 0; j < nJ; ++j) {
      const double lo = Js[j]->support_lo(), hi = Js[j]->support_hi();
      const bool in_a = fa >= lo && fa <= hi, in_b = fb >= lo && fb <= hi;
      const bool jump = (fa < lo && fb > hi) || (fa > hi && fb < lo);
      if (in_a || in_b || jump) touched[j] = 1;
    }
  };

  // Piecewise-constant J with a cubic-or-lower interpolant makes each cell integrand a cubic, on which
  // Simpson is exact, so the fine mesh adds nothing.
  bool constant_pieces = cdf.interpolant().degree() <= 3;
  for (const auto* J : Js)
    for (const auto& piece : J->pieces())
      for (std::size_t k = 1; k < piece.poly.coeffs.size(); ++k)
        if (piece.poly.coeffs[k] != 0.0) constant_pieces = false;
  const auto mesh = constant_pieces ? std::vector<double>{} : cdf.mesh();

  // Node values are nondecreasing, so the band [band_lo, band_hi] is crossed between the last node at or
  // below band_lo and the first node at or above band_hi. Excursions of the interpolant into the band
  // outside that bracket are interpolation artifacts and are not integrated.
  double band_lo = 1.0, band_hi = 0.0;
  for (const auto* J : Js) {
    if (J->empty()) continue;
    band_lo = std::min(band_lo, J->support_lo());
    band_hi = std::max(band_hi, J->support_hi());
  }
  if (band_lo > band_hi) return std::vector<double>(nJ, 0.0);
  const auto& nodes = cdf.interpolant().nodes();
  const auto& vals = cdf.interpolant().values();
  std::size_t ia = 0, ib = vals.size() - 1;
  for (std::size_t j = 0; j < vals.size(); ++j)
    if (vals[j] <= band_lo) ia = j;
  for (std::size_t j = vals.size(); j-- > 0;)
    if (vals[j] >= band_hi) ib = j;
  const double ya = nodes[ia], yb = nodes[ib];
  // fixed per CDF so batched and single integrals agree bit for bit
  const double y0 = nodes[nodes.size() / 2];

  std::vector<double> pts, cuts;
  const auto& segs = cdf.interpolant().segments();
  for (std::size_t k = 0; k < segs.size(); ++k) {
    const auto& seg = segs[k];
    const auto& p = seg.poly;
    const double lo = std::max(seg.lo, ya), hi = std::min(seg.hi, yb);
    if (!(hi > lo)) continue;
    if (k > 0 && seg.lo > ya) {
      // Stencil switch: the jump of F is a point mass of dF at the cut.
      const double before = std::clamp(segs[k - 1].poly(seg.lo), 0.0, 1.0);
      const double after = std::clamp(p(seg.lo), 0.0, 1.0);
      if (before != after) {
        note_band(before, after);
        const double sign = after > before ? 1.0 : -1.0;
        for (std::size_t j = 0; j < nJ; ++j) {
          const double mass = sign * Js[j]->integral(std::min(before, after), std::max(before, after));
          sums[j].add((seg.lo - y0) * mass);
          masses[j].add(mass);
        }
      }
    }
    pts.clear();
    pts.push_back(lo);
    auto first = std::upper_bound(mesh.begin(), mesh.end(), lo);
    for (auto it = first; it != mesh.end() && *it < hi; ++it) pts.push_back(*it);
    for (double r : derivative_sign_changes(p, lo, hi)) pts.push_back(r);
    pts.push_back(hi);
    std::sort(pts.begin(), pts.end());
    pts.erase(std::unique(pts.begin(), pts.end()), pts.end());

    for (std::size_t c = 0; c + 1 < pts.size(); ++c) {
      const double a = pts[c], b = pts[c + 1];
      const double pa = p(a), pb = p(b);
      note_band(std::clamp(pa, 0.0, 1.0), std::clamp(pb, 0.0, 1.0));
      // Signed dF: decreasing cells cancel the matching rise, so total mass stays F(b) - F(a).
      const double flo = std::min(pa, pb), fhi = std::max(pa, pb);
      if (!(fhi > flo) || fhi <= 0.0 || flo >= 1.0) continue;
      cuts.clear();
      cuts.push_back(a);
      for (double lv : levels)
        if (lv > flo && lv < fhi) cuts.push_back(solve_monotone(p, lv, a, b));
      cuts.push_back(b);
      std::sort(cuts.begin(), cuts.end());
      for (std::size_t k = 0; k + 1 < cuts.size(); ++k) {
        const double c0 = cuts[k], c1 = cuts[k + 1];
        if (!(c1 > c0)) continue;
        const double ym = 0.5 * (c0 + c1);
        const double pm = p(ym);
        if (pm <= 0.0 || pm >= 1.0) continue;
        const double p0 = p(c0), p1 = p(c1);
        const double d0 = p.derivative(c0), dm = p.derivative(ym), d1 = p.derivative(c1);
        for (std::size_t j = 0; j < nJ; ++j) {
          const PolyPiece* piece = Js[j]->piece_at(pm);
          if (!piece) continue;
          const double g0 = (c0 - y0) * piece->poly(p0) * d0;
          const double gm = (ym - y0) * piece->poly(pm) * dm;
          const double g1 = (c1 - y0) * piece->poly(p1) * d1;
          sums[j].add((c1 - c0) / 6.0 * (g0 + 4.0 * gm + g1));
          // the cell is monotone and inside one piece of J
          const double lo_f = std::clamp(std::min(p0, p1), piece->lo, piece->hi);
          const double hi_f = std::clamp(std::max(p0, p1), piece->lo, piece->hi);
          masses[j].add((p1 >= p0 ? 1.0 : -1.0) * Js[j]->integral(lo_f, hi_f));
        }
      }
    }
  }
  std::vector<double> out(nJ);
  for (std::size_t j = 0; j < nJ; ++j) {
    if (!touched[j]) throw LevelSetEmpty("conditional CDF never enters the weight support");
    out[j] = y0 * masses[j].value() + sums[j].value();
  }
  return out;
}

double wcqr_integral(const InterpolatedCDF& cdf, const WeightFunction& J) {
  const WeightFunction* js[] = {&J};
  return wcqr_integrals(cdf, js).front();
}

CurveEstimate CurveEstimate::from_values(CurveKind kind, std::vector<double> grid, std::vector<double> values,
                                         int degree) {
  CurveEstimate c;
  c.kind = kind;
  c.degree = degree;
  std::vector<double> xs, vs;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (std::isfinite(values[i])) {
      xs.push_back(grid[i]);
      vs.push_back(values[i]);
    } else {
      c.skipped.push_back(i);
    }
  }
  if (xs.empty()) throw StateError("no grid point could be estimated");
  c.interpolant = Interpolant(std::move(xs), std::move(vs), degree);
  c.grid = std::move(grid);
  c.values = std::move(values);
  return c;
}

CurveEstimate CurveEstimate::combine(double a, const CurveEstimate& c1, double b, const CurveEstimate& c2,
                                     CurveKind kind) {
  if (c1.grid != c2.grid) throw InvalidArgument("combine: curves live on different grids");
  std::vector<double> v(c1.values.size());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = a * c1.values[i] + b * c2.values[i];
  auto out = from_values(kind, c1.grid, std::move(v), c1.degree);
  std::vector<std::string> reasons;
  for (std::size_t i : out.skipped) {
    std::string r;
    for (const auto* c : {&c1, &c2}) {
      auto it = std::find(c->skipped.begin(), c->skipped.end(), i);
      if (it != c->skipped.end() && r.empty()) r = c->skip_reasons[static_cast<std::size_t>(it - c->skipped.begin())];
    }
    reasons.push_back(r);
  }
  out.skip_reasons = std::move(reasons);
  std::set_union(c1.partial.begin(), c1.partial.end(), c2.partial.begin(), c2.partial.end(),
                 std::back_inserter(out.partial));
  return out;
}

Estimator::Estimator(RenewableState state, EstimatorOptions options)
    : state_(std::move(state)), options_(options) {
  if (state_.N == 0) throw StateError("estimation requested before any data was ingested");
  const std::size_t q = state_.grid.size();
  cdfs_.resize(q);
  cdf_errors_.resize(q);
  for (std::size_t i = 0; i < q; ++i) {
    try {
      cdfs_[i].emplace(build_cdf(state_, i));
    } catch (const Error& e) {
      cdf_errors_[i] = e.what();
    }
  }
}

const InterpolatedCDF& Estimator::cdf(std::size_t i) const {
  if (i >= cdfs_.size()) throw InvalidArgument("grid index out of range");
  if (!cdfs_[i]) throw GridPointError(i, cdf_errors_[i]);
  return *cdfs_[i];
}

CurveEstimate Estimator::finish(std::vector<double> values, std::vector<std::size_t> skipped,
                                std::vector<std::string> reasons, std::vector<std::size_t> partial,
                                CurveKind kind) const {
  auto c = CurveEstimate::from_values(kind, state_.grid, std::move(values), state_.config.degree);
  c.skipped = std::move(skipped);
  c.skip_reasons = std::move(reasons);
  c.partial = std::move(partial);
  return c;
}

CurveEstimate Estimator::curve(const WeightFunction& J, CurveKind kind) const {
  const std::size_t q = state_.grid.size();
  std::vector<double> values(q, std::numeric_limits<double>::quiet_NaN());
  std::vector<std::size_t> skipped, partial;
  std::vector<std::string> reasons;
  for (std::size_t i = 0; i < q; ++i) {
    try {
      const auto& F = cdf(i);
      values[i] = wcqr_integral(F, J);
      if (F.partial_coverage(J.support_lo(), J.support_hi())) partial.push_back(i);
    } catch (const GridPointError& e) {
      if (!options_.lenient) throw;
      skipped.push_back(i);
      reasons.push_back(e.what());
    } catch (const Error& e) {
      if (!options_.lenient) throw GridPointError(i, e.what());
      skipped.push_back(i);
      reasons.push_back(e.what());
    }
  }
  return finish(std::move(values), std::move(skipped), std::move(reasons), std::move(partial), kind);
}

void Estimator::build_components() const {
  if (lower_) return;
  const double a = state_.config.alpha;
  const WeightFunction L = trimmed_component(a, TrimSide::Lower), U = trimmed_component(a, TrimSide::Upper);
  const WeightFunction* js[] = {&L, &U};
  const std::size_t q = state_.grid.size();
  const double nan = std::numeric_limits<double>::quiet_NaN();
  std::vector<double> lv(q, nan), uv(q, nan);
  std::vector<std::size_t> skipped, partial_l, partial_u;
  std::vector<std::string> reasons;
  for (std::size_t i = 0; i < q; ++i) {
    try {
      const auto& F = cdf(i);
      const auto r = wcqr_integrals(F, js);
      lv[i] = r[0];
      uv[i] = r[1];
      if (F.partial_coverage(L.support_lo(), L.support_hi())) partial_l.push_back(i);
      if (F.partial_coverage(U.support_lo(), U.support_hi())) partial_u.push_back(i);
    } catch (const GridPointError& e) {
      if (!options_.lenient) throw;
      skipped.push_back(i);
      reasons.push_back(e.what());
    } catch (const Error& e) {
      if (!options_.lenient) throw GridPointError(i, e.what());
      skipped.push_back(i);
      reasons.push_back(e.what());
    }
  }
  auto l = finish(std::move(lv), skipped, reasons, std::move(partial_l), CurveKind::LowerComponent);
  auto u = finish(std::move(uv), std::move(skipped), std::move(reasons), std::move(partial_u),
                  CurveKind::UpperComponent);
  lower_.emplace(std::move(l));
  upper_.emplace(std::move(u));
}

const CurveEstimate& Estimator::lower() const {
  build_components();
  return *lower_;
}

const CurveEstimate& Estimator::upper() const {
  build_components();
  return *upper_;
}

const CurveEstimate& Estimator::density() const {
  if (!density_) density_.emplace(CurveEstimate::from_values(CurveKind::Density, state_.grid, state_.fX, state_.config.degree));
  return *density_;
}

double Estimator::weighted_integral(const std::function<double(double)>& g) const {
  const auto& G = state_.grid;
  const auto& f = density().interpolant;
  auto integrand = [&](double x) {
    const double w = covariate_weight(state_.config, x);
    return w == 0.0 ? 0.0 : w * g(x) * f(x);
  };
  CompensatedSum s;
  for (std::size_t k = 0; k + 1 < G.size(); ++k) {
    const double a = G[k], h = (G[k + 1] - a) / 4.0;
    double v[5];
    for (int m = 0; m < 5; ++m) v[m] = integrand(m == 4 ? G[k + 1] : a + m * h);
    s.add(h / 3.0 * (v[0] + 4.0 * v[1] + 2.0 * v[2] + 4.0 * v[3] + v[4]));
  }
  return s.value();
}

ScalarWeightParams Estimator::estimate_w() const {
  ScalarWeightParams p;
  p.E_WY = state_.E_WY;
  p.E_WY2 = state_.E_WY2;
  const auto& L = lower();
  const auto& U = upper();
  p.E_WL = weighted_integral([&](double x) { return L(x); });
  p.E_WU = weighted_integral([&](double x) { return U(x); });
  const double sep = p.E_WL - p.E_WU;
  if (!(std::abs(sep) >= kSeparationFloor)) {
    throw DegenerateSeparation("lower and upper trimmed components are not separated");
  }
  p.w_hat = (p.E_WY - p.E_WU) / sep;
  return p;
}

ScalarWeightParams Estimator::estimate_theta(const CurveEstimate& mean_curve) const {
  ScalarWeightParams p;
  p.E_WY = state_.E_WY;
  p.E_WY2 = state_.E_WY2;
  const auto& L = lower();
  const auto& U = upper();
  p.E_Wm2 = weighted_integral([&](double x) {
    const double m = mean_curve(x);
    return m * m;
  });
  p.E_Wr2 = weighted_integral([&](double x) {
    const double r = U(x) - L(x);
    return r * r;
  });
  const double num = p.E_WY2 - p.E_Wm2;
  if (num < 0.0) throw NegativeVariance("second moment below the squared mean");
  if (!(p.E_Wr2 >= kSeparationFloor)) throw ZeroDenominator("scale component integral vanishes");
  p.theta_hat = std::sqrt(num / p.E_Wr2);
  return p;
}

ScalarWeightParams Estimator::estimate_theta() const {
  if (options_.symmetric_model) return estimate_theta(mean(MeanMode::Ntm));
  const auto w = estimate_w();
  const auto m = CurveEstimate::combine(w.w_hat, lower(), 1.0 - w.w_hat, upper(), CurveKind::Mean);
  auto p = estimate_theta(m);
  p.w_hat = w.w_hat;
  p.E_WL = w.E_WL;
  p.E_WU = w.E_WU;
  return p;
}

CurveEstimate Estimator::mean(MeanMode mode) const {
  if (mode == MeanMode::Ntm) return CurveEstimate::combine(0.5, lower(), 0.5, upper(), CurveKind::Mean);
  const double w = estimate_w().w_hat;
  return CurveEstimate::combine(w, lower(), 1.0 - w, upper(), CurveKind::Mean);
}

CurveEstimate Estimator::sd(SdMode mode, MeanMode mean_mode) const {
  auto ntsd = CurveEstimate::combine(-1.0, lower(), 1.0, upper(), CurveKind::Sd);
  if (mode == SdMode::Ntsd) return ntsd;
  const double theta = estimate_theta(mean(mean_mode)).theta_hat;
  return CurveEstimate::combine(theta, ntsd, 0.0, ntsd, CurveKind::Sd);
}

CurveEstimate Estimator::sd(SdMode mode) const {
  return sd(mode, options_.symmetric_model ? MeanMode::Ntm : MeanMode::Bctm);
}

CurveEstimate curve_estimate(const RenewableState& state, const WeightFunction& J) {
  return Estimator(state).curve(J);
}

CurveEstimate interpolated_density(const RenewableState& state) { return Estimator(state).density(); }

ScalarWeightParams estimate_w(const RenewableState& state) { return Estimator(state).estimate_w(); }

ScalarWeightParams estimate_theta(const RenewableState& state, const CurveEstimate& mean_curve) {
  return Estimator(state).estimate_theta(mean_curve);
}

CurveEstimate estimate_mean(const RenewableState& state, MeanMode mode) { return Estimator(state).mean(mode); }

CurveEstimate estimate_sd(const RenewableState& state, SdMode mode, MeanMode mean_mode) {
  return Estimator(state).sd(mode, mean_mode);
}

}  // namespace streamcqr
