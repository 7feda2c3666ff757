#include "streamcqr/bandwidth.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <cmath>
#include <limits>

#include "streamcqr/errors.hpp"
#include "streamcqr/optimal_weights.hpp"

namespace streamcqr {

double error_function(std::span<const double> H, std::span<const double> n, double B, double Sigma) {
  if (H.size() != n.size() || H.empty()) throw InvalidArgument("error_function: size mismatch");
  double N = 0.0;
  for (double v : n) N += v;
  double bias = 0.0, var = 0.0;
  for (std::size_t s = 0; s < H.size(); ++s) {
    if (!(H[s] > 0.0)) throw InvalidArgument("error_function: bandwidths must be positive");
    bias += n[s] * H[s] * H[s] / N;
    var += n[s] / (N * H[s]);
  }
  return (B * bias) * (B * bias) + var * Sigma / N;
}

double error_increment(double h_t, double n_t, std::span<const double> H_prev, std::span<const double> n_prev,
                       double B, double Sigma) {
  double past = 0.0;
  for (std::size_t s = 0; s < H_prev.size(); ++s) past += n_prev[s] * H_prev[s] * H_prev[s];
  const double h2 = h_t * h_t;
  return h2 * h2 * B * B + Sigma / (n_t * h_t) + 2.0 * h2 * past / n_t * B * B;
}

namespace {

// Roots are taken in extended precision and rounded once, so exact powers of ten land on the nearest double.
double fifth_root_ratio(double a, double b) {
  const long double x = static_cast<long double>(a) / static_cast<long double>(b);
  long double r = std::pow(x, 0.2L);
  r -= (r * r * r * r * r - x) / (5.0L * r * r * r * r);
  return static_cast<double>(r);
}

double cube_root_ratio(double a, long double b) {
  return static_cast<double>(std::cbrt(static_cast<long double>(a) / b));
}

}  // namespace

double oracle_bandwidth(double C_h, double N_total) {
  if (!(C_h > 0.0) || !(N_total >= 1.0)) throw InvalidArgument("oracle_bandwidth: need C_h > 0 and N >= 1");
  return fifth_root_ratio(C_h, N_total);
}

namespace {

double recursion_step(double C, double& S, double& last, std::uint64_t t, double n) {
  if (t == 0) {
    last = fifth_root_ratio(C, n);
  } else {
    const long double S_next = S + static_cast<long double>(n) * last * last;
    S = static_cast<double>(S_next);
    last = cube_root_ratio(C, S_next);
  }
  return last;
}

}  // namespace

double next_bandwidth(BandwidthState& bw, std::uint64_t n_t) {
  if (n_t == 0) throw InvalidArgument("next_bandwidth: chunk must be nonempty");
  if (!(bw.C_h > 0.0)) throw InvalidArgument("next_bandwidth: C_h must be positive");
  double h;
  if (bw.mode == BandwidthMode::Oracle) {
    if (bw.N_total == 0) throw InvalidArgument("next_bandwidth: oracle mode needs the total sample count");
    h = oracle_bandwidth(bw.C_h, static_cast<double>(bw.N_total));
    bw.last_h = h;
  } else {
    h = recursion_step(bw.C_h, bw.S_h, bw.last_h, bw.t, static_cast<double>(n_t));
  }
  ++bw.t;
  return h;
}

std::vector<double> next_variable_bandwidths(BandwidthState& bw, std::uint64_t n_t) {
  if (n_t == 0) throw InvalidArgument("next_variable_bandwidths: chunk must be nonempty");
  if (!bw.variable()) throw InvalidArgument("next_variable_bandwidths: no per-point constants");
  const std::size_t q = bw.C_h_x.size();
  bw.S_h_x.resize(q, 0.0);
  bw.last_h_x.resize(q, 0.0);
  std::vector<double> h(q);
  for (std::size_t i = 0; i < q; ++i) {
    if (!(bw.C_h_x[i] > 0.0)) throw InvalidArgument("next_variable_bandwidths: C_h(x) must be positive");
    if (bw.mode == BandwidthMode::Oracle) {
      h[i] = oracle_bandwidth(bw.C_h_x[i], static_cast<double>(bw.N_total));
      bw.last_h_x[i] = h[i];
    } else {
      h[i] = recursion_step(bw.C_h_x[i], bw.S_h_x[i], bw.last_h_x[i], bw.t, static_cast<double>(n_t));
    }
  }
  ++bw.t;
  return h;
}

double fixed_point_bandwidth(double C_h, double S_prev, double n_t) {
  if (!(C_h > 0.0) || !(n_t > 0.0) || S_prev < 0.0) throw InvalidArgument("fixed_point_bandwidth: bad input");
  // g(h) = h^3 (S + n h^2) - C is increasing on h > 0.
  auto g = [&](double h) { return h * h * h * (S_prev + n_t * h * h) - C_h; };
  double lo = 0.0, hi = 1.0;
  while (g(hi) < 0.0) hi *= 2.0;
  for (int it = 0; it < 200 && hi - lo > 1e-16 * hi; ++it) {
    const double mid = 0.5 * (lo + hi);
    (g(mid) < 0.0 ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

AsymptoticConstants asymptotic_constants(const ModelOracle& model, const ErrorLaw& law, const WeightFunction& J,
                                         double x, const KernelMoments& km) {
  const double m1 = model.dm(x), m2 = model.d2m(x);
  const double s = model.sigma(x), s1 = model.dsigma(x), s2 = model.d2sigma(x);
  const double f = model.fx(x), f1 = model.dfx(x);
  if (!(s > 0.0)) throw InvalidArgument("asymptotic_constants: sigma(x) must be positive");
  if (!(f > 0.0)) throw InvalidArgument("asymptotic_constants: f_X(x) must be positive");
  using boost::math::quadrature::gauss_kronrod;
  // F(y|x) = F_e(z), z = (y - m) / sigma; integrate over z with dy = sigma dz.
  double B = 0.0;
  for (const auto& p : J.pieces()) {
    const double zlo = law.quantile(std::max(p.lo, 1e-300)), zhi = law.quantile(std::min(p.hi, 1.0 - 1e-16));
    auto integrand = [&](double z) {
      const double zx = -(m1 + z * s1) / s;
      const double zxx = -(m2 + 2.0 * zx * s1 + z * s2) / s;
      const double fe = law.pdf(z);
      const double Fx = fe * zx;
      const double Fxx = fe * law.dlogpdf(z) * zx * zx + fe * zxx;
      const double BF = 0.5 * km.k21 * (Fxx + 2.0 * Fx * f1 / f);
      return p.poly(law.cdf(z)) * BF * s;
    };
    B -= gauss_kronrod<double, 61>::integrate(integrand, zlo, zhi, 15, 1e-13);
  }
  AsymptoticConstants out;
  out.B_mx = B;
  const double lo = std::max(J.support_lo(), 0.0), hi = std::min(J.support_hi(), 1.0);
  out.Sigma_mx = km.k02 * s * s / f * variance_functional(J, law, lo, hi);
  out.C_h_x = B != 0.0 ? out.Sigma_mx / (4.0 * B * B) : std::numeric_limits<double>::infinity();
  return out;
}

}  // namespace streamcqr
