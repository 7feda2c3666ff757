#include "streamcqr/optimal_weights.hpp"

#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <algorithm>
#include <cmath>

#include "streamcqr/errors.hpp"

namespace streamcqr {

namespace {

using boost::math::quadrature::gauss;
using boost::math::quadrature::gauss_kronrod;

void check_range(double utau, double btau) {
  if (!(utau >= 0.0 && utau < btau && btau <= 1.0)) throw InvalidArgument("need 0 <= utau < btau <= 1");
}

}  // namespace

double variance_functional(const WeightFunction& J, const ErrorLaw& law, double utau, double btau) {
  check_range(utau, btau);
  // V = utau (A - M)^2 + (1 - btau) M^2 + int_{utau}^{btau} (T(u) - M)^2 du,
  // g = J / f(F^-1), A = int g, M = int s g(s), T(u) = int_u^1 g.
  auto g = [&](double s) {
    const double j = J(s);
    if (j == 0.0) return 0.0;
    const double f = law.pdf(law.quantile(s));
    if (!(f > 0.0) || !std::isfinite(f)) throw InvalidArgument("variance_functional: density underflow");
    return j / f;
  };
  std::vector<double> cuts{utau, btau};
  for (double b : J.breakpoints())
    if (b > utau && b < btau) cuts.push_back(b);
  std::sort(cuts.begin(), cuts.end());
  const double max_width = (btau - utau) / 256.0;
  std::vector<double> edges{utau};
  for (std::size_t k = 0; k + 1 < cuts.size(); ++k) {
    const int m = std::max(1, static_cast<int>(std::ceil((cuts[k + 1] - cuts[k]) / max_width)));
    for (int i = 1; i <= m; ++i) edges.push_back(i == m ? cuts[k + 1] : cuts[k] + (cuts[k + 1] - cuts[k]) * i / m);
  }
  const std::size_t P = edges.size() - 1;
  // tail[k] = int_{edges[k]}^{btau} g
  std::vector<double> panel_g(P), panel_sg(P);
  for (std::size_t k = 0; k < P; ++k) {
    panel_g[k] = gauss<double, 8>::integrate(g, edges[k], edges[k + 1]);
    panel_sg[k] = gauss<double, 8>::integrate([&](double s) { return s * g(s); }, edges[k], edges[k + 1]);
  }
  std::vector<double> tail(P + 1, 0.0);
  for (std::size_t k = P; k-- > 0;) tail[k] = tail[k + 1] + panel_g[k];
  double M = 0.0;
  for (double v : panel_sg) M += v;
  const double A = tail[0];
  double inner = 0.0;
  for (std::size_t k = 0; k < P; ++k) {
    const double a = edges[k], b = edges[k + 1];
    inner += gauss<double, 8>::integrate(
        [&](double u) {
          const double T = tail[k + 1] + gauss<double, 8>::integrate(g, u, b);
          return (T - M) * (T - M);
        },
        a, b);
  }
  return utau * (A - M) * (A - M) + (1.0 - btau) * M * M + inner;
}

double psi_basis(int i, double tau, const ErrorLaw& law) {
  if (!(tau > 0.0 && tau < 1.0)) throw InvalidArgument("psi_basis: tau must lie in (0, 1)");
  const double z = law.quantile(tau);
  if (i == 1) return -law.d2logpdf(z);
  if (i == 2) return -(2.0 * law.dlogpdf(z) + z * law.d2logpdf(z));
  throw InvalidArgument("psi_basis: index must be 1 or 2");
}

OptimalWeightSolution optimal_weight(Target target, const ErrorLaw& law, double utau, double btau) {
  check_range(utau, btau);
  if (utau <= 0.0 || btau >= 1.0) throw InvalidArgument("optimal_weight: need 0 < utau < btau < 1");
  const double zlo = law.quantile(utau), zhi = law.quantile(btau);
  OptimalWeightSolution sol;
  // Quantile-space substitution: d tau = f(z) dz.
  for (int k = 0; k < 2; ++k) {
    for (int j = 1; j <= 2; ++j) {
      auto integrand = [&](double z) {
        const double psi = j == 1 ? -law.d2logpdf(z) : -(2.0 * law.dlogpdf(z) + z * law.d2logpdf(z));
        return (k == 0 ? 1.0 : z) * psi * law.pdf(z);
      };
      sol.A[k][j - 1] = gauss_kronrod<double, 61>::integrate(integrand, zlo, zhi, 15, 1e-14);
    }
  }
  const double A01 = sol.A[0][0], A02 = sol.A[0][1], A11 = sol.A[1][0], A12 = sol.A[1][1];
  const double D = A01 * A12 - A02 * A11;
  if (!(std::abs(D) > 1e-10)) throw SingularMomentSystem("optimal_weight: singular moment system");
  if (target == Target::Mean) {
    sol.C1 = A12 / D;
    sol.C2 = -A11 / D;
  } else {
    sol.C1 = -A02 / D;
    sol.C2 = A01 / D;
  }
  const int n = kOptimalWeightSamples;
  std::vector<double> taus(n), vals(n);
  for (int k = 0; k < n; ++k) {
    taus[k] = k + 1 == n ? btau : utau + (btau - utau) * k / (n - 1);
    vals[k] = sol.C1 * psi_basis(1, taus[k], law) + sol.C2 * psi_basis(2, taus[k], law);
  }
  // cubic pieces through consecutive sample quadruples sharing endpoints
  std::vector<PolyPiece> pieces;
  for (int s = 0; s + 3 < n; s += 3) {
    std::span<const double> xs(&taus[s], 4), ys(&vals[s], 4);
    pieces.push_back(PolyPiece{taus[s], taus[s + 3], s == 0, interpolating_polynomial(xs, ys, taus[s])});
  }
  sol.J_star = WeightFunction(std::move(pieces));
  sol.V_star = variance_functional(sol.J_star, law, utau, btau);
  return sol;
}

}  // namespace streamcqr
