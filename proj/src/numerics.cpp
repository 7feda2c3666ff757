#include "streamcqr/numerics.hpp"

#include <algorithm>
#include <cassert>
#include <limits>

namespace streamcqr {

ShiftedPolynomial ShiftedPolynomial::recentered(double new_center) const {
  const double d = new_center - center;
  const std::size_t n = coeffs.size();
  ShiftedPolynomial out{new_center, std::vector<double>(n, 0.0)};
  // p(s + d) expanded in s, repeated synthetic division (Taylor shift)
  std::vector<double> work = coeffs;
  for (std::size_t j = 0; j < n; ++j) {
    for (std::size_t k = n - 1; k > j; --k) work[k - 1] += d * work[k];
    out.coeffs[j] = work[j];
  }
  return out;
}

double ShiftedPolynomial::integral(double a, double b) const noexcept {
  auto anti = [this](double x) {
    const double t = x - center;
    double acc = 0.0;
    for (std::size_t k = coeffs.size(); k-- > 0;) acc = acc * t + coeffs[k] / static_cast<double>(k + 1);
    return acc * t;
  };
  return anti(b) - anti(a);
}

ShiftedPolynomial interpolating_polynomial(std::span<const double> xs, std::span<const double> ys,
                                           double center) {
  assert(xs.size() == ys.size() && !xs.empty());
  const std::size_t n = xs.size();
  std::vector<double> dd(ys.begin(), ys.end());
  for (std::size_t level = 1; level < n; ++level) {
    for (std::size_t i = n - 1; i >= level; --i) {
      dd[i] = (dd[i] - dd[i - 1]) / (xs[i] - xs[i - level]);
      if (i == level) break;
    }
  }
  // Horner over the Newton form in the shifted variable t = x - center.
  std::vector<double> poly{dd[n - 1]};
  for (std::size_t k = n - 1; k-- > 0;) {
    const double shift = center - xs[k];
    std::vector<double> next(poly.size() + 1, 0.0);
    for (std::size_t j = 0; j < poly.size(); ++j) {
      next[j + 1] += poly[j];
      next[j] += poly[j] * shift;
    }
    next[0] += dd[k];
    poly = std::move(next);
  }
  return ShiftedPolynomial{center, std::move(poly)};
}

double solve_monotone(const ShiftedPolynomial& p, double level, double a, double b) {
  double fa = p(a) - level;
  double lo = a, hi = b;
  const bool increasing = fa < 0.0;
  double x = 0.5 * (lo + hi);
  for (int it = 0; it < 200; ++it) {
    const double fx = p(x) - level;
    if (fx == 0.0) return x;
    if ((fx < 0.0) == increasing) {
      lo = x;
    } else {
      hi = x;
    }
    if (hi - lo <= 4.0 * std::numeric_limits<double>::epsilon() * std::max(std::abs(lo), std::abs(hi)) ||
        hi - lo <= std::numeric_limits<double>::min()) {
      break;
    }
    const double slope = p.derivative(x);
    double next = slope != 0.0 ? x - fx / slope : 0.5 * (lo + hi);
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    x = next;
  }
  return 0.5 * (lo + hi);
}

std::vector<double> derivative_sign_changes(const ShiftedPolynomial& p, double a, double b) {
  std::vector<double> out;
  const std::size_t n = p.coeffs.size();
  if (n <= 2) return out;
  if (n <= 4) {
    // derivative d0 + d1 t + d2 t^2
    const double d0 = p.coeffs[1];
    const double d1 = 2.0 * p.coeffs[2];
    const double d2 = n == 4 ? 3.0 * p.coeffs[3] : 0.0;
    const double ta = a - p.center, tb = b - p.center;
    auto keep = [&](double t) {
      if (t > ta && t < tb) out.push_back(t + p.center);
    };
    if (d2 == 0.0) {
      if (d1 != 0.0) keep(-d0 / d1);
    } else {
      const double disc = d1 * d1 - 4.0 * d2 * d0;
      if (disc > 0.0) {
        const double sq = std::sqrt(disc);
        const double q = -0.5 * (d1 + std::copysign(sq, d1));
        double r1 = q / d2;
        double r2 = q != 0.0 ? d0 / q : -r1;
        if (r1 > r2) std::swap(r1, r2);
        keep(r1);
        keep(r2);
      }
    }
    return out;
  }
  constexpr int kSamples = 64;
  double prev_x = a;
  double prev_d = p.derivative(a);
  for (int k = 1; k <= kSamples; ++k) {
    const double x = a + (b - a) * k / kSamples;
    const double d = p.derivative(x);
    if ((prev_d < 0.0 && d > 0.0) || (prev_d > 0.0 && d < 0.0)) {
      double lo = prev_x, hi = x, dlo = prev_d;
      for (int it = 0; it < 100 && hi - lo > 1e-15 * std::max(1.0, std::abs(hi)); ++it) {
        const double mid = 0.5 * (lo + hi);
        const double dm = p.derivative(mid);
        if ((dm < 0.0) == (dlo < 0.0)) {
          lo = mid;
          dlo = dm;
        } else {
          hi = mid;
        }
      }
      const double root = 0.5 * (lo + hi);
      if (root > a && root < b) out.push_back(root);
    }
    prev_x = x;
    prev_d = d;
  }
  return out;
}

}  // namespace streamcqr
