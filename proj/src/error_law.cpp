#include "streamcqr/error_law.hpp"

#include <boost/math/distributions/fisher_f.hpp>
#include <boost/math/distributions/laplace.hpp>
#include <boost/math/distributions/logistic.hpp>
#include <boost/math/distributions/lognormal.hpp>
#include <boost/math/distributions/normal.hpp>
#include <boost/math/distributions/pareto.hpp>
#include <boost/math/distributions/students_t.hpp>
#include <boost/math/distributions/uniform.hpp>
#include <cmath>
#include <limits>
#include <memory>
#include <numbers>

#include "streamcqr/errors.hpp"

namespace streamcqr {

namespace bm = boost::math;

namespace {

template <class Dist>
void attach_distribution(ErrorLaw& law, const Dist& d) {
  law.pdf = [d](double x) {
    const auto r = bm::support(d);
    if (x < r.first || x > r.second) return 0.0;
    return bm::pdf(d, x);
  };
  law.cdf = [d](double x) {
    const auto r = bm::support(d);
    if (x <= r.first) return 0.0;
    if (x >= r.second) return 1.0;
    return bm::cdf(d, x);
  };
  law.quantile = [d](double p) { return bm::quantile(d, p); };
}

}  // namespace

ErrorLaw location_scale(const ErrorLaw& base, double loc, double scale) {
  if (!(scale > 0.0) || !std::isfinite(scale) || !std::isfinite(loc)) {
    throw InvalidArgument("location_scale: scale must be positive and finite");
  }
  ErrorLaw out;
  out.name = base.name;
  out.symmetric = base.symmetric;
  out.mean = loc + scale * base.mean;
  out.variance = scale * scale * base.variance;
  auto b = std::make_shared<ErrorLaw>(base);
  out.pdf = [b, loc, scale](double y) { return b->pdf((y - loc) / scale) / scale; };
  out.cdf = [b, loc, scale](double y) { return b->cdf((y - loc) / scale); };
  out.quantile = [b, loc, scale](double p) { return loc + scale * b->quantile(p); };
  out.dlogpdf = [b, loc, scale](double y) { return b->dlogpdf((y - loc) / scale) / scale; };
  out.d2logpdf = [b, loc, scale](double y) { return b->d2logpdf((y - loc) / scale) / (scale * scale); };
  return out;
}

ErrorLaw centered(const ErrorLaw& base) { return location_scale(base, -base.mean, 1.0); }

ErrorLaw standardized(const ErrorLaw& base) {
  if (!std::isfinite(base.variance)) return centered(base);
  const double s = 1.0 / std::sqrt(base.variance);
  return location_scale(base, -base.mean * s, s);
}

ErrorLaw normal_law() {
  ErrorLaw law;
  law.name = "normal";
  attach_distribution(law, bm::normal_distribution<double>(0.0, 1.0));
  law.dlogpdf = [](double z) { return -z; };
  law.d2logpdf = [](double) { return -1.0; };
  law.symmetric = true;
  law.mean = 0.0;
  law.variance = 1.0;
  return law;
}

ErrorLaw logistic_law() {
  ErrorLaw law;
  law.name = "logistic";
  const bm::logistic_distribution<double> d(0.0, 1.0);
  attach_distribution(law, d);
  law.dlogpdf = [d](double z) { return 1.0 - 2.0 * bm::cdf(d, z); };
  law.d2logpdf = [d](double z) { return -2.0 * bm::pdf(d, z); };
  law.symmetric = true;
  law.mean = 0.0;
  law.variance = std::numbers::pi * std::numbers::pi / 3.0;
  return law;
}

ErrorLaw laplace_law() {
  ErrorLaw law;
  law.name = "laplace";
  attach_distribution(law, bm::laplace_distribution<double>(0.0, 1.0));
  law.dlogpdf = [](double z) { return z > 0.0 ? -1.0 : (z < 0.0 ? 1.0 : 0.0); };
  law.d2logpdf = [](double) { return 0.0; };
  law.symmetric = true;
  law.mean = 0.0;
  law.variance = 2.0;
  return law;
}

ErrorLaw uniform01_law() {
  ErrorLaw law;
  law.name = "uniform";
  attach_distribution(law, bm::uniform_distribution<double>(0.0, 1.0));
  law.dlogpdf = [](double) { return 0.0; };
  law.d2logpdf = [](double) { return 0.0; };
  law.symmetric = true;
  law.mean = 0.5;
  law.variance = 1.0 / 12.0;
  return law;
}

ErrorLaw student_t_law(double nu) {
  if (!(nu > 0.0)) throw InvalidArgument("student t: degrees of freedom must be positive");
  ErrorLaw law;
  law.name = "t" + std::to_string(static_cast<int>(nu));
  attach_distribution(law, bm::students_t_distribution<double>(nu));
  law.dlogpdf = [nu](double z) { return -(nu + 1.0) * z / (nu + z * z); };
  law.d2logpdf = [nu](double z) {
    const double q = nu + z * z;
    return -(nu + 1.0) * (nu - z * z) / (q * q);
  };
  law.symmetric = true;
  law.mean = nu > 1.0 ? 0.0 : std::numeric_limits<double>::quiet_NaN();
  law.variance = nu > 2.0 ? nu / (nu - 2.0) : std::numeric_limits<double>::infinity();
  return law;
}

ErrorLaw pareto_law(double shape) {
  if (!(shape > 0.0)) throw InvalidArgument("pareto: shape must be positive");
  ErrorLaw law;
  law.name = "pareto";
  attach_distribution(law, bm::pareto_distribution<double>(1.0, shape));
  law.dlogpdf = [shape](double x) { return -(shape + 1.0) / x; };
  law.d2logpdf = [shape](double x) { return (shape + 1.0) / (x * x); };
  law.mean = shape > 1.0 ? shape / (shape - 1.0) : std::numeric_limits<double>::infinity();
  law.variance = shape > 2.0 ? shape / ((shape - 1.0) * (shape - 1.0) * (shape - 2.0))
                             : std::numeric_limits<double>::infinity();
  return law;
}

ErrorLaw fisher_f_law(double d1, double d2) {
  if (!(d1 > 0.0 && d2 > 0.0)) throw InvalidArgument("F law: degrees of freedom must be positive");
  ErrorLaw law;
  law.name = "F";
  attach_distribution(law, bm::fisher_f_distribution<double>(d1, d2));
  const double a = 0.5 * d1 - 1.0, b = 0.5 * (d1 + d2);
  law.dlogpdf = [=](double x) { return a / x - b * d1 / (d2 + d1 * x); };
  law.d2logpdf = [=](double x) {
    const double q = d2 + d1 * x;
    return -a / (x * x) + b * d1 * d1 / (q * q);
  };
  law.mean = d2 > 2.0 ? d2 / (d2 - 2.0) : std::numeric_limits<double>::infinity();
  law.variance = d2 > 4.0 ? 2.0 * d2 * d2 * (d1 + d2 - 2.0) / (d1 * (d2 - 2.0) * (d2 - 2.0) * (d2 - 4.0))
                          : std::numeric_limits<double>::infinity();
  return law;
}

ErrorLaw lognormal_law(double mu, double s) {
  if (!(s > 0.0)) throw InvalidArgument("lognormal: scale must be positive");
  ErrorLaw law;
  law.name = "lognormal";
  attach_distribution(law, bm::lognormal_distribution<double>(mu, s));
  const double s2 = s * s;
  law.dlogpdf = [=](double x) { return -1.0 / x - (std::log(x) - mu) / (s2 * x); };
  law.d2logpdf = [=](double x) { return 1.0 / (x * x) - (1.0 - (std::log(x) - mu)) / (s2 * x * x); };
  law.mean = std::exp(mu + 0.5 * s2);
  law.variance = (std::exp(s2) - 1.0) * std::exp(2.0 * mu + s2);
  return law;
}

}  // namespace streamcqr
