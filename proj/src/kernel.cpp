#include "streamcqr/kernel.hpp"

#include <boost/math/quadrature/gauss.hpp>
#include <cmath>

#include "streamcqr/errors.hpp"

namespace streamcqr {

double Kernel::evaluate(double u) const noexcept {
  const double a = std::abs(u);
  if (a >= 1.0) return 0.0;
  const double v = 1.0 - a * a;
  switch (type_) {
    case KernelType::Epanechnikov:
      return 0.75 * v;
    case KernelType::Biweight:
      return 0.9375 * v * v;
    case KernelType::Triweight:
      return 1.09375 * v * v * v;
    case KernelType::Triangular:
      return 1.0 - a;
  }
  return 0.0;
}

std::string Kernel::name() const {
  switch (type_) {
    case KernelType::Epanechnikov:
      return "epanechnikov";
    case KernelType::Biweight:
      return "biweight";
    case KernelType::Triweight:
      return "triweight";
    case KernelType::Triangular:
      return "triangular";
  }
  return "unknown";
}

Kernel Kernel::from_name(std::string_view name) {
  if (name == "epanechnikov") return Kernel(KernelType::Epanechnikov);
  if (name == "biweight") return Kernel(KernelType::Biweight);
  if (name == "triweight") return Kernel(KernelType::Triweight);
  if (name == "triangular") return Kernel(KernelType::Triangular);
  throw InvalidArgument("unknown kernel '" + std::string(name) + "'");
}

namespace {

// Every kernel is polynomial on [-1, 0] and [0, 1]; 20-point Gauss-Legendre is exact there.
template <class F>
double integrate_support(F&& f) {
  using boost::math::quadrature::gauss;
  return gauss<double, 20>::integrate(f, -1.0, 0.0) + gauss<double, 20>::integrate(f, 0.0, 1.0);
}

}  // namespace

KernelMoments kernel_moments(const Kernel& kernel) {
  KernelMoments m;
  m.k21 = integrate_support([&](double u) { return u * u * kernel(u); });
  m.k02 = integrate_support([&](double u) { return kernel(u) * kernel(u); });
  m.k41 = integrate_support([&](double u) { return u * u * u * u * kernel(u); });
  return m;
}

double kernel_mass(const Kernel& kernel) {
  return integrate_support([&](double u) { return kernel(u); });
}

}  // namespace streamcqr
