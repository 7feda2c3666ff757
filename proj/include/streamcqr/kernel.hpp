#pragma once

#include <string>
#include <string_view>

namespace streamcqr {

enum class KernelType { Epanechnikov, Biweight, Triweight, Triangular };

/// Symmetric, compactly supported probability kernel on [-1, 1].
class Kernel {
public:
  explicit Kernel(KernelType type = KernelType::Epanechnikov) noexcept : type_(type) {}

  double operator()(double u) const noexcept { return evaluate(u); }
  double evaluate(double u) const noexcept;
  double support_radius() const noexcept { return 1.0; }
  KernelType type() const noexcept { return type_; }
  std::string name() const;

  /// Parses "epanechnikov", "biweight", "triweight" or "triangular".
  static Kernel from_name(std::string_view name);

  friend bool operator==(const Kernel&, const Kernel&) = default;

private:
  KernelType type_;
};

/// K_h(u) = K(u / h) / h.
inline double scaled_kernel(const Kernel& k, double u, double h) noexcept { return k.evaluate(u / h) / h; }

struct KernelMoments {
  double k21 = 0.0;  ///< integral of u^2 K(u)
  double k02 = 0.0;  ///< integral of K(u)^2
  double k41 = 0.0;  ///< integral of u^4 K(u)
};

KernelMoments kernel_moments(const Kernel& kernel);

/// Integral of K over its support (1 for a valid kernel).
double kernel_mass(const Kernel& kernel);

}  // namespace streamcqr
