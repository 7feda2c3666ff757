#pragma once

#include <functional>
#include <string>

namespace streamcqr {

/// Analytic description of an error distribution.
struct ErrorLaw {
  std::string name;
  std::function<double(double)> pdf;
  std::function<double(double)> cdf;
  std::function<double(double)> quantile;
  std::function<double(double)> dlogpdf;   ///< (log f)'
  std::function<double(double)> d2logpdf;  ///< (log f)''
  bool symmetric = false;
  double mean = 0.0;
  double variance = 1.0;  ///< +inf when it does not exist
};

/// Law of loc + scale * e for e ~ base.
ErrorLaw location_scale(const ErrorLaw& base, double loc, double scale);

/// Same law shifted to mean zero.
ErrorLaw centered(const ErrorLaw& base);

/// Centered and, when the variance is finite, scaled to unit variance.
ErrorLaw standardized(const ErrorLaw& base);

ErrorLaw normal_law();
ErrorLaw logistic_law();
ErrorLaw laplace_law();
ErrorLaw uniform01_law();
ErrorLaw student_t_law(double nu);
ErrorLaw pareto_law(double shape);  ///< unit scale, support [1, inf)
ErrorLaw fisher_f_law(double d1, double d2);
ErrorLaw lognormal_law(double mu, double s);

}  // namespace streamcqr
