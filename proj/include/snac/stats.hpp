#pragma once

namespace snac {

/// Standard normal CDF.
double normal_cdf(double x);

/// Inverse standard normal CDF. Rational initial guess refined with one
/// Halley step; accurate to better than 1e-12 over (0, 1).
double normal_quantile(double p);

/// Regularized lower incomplete gamma P(a, x).
double gamma_p(double a, double x);

/// Chi-square CDF with k degrees of freedom.
double chi2_cdf(double x, double k);

/// Chi-square quantile (inverse CDF) with k degrees of freedom.
double chi2_quantile(double p, double k);

}  // namespace snac
