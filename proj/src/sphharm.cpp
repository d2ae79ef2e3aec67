#include "snac/sphharm.hpp"

#include <cmath>

#include "snac/errors.hpp"

namespace snac {

double sh_normalization(int n, int m) {
  if (m < 0 || n < 0 || m > n) throw Error("sh_normalization: need 0<=m<=n");
  const double delta = (m == 0) ? 1.0 : 0.0;
  if (n <= 10) {
    double num = 1.0;
    for (int k = n - m + 1; k <= n + m; ++k) num *= k;  // (n+m)!/(n-m)!
    return std::sqrt(num / ((2.0 - delta) * (2.0 * n + 1.0)));
  }
  const double lognum = std::lgamma(n + m + 1.0) - std::lgamma(n - m + 1.0);
  const double logden = std::log(2.0 - delta) + std::log(2.0 * n + 1.0);
  return std::exp(0.5 * (lognum - logden));
}

LegendreTable::LegendreTable(int max_degree, double sin_phi, double cos_phi,
                             bool with_derivatives)
    : nmax_(max_degree),
      p_((max_degree + 1) * (max_degree + 2) / 2, 0.0),
      dp_(with_derivatives ? p_.size() : 0, 0.0) {
  const double t = sin_phi;
  // Derivative recursion divides by cos(phi); floor it away from zero so
  // pole evaluations stay finite (callers avoid the exact poles).
  const double u = (std::fabs(cos_phi) < 1e-12)
                       ? (cos_phi < 0.0 ? -1e-12 : 1e-12)
                       : cos_phi;

  p_[idx(0, 0)] = 1.0;
  if (nmax_ >= 1) {
    p_[idx(1, 0)] = std::sqrt(3.0) * t;
    p_[idx(1, 1)] = std::sqrt(3.0) * u;
  }
  for (int n = 2; n <= nmax_; ++n) {
    // Sectorial term.
    p_[idx(n, n)] = u * std::sqrt((2.0 * n + 1.0) / (2.0 * n)) *
                    p_[idx(n - 1, n - 1)];
    for (int m = 0; m < n; ++m) {
      const double alpha = std::sqrt((2.0 * n + 1.0) * (2.0 * n - 1.0) /
                                     ((n - m) * double(n + m)));
      double term = alpha * t * p_[idx(n - 1, m)];
      if (n - 2 >= m) {
        const double beta =
            std::sqrt((2.0 * n + 1.0) * (n + m - 1.0) * (n - m - 1.0) /
                      ((2.0 * n - 3.0) * (n - m) * double(n + m)));
        term -= beta * p_[idx(n - 2, m)];
      }
      p_[idx(n, m)] = term;
    }
  }

  if (!with_derivatives) return;
  // dPbar_nm/dphi = (f_nm Pbar_{n-1,m} - n sin(phi) Pbar_nm) / cos(phi),
  // f_nm = sqrt((n^2 - m^2)(2n+1)/(2n-1)).
  for (int n = 0; n <= nmax_; ++n) {
    for (int m = 0; m <= n; ++m) {
      double f = 0.0;
      if (n >= 1 && n - 1 >= m)
        f = std::sqrt((double(n) * n - double(m) * m) * (2.0 * n + 1.0) /
                      (2.0 * n - 1.0));
      const double upper = (n - 1 >= m) ? p_[idx(n - 1, m)] : 0.0;
      dp_[idx(n, m)] = (f * upper - n * t * p_[idx(n, m)]) / u;
    }
  }
}

LonLat to_lonlat(const Vec3& p) {
  const double r = p.norm();
  if (!(r > 0.0)) throw OriginSingularity();
  return LonLat{std::atan2(p.y(), p.x()), std::asin(p.z() / r), r};
}

}  // namespace snac
