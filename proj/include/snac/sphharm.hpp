#pragma once

#include <vector>

#include "snac/linalg.hpp"

namespace snac {

/// Normalization factor kappa_nm relating normalized and unnormalized
/// harmonic coefficients: Cbar = kappa * C and Pbar = P / kappa, with
/// kappa = sqrt((n+m)! / ((2 - delta_0m)(2n+1)(n-m)!)). Evaluated in log
/// space above degree 10.
double sh_normalization(int n, int m);

/// Triangular table of fully normalized associated Legendre functions
/// Pbar_nm(sin(phi)) for 0 <= m <= n <= max_degree, plus d/dphi values
/// (derivative rows are skipped when with_derivatives is false).
class LegendreTable {
 public:
  LegendreTable(int max_degree, double sin_phi, double cos_phi,
                bool with_derivatives = true);

  double value(int n, int m) const { return p_[idx(n, m)]; }
  /// dPbar_nm/dphi. Requires |cos phi| > 0 (guarded by a small floor).
  double deriv(int n, int m) const { return dp_[idx(n, m)]; }

  int max_degree() const { return nmax_; }

 private:
  int idx(int n, int m) const { return n * (n + 1) / 2 + m; }
  int nmax_;
  std::vector<double> p_;
  std::vector<double> dp_;
};

/// Longitude/latitude of a Cartesian point (radians).
struct LonLat {
  double lon;
  double lat;
  double radius;
};
LonLat to_lonlat(const Vec3& p);

}  // namespace snac
