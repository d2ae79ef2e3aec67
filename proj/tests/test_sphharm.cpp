#include <cmath>

#include "doctest.h"
#include "snac/sphharm.hpp"

using namespace snac;

namespace {

/// Closed-form fully normalized associated Legendre values through degree 4
/// (independent of the recursion in the library).
double pbar_closed_form(int n, int m, double t) {
  const double u = std::sqrt(1.0 - t * t);
  switch (n * 10 + m) {
    case 0: return 1.0;
    case 10: return std::sqrt(3.0) * t;
    case 11: return std::sqrt(3.0) * u;
    case 20: return std::sqrt(5.0) * 0.5 * (3.0 * t * t - 1.0);
    case 21: return std::sqrt(5.0 / 3.0) * 3.0 * t * u;
    case 22: return std::sqrt(5.0 / 12.0) * 3.0 * u * u;
    case 30: return std::sqrt(7.0) * 0.5 * (5.0 * t * t * t - 3.0 * t);
    case 31:
      return std::sqrt(7.0 / 6.0) * 1.5 * (5.0 * t * t - 1.0) * u;
    case 32: return std::sqrt(7.0 / 60.0) * 15.0 * t * u * u;
    case 33: return std::sqrt(7.0 / 360.0) * 15.0 * u * u * u;
    case 40:
      return 3.0 * (0.125 * (35.0 * t * t * t * t - 30.0 * t * t + 3.0));
    case 41:
      return std::sqrt(9.0 / 10.0) * 2.5 * (7.0 * t * t * t - 3.0 * t) * u;
    case 42:
      return std::sqrt(9.0 / 180.0) * 7.5 * (7.0 * t * t - 1.0) * u * u;
    case 43: return std::sqrt(9.0 / 2520.0) * 105.0 * t * u * u * u;
    case 44: return std::sqrt(9.0 / 20160.0) * 105.0 * u * u * u * u;
  }
  return 0.0;
}

}  // namespace

TEST_CASE("normalization factor values") {
  CHECK(sh_normalization(0, 0) == doctest::Approx(1.0));
  // sqrt(2!/(1*5*2!)) = sqrt(1/5)
  CHECK(sh_normalization(2, 0) == doctest::Approx(0.44721).epsilon(1e-4));
  // sqrt(4!/(2*5*0!)) = sqrt(2.4)
  CHECK(sh_normalization(2, 2) == doctest::Approx(1.54919).epsilon(1e-4));
}

TEST_CASE("normalization factor log-space branch is continuous") {
  // Degrees around the switch evaluate the same both ways.
  for (int n = 9; n <= 12; ++n) {
    for (int m = 0; m <= n; ++m) {
      double num = 1.0;
      for (int k = n - m + 1; k <= n + m; ++k) num *= k;
      const double delta = (m == 0) ? 1.0 : 0.0;
      const double direct =
          std::sqrt(num / ((2.0 - delta) * (2.0 * n + 1.0)));
      CHECK(sh_normalization(n, m) ==
            doctest::Approx(direct).epsilon(1e-12));
    }
  }
}

TEST_CASE("Legendre recursion matches closed forms through degree 4") {
  for (double lat : {-1.2, -0.4, 0.0, 0.3, 0.9, 1.4}) {
    const double t = std::sin(lat);
    LegendreTable table(4, t, std::cos(lat));
    for (int n = 0; n <= 4; ++n)
      for (int m = 0; m <= n; ++m) {
        CHECK(table.value(n, m) ==
              doctest::Approx(pbar_closed_form(n, m, t)).epsilon(1e-10));
      }
  }
}

TEST_CASE("Legendre derivative matches central differences") {
  const double h = 1e-6;
  for (double lat : {-1.1, -0.2, 0.5, 1.3}) {
    LegendreTable table(8, std::sin(lat), std::cos(lat));
    LegendreTable up(8, std::sin(lat + h), std::cos(lat + h));
    LegendreTable dn(8, std::sin(lat - h), std::cos(lat - h));
    for (int n = 0; n <= 8; ++n)
      for (int m = 0; m <= n; ++m) {
        const double fd = (up.value(n, m) - dn.value(n, m)) / (2.0 * h);
        CHECK(table.deriv(n, m) ==
              doctest::Approx(fd).epsilon(1e-5).scale(1.0));
      }
  }
}

TEST_CASE("lonlat round trip") {
  const Vec3 p(1000.0, -2000.0, 500.0);
  const LonLat geo = to_lonlat(p);
  const Vec3 back =
      geo.radius * Vec3(std::cos(geo.lat) * std::cos(geo.lon),
                        std::cos(geo.lat) * std::sin(geo.lon),
                        std::sin(geo.lat));
  CHECK((back - p).norm() < 1e-9 * p.norm());
}
