#include <algorithm>
#include <cmath>
#include <vector>

#include "doctest.h"
#include "snac/body.hpp"
#include "snac/rng.hpp"

using namespace snac;

namespace {

/// Two-sample Kolmogorov-Smirnov p-value (asymptotic).
double ks_two_sample_p(std::vector<double> a, std::vector<double> b) {
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  size_t ia = 0, ib = 0;
  double d = 0.0;
  while (ia < a.size() && ib < b.size()) {
    if (a[ia] <= b[ib])
      ++ia;
    else
      ++ib;
    const double fa = double(ia) / a.size();
    const double fb = double(ib) / b.size();
    d = std::max(d, std::abs(fa - fb));
  }
  const double ne = double(a.size()) * b.size() / (a.size() + b.size());
  const double lambda = (std::sqrt(ne) + 0.12 + 0.11 / std::sqrt(ne)) * d;
  double p = 0.0;
  for (int j = 1; j <= 100; ++j)
    p += 2.0 * std::pow(-1.0, j - 1) * std::exp(-2.0 * j * j * lambda *
                                                lambda);
  return std::clamp(p, 0.0, 1.0);
}

double nn_distance(const std::vector<Vec3>& pts, size_t i) {
  double best = std::numeric_limits<double>::infinity();
  for (size_t j = 0; j < pts.size(); ++j) {
    if (j == i) continue;
    best = std::min(best, (pts[i] - pts[j]).norm());
  }
  return best;
}

}  // namespace

TEST_CASE("degree-0 body is a sphere") {
  BodySynthesisConfig cfg;
  cfg.shape_degree = 4;
  cfg.shape_K_fraction = 0.0;  // no harmonics above degree 0
  cfg.avg_radius = 6000.0;
  const BodyModel body = generate_body(1, cfg);
  for (double lon : {0.1, 2.0, 4.5})
    for (double lat : {-1.2, 0.0, 0.9})
      CHECK(body.shape.radius(lon, lat) == doctest::Approx(6000.0));
}

TEST_CASE("generated spectrum follows the configured power law") {
  BodySynthesisConfig cfg;
  cfg.shape_degree = 12;
  cfg.shape_alpha = 1.84;
  cfg.avg_radius = 8000.0;
  const BodyModel body = generate_body(20240101, cfg);
  // Log-log regression of RMS against degree over 2..12.
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int n = 0;
  for (int deg = 2; deg <= 12; ++deg) {
    const double x = std::log(double(deg));
    const double y = std::log(body.shape.harmonics.degree_rms(deg));
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
    ++n;
  }
  const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  CHECK(std::abs(slope + 1.84) < 0.15);
}

TEST_CASE("same seed reproduces the body bit for bit") {
  BodySynthesisConfig cfg;
  const BodyModel a = generate_body(555, cfg);
  const BodyModel b = generate_body(555, cfg);
  CHECK(a.shape.harmonics.s == b.shape.harmonics.s);
  CHECK(a.gravity.cbar == b.gravity.cbar);
  CHECK(a.gravity.sbar == b.gravity.sbar);
}

TEST_CASE("gravity spectrum follows its power law and C20 is negative") {
  BodySynthesisConfig cfg;
  cfg.gravity_degree = 8;
  const BodyModel body = generate_body(99, cfg);
  CHECK(body.gravity.c(2, 0) < 0.0);
  CHECK(body.gravity.j2() > 0.0);
  for (int n = 2; n <= 8; ++n) {
    const double expected =
        cfg.gravity_sigma2 * std::pow(2.0 / n, cfg.gravity_alpha);
    CHECK(body.gravity.degree_rms(n) ==
          doctest::Approx(expected).epsilon(1e-9));
  }
}

TEST_CASE("radial function stays positive") {
  BodySynthesisConfig cfg;
  cfg.shape_degree = 12;
  cfg.shape_K_fraction = 0.2;  // rough body
  for (std::uint64_t seed : {7ull, 8ull, 9ull}) {
    const BodyModel body = generate_body(seed, cfg);
    CHECK(body.shape.min_radius() > 0.0);
  }
}

TEST_CASE("surface features lie on the surface") {
  BodySynthesisConfig cfg;
  const BodyModel body = generate_body(123, cfg);
  const auto features = seed_features(body.shape, 200, 456);
  CHECK(features.size() == 200);
  for (const auto& f : features) {
    const LonLat geo = to_lonlat(f.acaf_position);
    const double surf = body.shape.radius(geo.lon, geo.lat);
    CHECK(std::abs(geo.radius - surf) < 1.0);
    CHECK(f.canonical_descriptor.size() == 128);
  }
  // Single feature degenerate case.
  const auto one = seed_features(body.shape, 1, 42);
  CHECK(one.size() == 1);
}

TEST_CASE("feature sampling is consistent with uniform area sampling") {
  BodySynthesisConfig cfg;
  cfg.shape_degree = 8;
  const BodyModel body = generate_body(2024, cfg);
  const auto features = seed_features(body.shape, 1500, 777);

  // Monte Carlo reference: area-weighted sampling implemented
  // independently (dense grid cells weighted by their true area element).
  Rng rng(888);
  std::vector<Vec3> reference;
  {
    const int nlon = 160, nlat = 80;
    std::vector<double> weight(nlon * nlat);
    std::vector<Vec3> center(nlon * nlat);
    double wsum = 0.0;
    for (int i = 0; i < nlon; ++i)
      for (int j = 0; j < nlat; ++j) {
        const double lon = 2 * M_PI * (i + 0.5) / nlon;
        const double lat = M_PI * (j + 0.5) / nlat - M_PI / 2;
        const double r = body.shape.radius(lon, lat);
        const Vec3 n = body.shape.outward_normal(lon, lat);
        const Vec3 rhat(std::cos(lat) * std::cos(lon),
                        std::cos(lat) * std::sin(lon), std::sin(lat));
        const double cosg = std::max(0.15, n.dot(rhat));
        const int idx = i * nlat + j;
        weight[idx] = r * r * std::cos(lat) / cosg;
        center[idx] = body.shape.surface_point(lon, lat);
        wsum += weight[idx];
      }
    (void)center;
    for (int k = 0; k < 1500; ++k) {
      double u = rng.uniform() * wsum;
      int idx = 0;
      while (idx + 1 < nlon * nlat && u > weight[idx]) {
        u -= weight[idx];
        ++idx;
      }
      // Jitter uniformly inside the chosen cell to avoid duplicate points.
      const int i = idx / nlat, j = idx % nlat;
      const double lon = 2 * M_PI * (i + rng.uniform()) / nlon;
      const double lat = M_PI * (j + rng.uniform()) / nlat - M_PI / 2;
      reference.push_back(body.shape.surface_point(lon, lat));
    }
  }

  std::vector<double> nn_feat, nn_ref;
  std::vector<Vec3> fpos;
  for (const auto& f : features) fpos.push_back(f.acaf_position);
  for (size_t i = 0; i < fpos.size(); ++i)
    nn_feat.push_back(nn_distance(fpos, i));
  for (size_t i = 0; i < reference.size(); ++i)
    nn_ref.push_back(nn_distance(reference, i));
  CHECK(ks_two_sample_p(nn_feat, nn_ref) > 0.01);
}
