#include "snac/body.hpp"

#include <algorithm>
#include <cmath>

namespace snac {

Vec3 BodyShape::surface_point(double lon, double lat) const {
  const double r = radius(lon, lat);
  return r * Vec3(std::cos(lat) * std::cos(lon), std::cos(lat) * std::sin(lon),
                  std::sin(lat));
}

Vec3 BodyShape::outward_normal(double lon, double lat) const {
  // Surface F(p) = |p| - r(lon(p), lat(p)) = 0; the gradient in spherical
  // unit vectors is (1, -dr/dlat / r, -dr/dlon / (r cos lat)).
  const ShapeEval ev = evaluate_shape_gradient(harmonics, lon, lat);
  const double cl = std::cos(lat), sl = std::sin(lat);
  const double co = std::cos(lon), so = std::sin(lon);
  const Vec3 rhat(cl * co, cl * so, sl);
  const Vec3 lathat(-sl * co, -sl * so, cl);
  const Vec3 lonhat(-so, co, 0.0);
  const double clat = std::max(cl, 1e-9);  // lat in [-pi/2, pi/2]
  const Vec3 grad = rhat - (ev.dr_dlat / ev.r) * lathat -
                    (ev.dr_dlon / (ev.r * clat)) * lonhat;
  return grad.normalized();
}

bool BodyShape::segment_occluded(const Vec3& a, const Vec3& b) const {
  // Coarse pass: skip the whole march when the segment stays outside the
  // circumscribing sphere except near the surface endpoint.
  const Vec3 ab = b - a;
  const double len2 = ab.squaredNorm();
  const double rmax = 1.05 * max_radius();
  const double t_closest = std::clamp(-a.dot(ab) / len2, 0.0, 1.0);
  if ((a + t_closest * ab).norm() > rmax) return false;

  const int steps = 28;
  for (int k = 1; k < steps; ++k) {
    const double t = double(k) / steps;
    const Vec3 p = a + t * ab;
    const LonLat geo = to_lonlat(p);
    if (geo.radius > rmax) continue;
    const double surf = radius(geo.lon, geo.lat);
    // Strictly below the surface (with margin) blocks the segment. The
    // endpoints themselves may lie on the surface.
    const double margin = 1e-3 * avg_radius * std::min(t, 1.0 - t);
    if (geo.radius < surf - margin) return true;
  }
  return false;
}

double BodyShape::min_radius() const {
  double lo = std::numeric_limits<double>::infinity();
  for (int i = 0; i < 72; ++i)
    for (int j = 1; j < 36; ++j) {
      const double lon = 2.0 * M_PI * i / 72;
      const double lat = M_PI * j / 36 - M_PI / 2;
      lo = std::min(lo, radius(lon, lat));
    }
  return lo;
}

double BodyShape::max_radius() const {
  if (max_radius_cache_ > 0.0) return max_radius_cache_;
  double hi = 0.0;
  for (int i = 0; i < 72; ++i)
    for (int j = 1; j < 36; ++j) {
      const double lon = 2.0 * M_PI * i / 72;
      const double lat = M_PI * j / 36 - M_PI / 2;
      hi = std::max(hi, radius(lon, lat));
    }
  max_radius_cache_ = hi;
  return hi;
}

namespace {

/// Sample one degree's coefficients with exact RMS. Returns 2n+1 values.
void sample_degree(Rng& rng, int n, double target_rms, ShapeCoefficients& sc) {
  std::vector<double> vals(2 * n + 1);
  double ss = 0.0;
  for (double& v : vals) {
    v = rng.normal();
    ss += v * v;
  }
  const double realized = std::sqrt(ss / (2.0 * n + 1.0));
  const double scale = (realized > 0.0) ? target_rms / realized : 0.0;
  int k = 0;
  for (int m = 0; m <= n; ++m) sc.set_a(n, m, vals[k++] * scale);
  for (int m = 1; m <= n; ++m) sc.set_b(n, m, vals[k++] * scale);
}

}  // namespace

BodyModel generate_body(std::uint64_t seed,
                        const BodySynthesisConfig& config) {
  BodyModel body;
  Rng rng(seed);

  // Shape: A00 = average radius, degrees 1..N on the power law.
  ShapeCoefficients sc = ShapeCoefficients::zeros(config.shape_degree);
  sc.s[0] = config.avg_radius;
  const double K_shape = config.shape_K_fraction * config.avg_radius;
  for (int n = 1; n <= config.shape_degree; ++n)
    sample_degree(rng, n, K_shape / std::pow(double(n), config.shape_alpha),
                  sc);
  body.shape.harmonics = sc;
  body.shape.avg_radius = config.avg_radius;
  // Keep the radial function comfortably positive.
  const double rmin = body.shape.min_radius();
  if (rmin < 0.2 * config.avg_radius) {
    const double shrink =
        0.8 * (config.avg_radius - 0.2 * config.avg_radius) /
        (config.avg_radius - rmin);
    for (int i = 1; i < sc.s.size(); ++i) sc.s[i] *= shrink;
    body.shape.harmonics = sc;
  }

  // Gravity: degrees 2..N on its own power law; C20 forced negative so the
  // body is oblate-like and the J2-based ASNC bound is positive.
  GravityField field = GravityField::point_mass(config.mu, config.ref_radius,
                                                config.gravity_degree);
  const double K_g =
      config.gravity_sigma2 * std::pow(2.0, config.gravity_alpha);
  ShapeCoefficients tmp = ShapeCoefficients::zeros(config.gravity_degree);
  for (int n = 2; n <= config.gravity_degree; ++n) {
    sample_degree(rng, n, K_g / std::pow(double(n), config.gravity_alpha),
                  tmp);
    for (int m = 0; m <= n; ++m) field.set_c(n, m, tmp.a(n, m));
    for (int m = 1; m <= n; ++m) field.set_s(n, m, tmp.b(n, m));
  }
  field.set_c(2, 0, -std::abs(field.c(2, 0)));

  body.gravity = field;
  body.rotation.alpha = config.spin_alpha;
  body.rotation.delta = config.spin_delta;
  body.rotation.omega = 2.0 * M_PI / config.spin_period;
  body.rotation.prime_meridian_epoch_angle = config.prime_meridian;
  return body;
}

std::vector<SurfaceFeature> seed_features(const BodyShape& shape, int count,
                                          std::uint64_t seed,
                                          double canonical_sigma,
                                          double detectability,
                                          int descriptor_dim) {
  std::vector<SurfaceFeature> features;
  features.reserve(count);
  Rng rng(seed);

  // Area-uniform sampling via rejection: weight ~ r^2 / cos(slope), where
  // slope is the angle between the outward normal and the radial direction.
  double wmax = 0.0;
  for (int i = 0; i < 48; ++i)
    for (int j = 1; j < 24; ++j) {
      const double lon = 2.0 * M_PI * i / 48;
      const double lat = M_PI * j / 24 - M_PI / 2;
      const double r = shape.radius(lon, lat);
      const Vec3 n = shape.outward_normal(lon, lat);
      const Vec3 rhat(std::cos(lat) * std::cos(lon),
                      std::cos(lat) * std::sin(lon), std::sin(lat));
      const double cosg = std::max(0.15, n.dot(rhat));
      wmax = std::max(wmax, r * r / cosg);
    }
  wmax *= 1.2;

  int id = 0;
  while (static_cast<int>(features.size()) < count) {
    // Uniform direction on the sphere.
    const double z = rng.uniform(-1.0, 1.0);
    const double lon = rng.uniform(0.0, 2.0 * M_PI);
    const double lat = std::asin(z);
    const double r = shape.radius(lon, lat);
    const Vec3 n = shape.outward_normal(lon, lat);
    const Vec3 rhat(std::cos(lat) * std::cos(lon),
                    std::cos(lat) * std::sin(lon), std::sin(lat));
    const double cosg = std::max(0.15, n.dot(rhat));
    const double w = r * r / cosg;
    if (rng.uniform() * wmax > w) continue;

    SurfaceFeature f;
    f.id = id++;
    f.acaf_position = shape.surface_point(lon, lat);
    f.canonical_descriptor = VecX(descriptor_dim);
    for (int k = 0; k < descriptor_dim; ++k)
      f.canonical_descriptor[k] = rng.normal(0.0, canonical_sigma);
    f.detectability = detectability;
    features.push_back(std::move(f));
  }
  return features;
}

}  // namespace snac
