#pragma once

#include "snac/dynamics.hpp"
#include "snac/rng.hpp"
#include "snac/shape_recon.hpp"

namespace snac {

/// Truth asteroid surface, represented by spherical-harmonic shape
/// coefficients (the synthetic stand-in for a mesh model).
struct BodyShape {
  ShapeCoefficients harmonics;
  double avg_radius = 0.0;

  double radius(double lon, double lat) const {
    return evaluate_shape(harmonics, lon, lat);
  }
  Vec3 surface_point(double lon, double lat) const;
  /// Outward unit normal of the radial surface r(lon, lat).
  Vec3 outward_normal(double lon, double lat) const;
  /// True when the open segment between a and b (both outside or on the
  /// surface) dips below the surface, i.e. the body blocks the line of sight.
  bool segment_occluded(const Vec3& a, const Vec3& b) const;
  double min_radius() const;
  double max_radius() const;  // memoized grid scan

 private:
  mutable double max_radius_cache_ = 0.0;
};

/// Power-law synthesis parameters sigma(n) = K / n^alpha for the shape
/// [m] and the gravity coefficients [dimensionless].
struct BodySynthesisConfig {
  int shape_degree = 12;
  int gravity_degree = 8;
  double avg_radius = 8000.0;      // [m]
  double shape_K_fraction = 0.10;  // K_shape = fraction * avg_radius
  double shape_alpha = 1.84;
  double gravity_sigma2 = 0.05;  // RMS of the degree-2 gravity coefficients
  double gravity_alpha = 2.0;
  double mu = 4.4628e5;        // [m^3/s^2]
  double ref_radius = 16000.0; // Brillouin-sphere scale [m]
  double spin_alpha = 11.37 * M_PI / 180.0;
  double spin_delta = 17.22 * M_PI / 180.0;
  double spin_period = 5.27 * 3600.0;  // [s]
  double prime_meridian = 0.0;
};

struct BodyModel {
  BodyShape shape;
  GravityField gravity;
  RotationState rotation;
};

/// Deterministic synthetic body: shape and gravity coefficients sampled so
/// each degree's RMS follows the configured power law exactly, directions
/// random per seed.
BodyModel generate_body(std::uint64_t seed, const BodySynthesisConfig& config);

/// Surface features sampled approximately uniformly by area, each carrying
/// a fixed canonical descriptor.
struct SurfaceFeature {
  int id = 0;
  Vec3 acaf_position = Vec3::Zero();
  VecX canonical_descriptor;
  double detectability = 0.7;
};

std::vector<SurfaceFeature> seed_features(const BodyShape& shape, int count,
                                          std::uint64_t seed,
                                          double canonical_sigma = 12.0,
                                          double detectability = 0.7,
                                          int descriptor_dim = 128);

}  // namespace snac
