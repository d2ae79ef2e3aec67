#pragma once

#include <cmath>
#include <utility>
#include <vector>

#include "snac/frames.hpp"
#include "snac/linalg.hpp"
#include "snac/rng.hpp"

namespace snac {

constexpr double kAstronomicalUnit = 1.495978707e11;  // [m]
constexpr double kSpeedOfLight = 299792458.0;         // [m/s]
constexpr double kMuSun = 1.32712440018e20;           // [m^3/s^2]
constexpr double kSolarPressure1Au = 1361.0 / kSpeedOfLight;  // [N/m^2]

/// Normalized spherical-harmonic gravity field. Degree 0 is carried by mu;
/// degree 1 vanishes by the center-of-mass convention. Coefficients are
/// stored degree-major for degrees 2..degree: Cbar m = 0..n, Sbar m = 1..n.
struct GravityField {
  double mu = 0.0;          // [m^3/s^2]
  double ref_radius = 0.0;  // [m]
  int degree = 2;           // N_g >= 2
  VecX cbar;
  VecX sbar;

  static int c_count(int degree) { return (degree + 1) * (degree + 2) / 2 - 3; }
  static int s_count(int degree) { return degree * (degree + 1) / 2 - 1; }

  static GravityField point_mass(double mu, double ref_radius, int degree = 2);

  double c(int n, int m) const { return cbar[c_index(n, m)]; }
  double s(int n, int m) const { return sbar[s_index(n, m)]; }
  void set_c(int n, int m, double v) { cbar[c_index(n, m)] = v; }
  void set_s(int n, int m, double v) { sbar[s_index(n, m)] = v; }

  /// Unnormalized J2 = -sqrt(5) * Cbar_20.
  double j2() const { return -std::sqrt(5.0) * c(2, 0); }

  /// All coefficients as one vector [Cbar..., Sbar...] (filter state layout).
  VecX coefficient_vector() const;
  void set_coefficient_vector(const VecX& v);

  /// RMS power spectrum per degree (rotation invariant).
  double degree_rms(int n) const;

  static int c_index(int n, int m) { return n * (n + 1) / 2 - 3 + m; }
  static int s_index(int n, int m) { return n * (n - 1) / 2 - 2 + m; }
};

/// Uniform rotation about the body's maximum-inertia principal axis.
struct RotationState {
  double alpha = 0.0;  // spin axis right ascension [rad]
  double delta = 0.0;  // spin axis declination [rad]
  double omega = 0.0;  // spin rate [rad/s]
  double prime_meridian_epoch_angle = 0.0;  // at t = 0 [rad]

  Vec3 spin_axis_aci() const;
};

/// Rotation taking ACAF coordinates to ACI at time t (t = 0 is the epoch of
/// prime_meridian_epoch_angle).
FrameRotation aci_from_acaf(const RotationState& rot, double t);

/// ACIC: inertial frame whose x-axis matches the ACAF x-axis at t = 0.
FrameRotation aci_from_acic(const RotationState& rot);

/// Circular heliocentric motion of the asteroid; the returned vector is the
/// Sun position relative to the asteroid, expressed in ACI.
struct SunEphemeris {
  double distance = 1.458 * kAstronomicalUnit;
  double phase0 = 0.0;
  double mu_sun = kMuSun;
  Vec3 position_aci(double t) const;
};

struct SpacecraftState {
  Vec3 position = Vec3::Zero();  // ACI [m]
  Vec3 velocity = Vec3::Zero();  // ACI [m/s]
  double srp_coeff = 1.2;        // C_r
  double cross_section_over_mass = 0.01;  // [m^2/kg]
};

/// Acceleration environment shared by truth and filter propagation.
struct DynamicsModel {
  GravityField gravity;
  RotationState rotation;
  SunEphemeris sun;
  bool srp_enabled = true;
  bool third_body_enabled = true;
};

/// Gravitational potential of the field at an ACAF position.
double gravity_potential_acaf(const GravityField& field, const Vec3& pos_acaf);

/// Gravity acceleration at an ACI position and time: rotate into ACAF,
/// evaluate the harmonic series, rotate back. Throws OriginSingularity at
/// the origin.
Vec3 gravity_accel(const GravityField& field, const RotationState& rotation,
                   const Vec3& pos_aci, double t);

/// Total modeled acceleration (gravity + SRP + solar third body).
Vec3 total_accel(const DynamicsModel& model, const SpacecraftState& state,
                 double t);

/// Fixed-step RK4 over [t0, t0+dt] with `substeps` stages (filter dynamics).
SpacecraftState propagate_rk4(const SpacecraftState& state,
                              const DynamicsModel& model, double t0, double dt,
                              int substeps);

/// Adaptive embedded Dormand-Prince 5(4) (truth dynamics). Throws
/// StepFailure if the controller cannot meet the tolerance.
SpacecraftState propagate_adaptive(const SpacecraftState& state,
                                   const DynamicsModel& model, double t0,
                                   double dt, double rel_tol);

/// Two-state clock: offset [s] and drift [s/s] with white-noise PSDs q1 [s]
/// and q2 [1/s].
struct ClockState {
  double offset = 0.0;
  double drift = 0.0;
  double q1 = 0.0;
  double q2 = 0.0;
};

/// Discrete process-noise covariance of the two-state clock over dt.
Mat2 clock_process_noise(double q1, double q2, double dt);

/// One stochastic transition of the clock over dt.
ClockState clock_transition(const ClockState& clock, double dt, Rng& rng);

/// Fit (q1, q2) to Allan-variance samples sigma_y^2(tau) = q1/tau + q2 tau/3
/// by weighted least squares with non-negativity clamping. Throws
/// DegenerateFit when fewer than two distinct tau values are provided.
std::pair<double, double> allan_variance_fit(
    const std::vector<std::pair<double, double>>& avar_samples);

struct OrbitalElements {
  double a = 0.0;      // semi-major axis [m]
  double e = 0.0;      // eccentricity
  double i = 0.0;      // inclination [rad]
  double raan = 0.0;   // right ascension of ascending node [rad]
  double argp = 0.0;   // argument of periapsis [rad]
  double mean_anomaly = 0.0;  // [rad]
};

/// Quasi-nonsingular relative orbital elements (dimensionless).
struct RelativeOrbitalElements {
  double da = 0.0;
  double dlambda = 0.0;
  double dex = 0.0;
  double dey = 0.0;
  double dix = 0.0;
  double diy = 0.0;

  VecX vector() const;
};

double solve_kepler(double mean_anomaly, double e);
double true_anomaly_from_eccentric(double E, double e);

/// Cartesian state in the frame the elements are expressed in.
SpacecraftState oe_to_cartesian(const OrbitalElements& oe, double mu);
OrbitalElements cartesian_to_oe(const SpacecraftState& state, double mu);

RelativeOrbitalElements oe_to_roe(const OrbitalElements& chief,
                                  const OrbitalElements& deputy);

/// Apply ROE to a chief to obtain deputy elements (inverse of oe_to_roe).
OrbitalElements roe_to_oe(const OrbitalElements& chief,
                          const RelativeOrbitalElements& roe);

/// First-order J2 mean-to-osculating mapping (Brouwer-Lyddane, J2 only).
OrbitalElements mean_to_osculating(const OrbitalElements& mean, double j2,
                                   double mu, double ref_radius);

/// Numerical inverse of mean_to_osculating (fixed point); round trips to
/// better than 1e-9 relative.
OrbitalElements osculating_to_mean(const OrbitalElements& osc, double j2,
                                   double mu, double ref_radius);

}  // namespace snac
