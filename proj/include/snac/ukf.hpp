#pragma once

#include <algorithm>
#include <deque>
#include <vector>

#include "snac/dynamics.hpp"
#include "snac/frames.hpp"
#include "snac/stereovision.hpp"
#include "snac/truth_sim.hpp"

namespace snac {

/// Index map of the filter state vector:
///   [psi | G | x_1 C_r1 | ... | x_ns C_rns | db | L_1 ... L_nl]
/// psi = (alpha, delta, omega); G = (mu, Cbar..., Sbar...); x_i is the ACI
/// position/velocity; db holds deputy clock bias/drift pairs (meters,
/// meters/s); landmarks are ACAF positions appended at the tail.
struct FilterLayout {
  int n_spacecraft = 3;
  int gravity_degree = 4;
  int n_landmarks = 0;

  int gravity_size() const {
    return 1 + GravityField::c_count(gravity_degree) +
           GravityField::s_count(gravity_degree);
  }
  int idx_psi() const { return 0; }
  int idx_gravity() const { return 3; }
  int idx_spacecraft(int i) const { return 3 + gravity_size() + 7 * i; }
  int idx_cr(int i) const { return idx_spacecraft(i) + 6; }
  /// Size of the block whose dynamics require orbit propagation.
  int head_size() const { return 3 + gravity_size() + 7 * n_spacecraft; }
  int idx_clock() const { return head_size(); }
  int idx_clock_deputy(int spacecraft) const {
    return idx_clock() + 2 * (spacecraft - 1);
  }
  int clock_size() const { return 2 * std::max(0, n_spacecraft - 1); }
  int base_size() const { return head_size() + clock_size(); }
  int idx_landmark(int j) const { return base_size() + 3 * j; }
  int size() const { return base_size() + 3 * n_landmarks; }
};

struct FilterEstimate {
  double epoch = 0.0;
  FilterLayout layout;
  VecX mean;
  MatX covariance;
  std::vector<int> landmark_ids;  // state slot -> landmark database id

  Vec3 psi() const { return mean.segment<3>(0); }
  GravityField gravity_field(double ref_radius) const;
  RotationState rotation_state(double prime_meridian) const;
  SpacecraftState spacecraft_state(int i, double aom) const;
  Vec3 landmark(int slot) const {
    return mean.segment<3>(layout.idx_landmark(slot));
  }
  int landmark_slot(int id) const;
};

struct UkfConfig {
  double alpha = 1e-3;
  double beta = 2.0;
  double kappa = 0.0;
  double underweight_factor = 2.0;  // P_zz = f * P_hh + R
  double stereo_inflation = 2.0;    // P_L inflation at augmentation
  int substeps = 1;                 // RK4 substeps over one interval
  bool innovation_gate_enabled = false;
  double innovation_gate_sigma = 5.0;
  double pixel_sigma = 2.0;      // [px]
  double range_sigma = 0.10;     // [m]
  double doppler_sigma = 0.001;  // [m/s]
};

/// Filter-side physical model: everything the estimator treats as known.
struct UkfModel {
  UkfConfig config;
  SunEphemeris sun;
  double ref_radius = 16000.0;
  double prime_meridian = 0.0;
  std::vector<double> cross_section_over_mass;  // per spacecraft
  std::vector<double> clock_q1;                 // per spacecraft [s]
  std::vector<double> clock_q2;                 // per spacecraft [1/s]
  bool srp_enabled = true;
  bool third_body_enabled = true;

  DynamicsModel dynamics_for(const FilterEstimate& est) const;
};

/// Deterministic symmetric sigma points from a lower-triangular Cholesky
/// factor. When the factorization fails the covariance is repaired by
/// clamping eigenvalues at 1e-12 * trace.
struct SigmaPoints {
  MatX points;  // n x (2n+1)
  VecX wm, wc;
  bool repaired = false;
};
SigmaPoints make_sigma_points(const VecX& mean, const MatX& covariance,
                              const UkfConfig& config);

/// Process noise for the full state: ASNC-driven spacecraft blocks plus the
/// correlated deputy clock blocks.
MatX assemble_process_noise(const FilterLayout& layout, double dt,
                            const VecX& qtilde, const UkfModel& model);

struct TimeUpdateResult {
  FilterEstimate estimate;
  int orbit_propagations = 0;  // (sigma point, spacecraft) RK4 calls
  bool covariance_repaired = false;
};

/// UKF time update exploiting the triangular structure of the Cholesky
/// factor: sigma points that differ from the mean only in trailing
/// identity-dynamics coordinates reuse the central propagation. The result
/// is numerically identical to propagating all 2n+1 points.
TimeUpdateResult time_update(const FilterEstimate& est, double dt,
                             const UkfModel& model, const VecX& qtilde);

/// Stereo augmentation per the joint block covariance; indefinite results
/// drop the offending landmark.
struct AugmentResult {
  FilterEstimate estimate;
  std::vector<int> dropped_ids;
};
AugmentResult augment(const FilterEstimate& est,
                      const std::vector<StereoEstimate>& stereo,
                      const std::vector<int>& ids, const UkfConfig& config);

struct PixelMeasurement {
  int landmark_id = -1;
  int spacecraft = 0;
  PixelPoint pixel;
};

/// Innovation bookkeeping consumed by ASNC.
struct InnovationRecord {
  VecX innovation;
  MatX p_hh;
  VecX r_diag;
  MatX h_effective;  // statistical linearization: P_xz^T (P^-)^-1
  int n_pixel_measurements = 0;
  double dt = 0.0;
};

struct MeasurementUpdateResult {
  FilterEstimate estimate;
  InnovationRecord innovation;
  int gated_measurements = 0;
};

/// Joint UKF measurement update over RF and pixel measurements with Lear
/// underweighting. Star-tracker attitude solutions provide the CF
/// rotations of the pixel models.
MeasurementUpdateResult measurement_update(
    const FilterEstimate& est, const std::vector<RfMeasurement>& rf,
    const std::vector<PixelMeasurement>& pixels,
    const std::vector<FrameRotation>& attitudes, const Mat3& camera_calib,
    const UkfModel& model, double dt_since_last);

/// Remove landmarks from the state; returns the excised marginals.
struct RetiredLandmarkState {
  int id;
  Vec3 mean;
  Mat3 covariance;
};
std::vector<RetiredLandmarkState> retire_from_state(FilterEstimate& est,
                                                    const std::vector<int>& ids);

/// ASNC: adaptive estimation of the unmodeled-acceleration PSD by
/// covariance matching over a sliding window of innovations.
struct AsncConfig {
  int window = 50;
  double initial_qtilde = 0.0;  // 0 -> start from the upper bound
  bool enabled = true;
};

struct AsncState {
  VecX qtilde;  // 3 per spacecraft [m^2/s^3]
  struct Sample {
    VecX mismatch;      // diag innovation-covariance mismatch
    MatX sensitivities; // z x (3 ns): d diag / d qtilde
  };
  std::deque<Sample> window;

  static AsncState initial(const FilterLayout& layout, double qtilde0);
};

/// Upper bound Qu = a_max^2 dt with a_max = 3 mu J2 Rref^2 / (2 r^4).
double asnc_upper_bound(double mu, double j2, double ref_radius, double r,
                        double dt);

/// Update the window and re-estimate qtilde. Epochs without pixel
/// measurements are excluded. Bounds are applied per element.
void asnc_update(AsncState& state, const InnovationRecord& record,
                 const FilterEstimate& est, const UkfModel& model,
                 const AsncConfig& config, const VecX& upper_bounds);

/// Predicted pixel and covariance of one filter landmark in one image
/// (the F2SC projection belief): partials taken with respect to the
/// observing spacecraft position and the rotation parameters.
struct ProjectedLandmark {
  PixelPoint pixel;
  Mat2 covariance;
  bool valid = false;
};
ProjectedLandmark project_landmark_belief(const FilterEstimate& est, int slot,
                                          int spacecraft,
                                          const FrameRotation& attitude,
                                          const Mat3& camera_calib,
                                          const UkfModel& model);

}  // namespace snac
