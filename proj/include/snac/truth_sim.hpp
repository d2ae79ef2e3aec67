#pragma once

#include <vector>

#include "snac/body.hpp"
#include "snac/dynamics.hpp"
#include "snac/frames.hpp"
#include "snac/rng.hpp"

namespace snac {

/// Synthetic keypoint detection. truth_feature_id is evaluation-only
/// bookkeeping and never feeds the estimation path.
struct KeypointObservation {
  int spacecraft = 0;
  double epoch = 0.0;
  PixelPoint pixel;
  VecX descriptor;
  int truth_feature_id = -1;
};

struct RfMeasurement {
  int transmitter = 0;
  int receiver = 0;
  double epoch = 0.0;
  double pseudorange = 0.0;  // [m]
  double doppler = 0.0;      // [m/s]
};

struct DetectionConfig {
  double pixel_sigma = 2.0;        // [px]
  double descriptor_sigma = 3.0;   // intra-feature observation noise
  double limb_angle = 10.0 * M_PI / 180.0;  // minimum grazing angle
  double terminator_cos = 0.30;    // full detectability above this incidence
  bool noise_enabled = true;
};

/// Emit keypoints for the features visible from `camera` (world frame ACI)
/// given the body orientation at the epoch and the sun direction.
std::vector<KeypointObservation> detect_keypoints(
    const std::vector<SurfaceFeature>& features, const BodyShape& shape,
    const FrameRotation& aci_from_acaf_rot, const CameraModel& camera,
    const Vec3& sun_dir_aci, const DetectionConfig& config, int spacecraft,
    double epoch, Rng& rng);

struct RfNoiseConfig {
  double range_sigma = 0.10;     // [m]
  double doppler_sigma = 0.001;  // [m/s]
  bool noise_enabled = true;
};

/// One-way pseudorange and Doppler from spacecraft i to j. Clock terms enter
/// as c*(eta_j - eta_i) and its drift analogue; light time is neglected.
RfMeasurement measure_rf(const SpacecraftState& state_i,
                         const SpacecraftState& state_j,
                         const ClockState& clock_i, const ClockState& clock_j,
                         int i, int j, double epoch,
                         const RfNoiseConfig& config, Rng& rng);

struct AttitudeNoiseConfig {
  double sigma_z = 24.0 * M_PI / (180.0 * 3600.0);   // [rad]
  double sigma_xy = 7.0 * M_PI / (180.0 * 3600.0);   // [rad]
  bool noise_enabled = true;
};

/// Star-tracker attitude solution: truth rotation composed with a
/// stochastic 3-1-2 Euler sequence.
FrameRotation measure_attitude(const FrameRotation& truth_aci_to_cf,
                               const AttitudeNoiseConfig& config, Rng& rng);

/// True acquisition epoch: nominal minus the true clock offset plus the
/// estimated offset relative to the mothership.
double acquisition_time(double nominal, const ClockState& own_clock,
                        double estimated_offset_s);

/// Nadir-pointing truth attitude: CF z toward the body center, CF y along
/// the orbit angular momentum.
FrameRotation nadir_attitude(const SpacecraftState& state);

}  // namespace snac
