#pragma once

#include <optional>
#include <string>
#include <vector>

#include "snac/body.hpp"
#include "snac/correlation.hpp"
#include "snac/dynamics.hpp"
#include "snac/truth_sim.hpp"
#include "snac/ukf.hpp"

namespace snac {

/// A-priori filter uncertainties (Gaussian 1-sigma per element).
struct AprioriSigmas {
  double position = 500.0;      // [m], per axis
  double velocity = 0.05;       // [m/s], per axis
  double srp_frac = 0.10;       // fraction of C_r
  double range_bias = 20.0;     // [m]
  double doppler_bias = 0.002;  // [m/s]
  double mu_frac = 0.05;        // fraction of mu
  double spin_axis = 0.1 * M_PI / 180.0;  // [rad], alpha and delta
  double spin_rate_frac = 4e-6;           // fraction of omega
  double gravity_coeff = 0.005;
};

struct DeputyConfig {
  RelativeOrbitalElements roe;  // dimensionless (dlambda = offset / a)
};

struct ScenarioConfig {
  std::string name = "desk";
  std::uint64_t seed = 1;
  double duration_orbits = 2.0;
  double cadence = 300.0;  // [s]

  BodySynthesisConfig body;
  std::string gravity_file;  // optional truth-field override
  double sun_distance = 1.458 * kAstronomicalUnit;
  double sun_phase = 0.0;

  OrbitalElements chief_mean{45e3, 0.001, 110.0 * M_PI / 180.0,
                             110.0 * M_PI / 180.0, 0.0, M_PI};
  std::vector<DeputyConfig> deputies;
  double srp_coeff = 1.2;
  double area_over_mass = 0.01;
  double clock_q1 = 6.2e-21;
  double clock_q2 = 1.2e-27;
  bool mothership_clock_perfect = true;

  double camera_focal = 2500.0;
  int camera_width = 1024;
  int camera_height = 1024;

  int feature_count = 2000;
  double feature_detectability = 0.7;
  double canonical_sigma = 12.0;
  DetectionConfig detection;
  RfNoiseConfig rf_noise;
  AttitudeNoiseConfig attitude_noise;

  CorrelationConfig correlation;
  UkfConfig ukf;
  int filter_gravity_degree = 4;
  int max_new_landmarks = 8;
  AsncConfig asnc;
  AprioriSigmas apriori;
  double truth_tolerance = 1e-12;

  int shape_fit_degree = 8;
  double shape_fit_alpha = 1.84;
  double tp_distance = 50.0;  // true-positive radius [m]

  int n_spacecraft() const { return 1 + static_cast<int>(deputies.size()); }
  double orbit_period() const {
    return 2.0 * M_PI * std::sqrt(std::pow(chief_mean.a, 3) / body.mu);
  }
  int epoch_count() const {
    return static_cast<int>(duration_orbits * orbit_period() / cadence);
  }

  /// Throws ConfigError with a description when invalid.
  void validate() const;

  static ScenarioConfig from_json_file(const std::string& path);
  static ScenarioConfig from_json_text(const std::string& text);
  std::string to_json_text() const;
};

ScenarioConfig desk_scenario();

/// Sampled initial filter state: mean = truth + a-priori noise, diagonal
/// a-priori covariance, empty landmark set.
FilterEstimate init_from_ground_phase(
    const ScenarioConfig& config, const BodyModel& body,
    const std::vector<SpacecraftState>& truth_states,
    const std::vector<ClockState>& truth_clocks, Rng& rng);

struct RunSummary {
  int epochs = 0;
  int final_tracked_landmarks = 0;
  int database_landmarks = 0;
  double shape_rmse = 0.0;            // vs truth reference radii [m]
  double shape_rmse_fraction = 0.0;   // / avg radius
  std::string out_dir;
};

/// Execute the full pipeline and persist every log into out_dir.
RunSummary run_scenario(const ScenarioConfig& config,
                        const std::string& out_dir);

}  // namespace snac
