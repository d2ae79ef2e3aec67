#pragma once

#include <map>
#include <string>
#include <vector>

namespace snac {

struct ParameterStats {
  double rmse = 0.0;
  double mean_sigma = 0.0;  // sqrt of the mean filter variance
};

/// Run metrics, computed only from the persisted CSV logs of a run
/// directory so they can be reproduced post hoc.
struct RunReport {
  int epochs = 0;
  int n_spacecraft = 0;
  double final_orbit_start = 0.0;

  // Estimation performance over the final orbit, by parameter group.
  std::map<std::string, ParameterStats> parameters;

  // Gravity spectrum (index 0 <-> degree 2).
  std::vector<double> gravity_truth_rms;
  std::vector<double> gravity_error_rms;
  std::vector<double> gravity_sigma_rms;

  // Filter consistency.
  double nees_mean = 0.0;
  double nees_lower = 0.0;
  double nees_upper = 0.0;
  bool nees_within_bounds = false;

  // Correlation quality (whole run).
  double sc2sc_true_positive_rate = 0.0;
  double f2sc_true_positive_rate = 0.0;
  long sc2sc_pairs = 0;
  long f2sc_assignments = 0;

  // Stereovision errors in the observer CF frame (whole run).
  double stereo_mean[3] = {0, 0, 0};
  double stereo_sigma[3] = {0, 0, 0};
  int stereo_count = 0;

  // Shape reconstruction.
  double shape_rmse = 0.0;
  double shape_rmse_fraction = 0.0;

  int database_landmarks = 0;

  std::string to_json_text() const;
};

/// Build the report from a run directory (reads config.json and the logs).
RunReport compute_report(const std::string& run_dir);

/// Write report.json into the run directory and return the report.
RunReport write_report(const std::string& run_dir);

/// Plot-ready CSVs under <run_dir>/plots: estimation error against time
/// with 3-sigma envelopes, per-degree gravity spectrum comparison, and the
/// shape-fit RMSE against degree for the three regularization choices.
void emit_plots(const std::string& run_dir);

}  // namespace snac
