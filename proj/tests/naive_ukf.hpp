#pragma once

// Test-only oracle: the textbook UKF time update that propagates every
// sigma point for every spacecraft, with the same sigma-point set, weights,
// and process noise as the library implementation. The structure-exploiting
// update must reproduce it exactly.

#include "snac/ukf.hpp"

namespace snac_test {

inline snac::TimeUpdateResult naive_time_update(
    const snac::FilterEstimate& est, double dt, const snac::UkfModel& model,
    const snac::VecX& qtilde) {
  using namespace snac;
  const FilterLayout& lay = est.layout;
  const int n = lay.size();
  TimeUpdateResult result;

  SigmaPoints sp = make_sigma_points(est.mean, est.covariance, model.config);

  MatX propagated = sp.points;
  for (int col = 0; col < 2 * n + 1; ++col) {
    VecX x = sp.points.col(col);
    FilterEstimate tmp = est;
    tmp.mean = x;
    const DynamicsModel dyn = model.dynamics_for(tmp);
    for (int i = 0; i < lay.n_spacecraft; ++i) {
      const SpacecraftState s0 =
          tmp.spacecraft_state(i, model.cross_section_over_mass[i]);
      const SpacecraftState s1 =
          propagate_rk4(s0, dyn, est.epoch, dt, model.config.substeps);
      ++result.orbit_propagations;
      x.segment<3>(lay.idx_spacecraft(i)) = s1.position;
      x.segment<3>(lay.idx_spacecraft(i) + 3) = s1.velocity;
    }
    for (int i = 1; i < lay.n_spacecraft; ++i) {
      const int b = lay.idx_clock_deputy(i);
      x[b] += dt * x[b + 1];
    }
    propagated.col(col) = x;
  }

  VecX mean = VecX::Zero(n);
  for (int k = 0; k < 2 * n + 1; ++k) mean += sp.wm[k] * propagated.col(k);
  MatX cov = MatX::Zero(n, n);
  for (int k = 0; k < 2 * n + 1; ++k) {
    const VecX d = propagated.col(k) - mean;
    cov += sp.wc[k] * d * d.transpose();
  }
  cov += assemble_process_noise(lay, dt, qtilde, model);

  result.estimate = est;
  result.estimate.epoch = est.epoch + dt;
  result.estimate.mean = mean;
  result.estimate.covariance = symmetrize(cov);
  return result;
}

}  // namespace snac_test
