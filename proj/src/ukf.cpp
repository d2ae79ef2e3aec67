#include "snac/ukf.hpp"

#include <algorithm>
#include <cmath>

#include "snac/errors.hpp"

namespace snac {

namespace {

GravityField gravity_field_from(const FilterLayout& lay, const VecX& x,
                                double ref_radius) {
  GravityField f = GravityField::point_mass(x[lay.idx_gravity()], ref_radius,
                                            lay.gravity_degree);
  f.set_coefficient_vector(
      x.segment(lay.idx_gravity() + 1, lay.gravity_size() - 1));
  return f;
}

RotationState rotation_from(const VecX& x, double prime_meridian) {
  RotationState r;
  r.alpha = x[0];
  r.delta = x[1];
  r.omega = x[2];
  r.prime_meridian_epoch_angle = prime_meridian;
  return r;
}

SpacecraftState spacecraft_from(const FilterLayout& lay, const VecX& x, int i,
                                double aom) {
  SpacecraftState s;
  const int base = lay.idx_spacecraft(i);
  s.position = x.segment<3>(base);
  s.velocity = x.segment<3>(base + 3);
  s.srp_coeff = x[lay.idx_cr(i)];
  s.cross_section_over_mass = aom;
  return s;
}

}  // namespace

GravityField FilterEstimate::gravity_field(double ref_radius) const {
  return gravity_field_from(layout, mean, ref_radius);
}

RotationState FilterEstimate::rotation_state(double prime_meridian) const {
  return rotation_from(mean, prime_meridian);
}

SpacecraftState FilterEstimate::spacecraft_state(int i, double aom) const {
  return spacecraft_from(layout, mean, i, aom);
}

int FilterEstimate::landmark_slot(int id) const {
  for (size_t j = 0; j < landmark_ids.size(); ++j)
    if (landmark_ids[j] == id) return static_cast<int>(j);
  return -1;
}

DynamicsModel UkfModel::dynamics_for(const FilterEstimate& est) const {
  DynamicsModel dyn;
  dyn.gravity = est.gravity_field(ref_radius);
  dyn.rotation = est.rotation_state(prime_meridian);
  dyn.sun = sun;
  dyn.srp_enabled = srp_enabled;
  dyn.third_body_enabled = third_body_enabled;
  return dyn;
}

SigmaPoints make_sigma_points(const VecX& mean, const MatX& covariance,
                              const UkfConfig& config) {
  const int n = static_cast<int>(mean.size());
  const double lambda =
      config.alpha * config.alpha * (n + config.kappa) - n;
  const double gamma = std::sqrt(n + lambda);

  SigmaPoints sp;
  MatX cov = symmetrize(covariance);
  Eigen::LLT<MatX> chol(cov);
  if (chol.info() != Eigen::Success) {
    cov = clamp_eigenvalues(cov, 1e-12 * cov.trace());
    chol.compute(cov);
    sp.repaired = true;
    if (chol.info() != Eigen::Success)
      throw NumericalFailure("covariance not factorizable after repair");
  }
  const MatX s = chol.matrixL();

  sp.points.resize(n, 2 * n + 1);
  sp.points.col(0) = mean;
  for (int i = 0; i < n; ++i) {
    sp.points.col(1 + i) = mean + gamma * s.col(i);
    sp.points.col(1 + n + i) = mean - gamma * s.col(i);
  }
  sp.wm = VecX::Constant(2 * n + 1, 1.0 / (2.0 * (n + lambda)));
  sp.wc = sp.wm;
  sp.wm[0] = lambda / (n + lambda);
  sp.wc[0] = sp.wm[0] + (1.0 - config.alpha * config.alpha + config.beta);
  return sp;
}

MatX assemble_process_noise(const FilterLayout& layout, double dt,
                            const VecX& qtilde, const UkfModel& model) {
  MatX q = MatX::Zero(layout.size(), layout.size());
  const double dt2 = dt * dt, dt3 = dt * dt * dt;
  for (int i = 0; i < layout.n_spacecraft; ++i) {
    const int b = layout.idx_spacecraft(i);
    for (int ax = 0; ax < 3; ++ax) {
      const double qt = qtilde[3 * i + ax];
      q(b + ax, b + ax) = dt3 / 3.0 * qt;
      q(b + ax, b + 3 + ax) = dt2 / 2.0 * qt;
      q(b + 3 + ax, b + ax) = dt2 / 2.0 * qt;
      q(b + 3 + ax, b + 3 + ax) = dt * qt;
    }
  }
  if (layout.n_spacecraft < 2) return q;
  // Deputy clock biases: c^2 (Q_eta_i + Q_eta_1) on the diagonal blocks and
  // c^2 Q_eta_1 off diagonal (common mothership clock).
  const double c2 = kSpeedOfLight * kSpeedOfLight;
  const Mat2 q1m =
      clock_process_noise(model.clock_q1[0], model.clock_q2[0], dt);
  for (int i = 1; i < layout.n_spacecraft; ++i) {
    for (int j = 1; j < layout.n_spacecraft; ++j) {
      const int bi = layout.idx_clock_deputy(i);
      const int bj = layout.idx_clock_deputy(j);
      Mat2 blk = c2 * q1m;
      if (i == j)
        blk += c2 * clock_process_noise(model.clock_q1[i], model.clock_q2[i],
                                        dt);
      q.block<2, 2>(bi, bj) = blk;
    }
  }
  return q;
}

TimeUpdateResult time_update(const FilterEstimate& est, double dt,
                             const UkfModel& model, const VecX& qtilde) {
  if (!(dt > 0.0)) throw StepFailure("time_update: dt must be positive");
  const FilterLayout& lay = est.layout;
  const int n = lay.size();
  TimeUpdateResult result;

  SigmaPoints sp = make_sigma_points(est.mean, est.covariance, model.config);
  result.covariance_repaired = sp.repaired;

  // Clock transition matrix applies to every sigma point identically.
  auto apply_clock = [&](VecX& x) {
    for (int i = 1; i < lay.n_spacecraft; ++i) {
      const int b = lay.idx_clock_deputy(i);
      x[b] += dt * x[b + 1];
    }
  };

  auto build_dynamics = [&](const VecX& x) {
    DynamicsModel dyn;
    dyn.gravity = gravity_field_from(lay, x, model.ref_radius);
    dyn.rotation = rotation_from(x, model.prime_meridian);
    dyn.sun = model.sun;
    dyn.srp_enabled = model.srp_enabled;
    dyn.third_body_enabled = model.third_body_enabled;
    return dyn;
  };

  // Propagate the central sigma point: every spacecraft.
  MatX propagated = sp.points;
  std::vector<Vec6> central(lay.n_spacecraft);
  {
    VecX x = sp.points.col(0);
    const DynamicsModel dyn = build_dynamics(x);
    for (int i = 0; i < lay.n_spacecraft; ++i) {
      const SpacecraftState s0 =
          spacecraft_from(lay, x, i, model.cross_section_over_mass[i]);
      const SpacecraftState s1 =
          propagate_rk4(s0, dyn, est.epoch, dt, model.config.substeps);
      ++result.orbit_propagations;
      central[i] << s1.position, s1.velocity;
      x.segment<6>(lay.idx_spacecraft(i)) = central[i];
    }
    apply_clock(x);
    propagated.col(0) = x;
  }

  // Remaining sigma points: the Cholesky factor is lower triangular, so the
  // point from column c differs from the mean only in coordinates >= c.
  // Spacecraft i depends on coordinates up to idx_cr(i); for c beyond that
  // the central propagation is reused bit for bit.
  for (int c = 0; c < n; ++c) {
    const bool any_fresh = c < lay.head_size();
    for (int sign = 0; sign < 2; ++sign) {
      const int col = 1 + sign * n + c;
      VecX x = sp.points.col(col);
      if (any_fresh) {
        const DynamicsModel dyn = build_dynamics(x);
        for (int i = 0; i < lay.n_spacecraft; ++i) {
          if (c <= lay.idx_cr(i)) {
            const SpacecraftState s0 =
                spacecraft_from(lay, x, i, model.cross_section_over_mass[i]);
            const SpacecraftState s1 =
                propagate_rk4(s0, dyn, est.epoch, dt, model.config.substeps);
            ++result.orbit_propagations;
            x.segment<3>(lay.idx_spacecraft(i)) = s1.position;
            x.segment<3>(lay.idx_spacecraft(i) + 3) = s1.velocity;
          } else {
            x.segment<6>(lay.idx_spacecraft(i)) = central[i];
          }
        }
      } else {
        for (int i = 0; i < lay.n_spacecraft; ++i)
          x.segment<6>(lay.idx_spacecraft(i)) = central[i];
      }
      apply_clock(x);
      propagated.col(col) = x;
    }
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

AugmentResult augment(const FilterEstimate& est,
                      const std::vector<StereoEstimate>& stereo,
                      const std::vector<int>& ids, const UkfConfig& config) {
  AugmentResult out;
  out.estimate = est;
  for (size_t k = 0; k < stereo.size(); ++k) {
    const StereoEstimate& se = stereo[k];
    FilterEstimate& cur = out.estimate;
    const int n = cur.layout.size();
    // Inflate P_L only. The cross covariance must stay untouched: scaling
    // it breaks the cancellation that keeps re-observations of a
    // self-initialized landmark from feeding false absolute information
    // back into the spacecraft states. Positive semidefiniteness is
    // preserved automatically (the Schur complement only grows).
    const Mat3 p_l = config.stereo_inflation * se.covariance;
    MatX p_cross = se.cross_covariance;
    if (p_cross.cols() != n) {
      // Cross covariance was built against the pre-augmentation state; pad
      // with zeros for landmarks appended meanwhile.
      MatX padded = MatX::Zero(3, n);
      padded.leftCols(p_cross.cols()) = p_cross;
      p_cross = padded;
    }

    MatX cov(n + 3, n + 3);
    cov.topLeftCorner(n, n) = cur.covariance;
    cov.block(n, 0, 3, n) = p_cross;
    cov.block(0, n, n, 3) = p_cross.transpose();
    cov.block<3, 3>(n, n) = p_l;

    Eigen::LLT<MatX> chol(symmetrize(cov));
    if (chol.info() != Eigen::Success) {
      // Indefinite joint covariance: drop this landmark.
      out.dropped_ids.push_back(ids[k]);
      continue;
    }
    VecX mean(n + 3);
    mean << cur.mean, se.acaf_position;
    cur.mean = mean;
    cur.covariance = symmetrize(cov);
    cur.layout.n_landmarks += 1;
    cur.landmark_ids.push_back(ids[k]);
  }
  return out;
}

namespace {

/// Pixel model used inside the filter: landmark fixed in ACAF, rotation
/// from the sigma point's psi, attitude from the star tracker.
Vec2 pixel_model(const Vec3& psi, const Vec3& r_j, const Vec3& landmark_acaf,
                 const Mat3& attitude, const Mat3& calib, double t,
                 double prime_meridian) {
  RotationState rot;
  rot.alpha = psi[0];
  rot.delta = psi[1];
  rot.omega = psi[2];
  rot.prime_meridian_epoch_angle = prime_meridian;
  const Vec3 l_aci = aci_from_acaf(rot, t).matrix * landmark_acaf;
  Vec3 v = calib * (attitude * (l_aci - r_j));
  const double w = std::max(v.z(), 1e-9);
  return Vec2(v.x() / w, v.y() / w);
}

}  // namespace

MeasurementUpdateResult measurement_update(
    const FilterEstimate& est, const std::vector<RfMeasurement>& rf,
    const std::vector<PixelMeasurement>& pixels,
    const std::vector<FrameRotation>& attitudes, const Mat3& camera_calib,
    const UkfModel& model, double dt_since_last) {
  const FilterLayout& lay = est.layout;
  const int n = lay.size();
  const int nz = static_cast<int>(2 * rf.size() + 2 * pixels.size());

  MeasurementUpdateResult out;
  out.estimate = est;
  out.innovation.dt = dt_since_last;
  out.innovation.n_pixel_measurements = static_cast<int>(pixels.size());
  if (nz == 0) return out;

  // Measurement vector: [rho, rho_dot] per RF entry then [u, v] per pixel.
  VecX z(nz);
  VecX r_diag(nz);
  {
    int row = 0;
    const double r2 = model.config.range_sigma * model.config.range_sigma;
    const double d2 = model.config.doppler_sigma * model.config.doppler_sigma;
    const double p2 = model.config.pixel_sigma * model.config.pixel_sigma;
    for (const RfMeasurement& m : rf) {
      z[row] = m.pseudorange;
      r_diag[row++] = r2;
      z[row] = m.doppler;
      r_diag[row++] = d2;
    }
    for (const PixelMeasurement& m : pixels) {
      z[row] = m.pixel.u;
      r_diag[row++] = p2;
      z[row] = m.pixel.v;
      r_diag[row++] = p2;
    }
  }

  SigmaPoints sp = make_sigma_points(est.mean, est.covariance, model.config);
  const int n_sigma = 2 * n + 1;

  auto evaluate_h = [&](const VecX& x) {
    VecX h(nz);
    int row = 0;
    for (const RfMeasurement& m : rf) {
      const Vec3 ri = x.segment<3>(lay.idx_spacecraft(m.transmitter));
      const Vec3 rj = x.segment<3>(lay.idx_spacecraft(m.receiver));
      const Vec3 vi = x.segment<3>(lay.idx_spacecraft(m.transmitter) + 3);
      const Vec3 vj = x.segment<3>(lay.idx_spacecraft(m.receiver) + 3);
      double bi = 0.0, bdi = 0.0, bj = 0.0, bdj = 0.0;
      if (m.transmitter > 0) {
        bi = x[lay.idx_clock_deputy(m.transmitter)];
        bdi = x[lay.idx_clock_deputy(m.transmitter) + 1];
      }
      if (m.receiver > 0) {
        bj = x[lay.idx_clock_deputy(m.receiver)];
        bdj = x[lay.idx_clock_deputy(m.receiver) + 1];
      }
      const Vec3 rel = rj - ri;
      const double range = rel.norm();
      h[row++] = range + bj - bi;
      h[row++] = (vj - vi).dot(rel) / range + bdj - bdi;
    }
    const Vec3 psi = x.segment<3>(0);
    for (const PixelMeasurement& m : pixels) {
      const int slot = est.landmark_slot(m.landmark_id);
      if (slot < 0) throw UnknownId("pixel measurement for unknown landmark");
      const Vec3 lm = x.segment<3>(lay.idx_landmark(slot));
      const Vec3 rj = x.segment<3>(lay.idx_spacecraft(m.spacecraft));
      const Vec2 uv =
          pixel_model(psi, rj, lm, attitudes[m.spacecraft].matrix,
                      camera_calib, est.epoch, model.prime_meridian);
      h[row++] = uv.x();
      h[row++] = uv.y();
    }
    return h;
  };

  MatX zsig(nz, n_sigma);
  for (int k = 0; k < n_sigma; ++k) zsig.col(k) = evaluate_h(sp.points.col(k));

  VecX zhat = VecX::Zero(nz);
  for (int k = 0; k < n_sigma; ++k) zhat += sp.wm[k] * zsig.col(k);
  MatX p_hh = MatX::Zero(nz, nz);
  MatX p_xz = MatX::Zero(n, nz);
  for (int k = 0; k < n_sigma; ++k) {
    const VecX dz = zsig.col(k) - zhat;
    p_hh += sp.wc[k] * dz * dz.transpose();
    p_xz += sp.wc[k] * (sp.points.col(k) - est.mean) * dz.transpose();
  }

  VecX innovation = z - zhat;

  // Optional per-measurement gate.
  std::vector<int> keep(nz);
  for (int i = 0; i < nz; ++i) keep[i] = i;
  if (model.config.innovation_gate_enabled) {
    std::vector<int> kept;
    for (int i = 0; i < nz; ++i) {
      const double s = std::sqrt(model.config.underweight_factor * p_hh(i, i) +
                                 r_diag[i]);
      if (std::abs(innovation[i]) <=
          model.config.innovation_gate_sigma * s)
        kept.push_back(i);
      else
        ++out.gated_measurements;
    }
    keep = kept;
  }
  const int nk = static_cast<int>(keep.size());
  if (nk == 0) {
    out.innovation.innovation = innovation;
    out.innovation.p_hh = p_hh;
    out.innovation.r_diag = r_diag;
    return out;
  }

  MatX p_hh_k(nk, nk);
  MatX p_xz_k(n, nk);
  VecX innov_k(nk), r_k(nk);
  for (int a = 0; a < nk; ++a) {
    innov_k[a] = innovation[keep[a]];
    r_k[a] = r_diag[keep[a]];
    p_xz_k.col(a) = p_xz.col(keep[a]);
    for (int b = 0; b < nk; ++b) p_hh_k(a, b) = p_hh(keep[a], keep[b]);
  }

  MatX p_zz = model.config.underweight_factor * p_hh_k;
  p_zz += MatX(r_k.asDiagonal());
  Eigen::LDLT<MatX> pzz_fac(symmetrize(p_zz));
  if (pzz_fac.info() != Eigen::Success)
    throw NumericalFailure("innovation covariance factorization failed");

  const MatX gain = pzz_fac.solve(p_xz_k.transpose()).transpose();
  out.estimate.mean = est.mean + gain * innov_k;
  out.estimate.covariance =
      symmetrize(est.covariance - gain * p_zz * gain.transpose());

  // Statistical linearization H = P_xz^T (P^-)^-1 for the ASNC mismatch
  // sensitivities (full measurement set, pre-gating).
  Eigen::LDLT<MatX> p_fac(symmetrize(est.covariance));
  out.innovation.h_effective = p_fac.solve(p_xz).transpose();
  out.innovation.innovation = innovation;
  out.innovation.p_hh = p_hh;
  out.innovation.r_diag = r_diag;
  return out;
}

std::vector<RetiredLandmarkState> retire_from_state(
    FilterEstimate& est, const std::vector<int>& ids) {
  std::vector<RetiredLandmarkState> out;
  if (ids.empty()) return out;
  for (int id : ids)
    if (est.landmark_slot(id) < 0)
      throw UnknownId("retire_from_state: id not in filter state");

  const FilterLayout& lay = est.layout;
  std::vector<int> keep_rows;
  keep_rows.reserve(lay.size());
  for (int i = 0; i < lay.base_size(); ++i) keep_rows.push_back(i);
  std::vector<int> kept_ids;
  for (int j = 0; j < lay.n_landmarks; ++j) {
    const int id = est.landmark_ids[j];
    if (std::find(ids.begin(), ids.end(), id) != ids.end()) {
      RetiredLandmarkState r;
      r.id = id;
      r.mean = est.mean.segment<3>(lay.idx_landmark(j));
      r.covariance =
          est.covariance.block<3, 3>(lay.idx_landmark(j), lay.idx_landmark(j));
      out.push_back(r);
    } else {
      kept_ids.push_back(id);
      for (int k = 0; k < 3; ++k) keep_rows.push_back(lay.idx_landmark(j) + k);
    }
  }

  const int m = static_cast<int>(keep_rows.size());
  VecX mean(m);
  MatX cov(m, m);
  for (int a = 0; a < m; ++a) {
    mean[a] = est.mean[keep_rows[a]];
    for (int b = 0; b < m; ++b)
      cov(a, b) = est.covariance(keep_rows[a], keep_rows[b]);
  }
  est.mean = mean;
  est.covariance = cov;
  est.landmark_ids = kept_ids;
  est.layout.n_landmarks = static_cast<int>(kept_ids.size());
  return out;
}

AsncState AsncState::initial(const FilterLayout& layout, double qtilde0) {
  AsncState s;
  s.qtilde = VecX::Constant(3 * layout.n_spacecraft, qtilde0);
  return s;
}

double asnc_upper_bound(double mu, double j2, double ref_radius, double r,
                        double dt) {
  const double a_max =
      3.0 * mu * j2 * ref_radius * ref_radius / (2.0 * std::pow(r, 4));
  return a_max * a_max * dt;
}

void asnc_update(AsncState& state, const InnovationRecord& record,
                 const FilterEstimate& est, const UkfModel& model,
                 const AsncConfig& config, const VecX& upper_bounds) {
  if (!config.enabled) return;
  // Epochs with no pixel measurements are excluded: the spacecraft process
  // noise is poorly observable from RF alone.
  if (record.n_pixel_measurements == 0 || record.innovation.size() == 0)
    return;

  const FilterLayout& lay = est.layout;
  const int nq = 3 * lay.n_spacecraft;
  const int nz = static_cast<int>(record.innovation.size());
  const double dt = record.dt;
  const double dt2 = dt * dt, dt3 = dt * dt * dt;

  AsncState::Sample sample;
  sample.mismatch.resize(nz);
  sample.sensitivities = MatX::Zero(nz, nq);

  // diag(H Q_used H^T): add back the process noise already inside P_hh so
  // the mismatch estimates diag(H Q_true H^T).
  const MatX& h = record.h_effective;
  for (int r = 0; r < nz; ++r) {
    double used = 0.0;
    for (int i = 0; i < lay.n_spacecraft; ++i) {
      const int b = lay.idx_spacecraft(i);
      for (int ax = 0; ax < 3; ++ax) {
        const double hp = h(r, b + ax);
        const double hv = h(r, b + 3 + ax);
        const double sens = dt3 / 3.0 * hp * hp + dt2 * hp * hv + dt * hv * hv;
        sample.sensitivities(r, 3 * i + ax) = sens;
        used += sens * state.qtilde[3 * i + ax];
      }
    }
    sample.mismatch[r] = record.innovation[r] * record.innovation[r] -
                         record.p_hh(r, r) - record.r_diag[r] + used;
  }

  state.window.push_back(std::move(sample));
  while (static_cast<int>(state.window.size()) > config.window)
    state.window.pop_front();
  if (static_cast<int>(state.window.size()) < 5) return;  // keep prior

  MatX ata = MatX::Zero(nq, nq);
  VecX atb = VecX::Zero(nq);
  for (const auto& s : state.window) {
    ata += s.sensitivities.transpose() * s.sensitivities;
    atb += s.sensitivities.transpose() * s.mismatch;
  }
  // Tiny ridge keeps the solve well posed when a spacecraft axis is weakly
  // observed in the current window.
  ata += 1e-12 * ata.trace() / nq * MatX::Identity(nq, nq);
  VecX q = ata.ldlt().solve(atb);
  for (int l = 0; l < nq; ++l)
    state.qtilde[l] = std::clamp(q[l], 0.0, upper_bounds[l]);
}

ProjectedLandmark project_landmark_belief(const FilterEstimate& est, int slot,
                                          int spacecraft,
                                          const FrameRotation& attitude,
                                          const Mat3& camera_calib,
                                          const UkfModel& model) {
  ProjectedLandmark out;
  const FilterLayout& lay = est.layout;
  const Vec3 lm_acaf = est.landmark(slot);
  const RotationState rot = est.rotation_state(model.prime_meridian);
  const Vec3 lm_aci = aci_from_acaf(rot, est.epoch).matrix * lm_acaf;

  CameraModel cam;
  cam.calibration = camera_calib;
  cam.width = static_cast<int>(2 * camera_calib(0, 2));
  cam.height = static_cast<int>(2 * camera_calib(1, 2));
  cam.position = est.mean.segment<3>(lay.idx_spacecraft(spacecraft));
  cam.orientation = attitude;

  const auto pix = try_project(cam, lm_aci);
  if (!pix) return out;
  out.pixel = *pix;

  // Partials with respect to the observing spacecraft position and the
  // asteroid rotation parameters.
  const PixelJacobian pj = pixel_jacobian(cam, lm_aci);
  const Mat3 dpsi = world_point_rotation_jacobian(rot, est.epoch, lm_acaf);
  Eigen::Matrix<double, 2, 6> jac;
  jac.leftCols<3>() = pj.d_position;
  jac.rightCols<3>() = pj.d_point * dpsi;

  Mat6 p_sub;
  const int rb = lay.idx_spacecraft(spacecraft);
  p_sub.topLeftCorner<3, 3>() = est.covariance.block<3, 3>(rb, rb);
  p_sub.topRightCorner<3, 3>() = est.covariance.block<3, 3>(rb, 0);
  p_sub.bottomLeftCorner<3, 3>() = est.covariance.block<3, 3>(0, rb);
  p_sub.bottomRightCorner<3, 3>() = est.covariance.block<3, 3>(0, 0);

  out.covariance = jac * p_sub * jac.transpose();
  out.valid = true;
  return out;
}

}  // namespace snac
