#include "snac/dynamics.hpp"

#include <algorithm>
#include <cmath>

#include "snac/errors.hpp"
#include "snac/sphharm.hpp"

namespace snac {

namespace {

double wrap_pi(double a) {
  a = std::fmod(a + M_PI, 2.0 * M_PI);
  if (a < 0.0) a += 2.0 * M_PI;
  return a - M_PI;
}

}  // namespace

GravityField GravityField::point_mass(double mu, double ref_radius,
                                      int degree) {
  GravityField f;
  f.mu = mu;
  f.ref_radius = ref_radius;
  f.degree = degree;
  f.cbar = VecX::Zero(c_count(degree));
  f.sbar = VecX::Zero(s_count(degree));
  return f;
}

VecX GravityField::coefficient_vector() const {
  VecX v(cbar.size() + sbar.size());
  v << cbar, sbar;
  return v;
}

void GravityField::set_coefficient_vector(const VecX& v) {
  cbar = v.head(c_count(degree));
  sbar = v.tail(s_count(degree));
}

double GravityField::degree_rms(int n) const {
  double sum = 0.0;
  for (int m = 0; m <= n; ++m) sum += c(n, m) * c(n, m);
  for (int m = 1; m <= n; ++m) sum += s(n, m) * s(n, m);
  return std::sqrt(sum / (2.0 * n + 1.0));
}

Vec3 RotationState::spin_axis_aci() const {
  return Vec3(std::cos(delta) * std::cos(alpha),
              std::cos(delta) * std::sin(alpha), std::sin(delta));
}

FrameRotation aci_from_acaf(const RotationState& rot, double t) {
  const double theta = rot.prime_meridian_epoch_angle + rot.omega * t;
  const Mat3 m = rot_z(rot.alpha + M_PI / 2.0) *
                 rot_x(M_PI / 2.0 - rot.delta) * rot_z(theta);
  return FrameRotation(m, Frame::ACAF, Frame::ACI);
}

FrameRotation aci_from_acic(const RotationState& rot) {
  const Mat3 m = rot_z(rot.alpha + M_PI / 2.0) *
                 rot_x(M_PI / 2.0 - rot.delta) *
                 rot_z(rot.prime_meridian_epoch_angle);
  return FrameRotation(m, Frame::ACIC, Frame::ACI);
}

Vec3 SunEphemeris::position_aci(double t) const {
  const double n = std::sqrt(mu_sun / (distance * distance * distance));
  const double ang = phase0 + n * t;
  return distance * Vec3(std::cos(ang), std::sin(ang), 0.0);
}

namespace {

/// Cunningham V/W recursion workspace for one evaluation point (ACAF).
/// Indices run n = 0..nmax, m = 0..n.
struct VwTable {
  int nmax;
  std::vector<double> v, w;
  int idx(int n, int m) const { return n * (n + 1) / 2 + m; }

  VwTable(int nmax_in, const Vec3& p, double ref_radius) : nmax(nmax_in) {
    const int sz = (nmax + 1) * (nmax + 2) / 2;
    v.assign(sz, 0.0);
    w.assign(sz, 0.0);
    const double r2 = p.squaredNorm();
    const double xf = p.x() * ref_radius / r2;
    const double yf = p.y() * ref_radius / r2;
    const double zf = p.z() * ref_radius / r2;
    const double rf = ref_radius * ref_radius / r2;
    v[idx(0, 0)] = ref_radius / std::sqrt(r2);
    w[idx(0, 0)] = 0.0;
    for (int m = 0; m <= nmax; ++m) {
      if (m > 0) {
        v[idx(m, m)] = (2 * m - 1) *
                       (xf * v[idx(m - 1, m - 1)] - yf * w[idx(m - 1, m - 1)]);
        w[idx(m, m)] = (2 * m - 1) *
                       (xf * w[idx(m - 1, m - 1)] + yf * v[idx(m - 1, m - 1)]);
      }
      for (int n = m + 1; n <= nmax; ++n) {
        double vn = (2.0 * n - 1.0) / (n - m) * zf * v[idx(n - 1, m)];
        double wn = (2.0 * n - 1.0) / (n - m) * zf * w[idx(n - 1, m)];
        if (n - 2 >= m) {
          vn -= (n + m - 1.0) / (n - m) * rf * v[idx(n - 2, m)];
          wn -= (n + m - 1.0) / (n - m) * rf * w[idx(n - 2, m)];
        }
        v[idx(n, m)] = vn;
        w[idx(n, m)] = wn;
      }
    }
  }
};

/// Unnormalized coefficient from the stored normalized one.
double unnorm_c(const GravityField& f, int n, int m) {
  if (n == 0) return m == 0 ? 1.0 : 0.0;
  if (n == 1) return 0.0;
  return f.c(n, m) / sh_normalization(n, m);
}
double unnorm_s(const GravityField& f, int n, int m) {
  if (n <= 1) return 0.0;
  return f.s(n, m) / sh_normalization(n, m);
}

}  // namespace

double gravity_potential_acaf(const GravityField& field,
                              const Vec3& pos_acaf) {
  if (!(pos_acaf.norm() > 0.0)) throw OriginSingularity();
  VwTable t(field.degree, pos_acaf, field.ref_radius);
  double u = 0.0;
  for (int n = 0; n <= field.degree; ++n) {
    if (n == 1) continue;
    for (int m = 0; m <= n; ++m) {
      u += unnorm_c(field, n, m) * t.v[t.idx(n, m)];
      if (m > 0) u += unnorm_s(field, n, m) * t.w[t.idx(n, m)];
    }
  }
  return field.mu / field.ref_radius * u;
}

namespace {

Vec3 gravity_accel_acaf(const GravityField& field, const Vec3& pos_acaf) {
  if (!(pos_acaf.norm() > 0.0)) throw OriginSingularity();
  VwTable t(field.degree + 1, pos_acaf, field.ref_radius);
  const double scale = field.mu / (field.ref_radius * field.ref_radius);
  double ax = 0.0, ay = 0.0, az = 0.0;
  for (int n = 0; n <= field.degree; ++n) {
    if (n == 1) continue;
    for (int m = 0; m <= n; ++m) {
      const double cnm = unnorm_c(field, n, m);
      const double snm = (m > 0) ? unnorm_s(field, n, m) : 0.0;
      if (cnm == 0.0 && snm == 0.0) continue;
      if (m == 0) {
        ax += -cnm * t.v[t.idx(n + 1, 1)];
        ay += -cnm * t.w[t.idx(n + 1, 1)];
      } else {
        const double fac = (n - m + 1.0) * (n - m + 2.0);
        ax += 0.5 * (-cnm * t.v[t.idx(n + 1, m + 1)] -
                     snm * t.w[t.idx(n + 1, m + 1)] +
                     fac * (cnm * t.v[t.idx(n + 1, m - 1)] +
                            snm * t.w[t.idx(n + 1, m - 1)]));
        ay += 0.5 * (-cnm * t.w[t.idx(n + 1, m + 1)] +
                     snm * t.v[t.idx(n + 1, m + 1)] +
                     fac * (-cnm * t.w[t.idx(n + 1, m - 1)] +
                            snm * t.v[t.idx(n + 1, m - 1)]));
      }
      az += (n - m + 1.0) *
            (-cnm * t.v[t.idx(n + 1, m)] - snm * t.w[t.idx(n + 1, m)]);
    }
  }
  return scale * Vec3(ax, ay, az);
}

}  // namespace

Vec3 gravity_accel(const GravityField& field, const RotationState& rotation,
                   const Vec3& pos_aci, double t) {
  const FrameRotation rot = aci_from_acaf(rotation, t);
  const Vec3 p_acaf = rot.matrix.transpose() * pos_aci;
  return rot.matrix * gravity_accel_acaf(field, p_acaf);
}

Vec3 total_accel(const DynamicsModel& model, const SpacecraftState& state,
                 double t) {
  Vec3 a = gravity_accel(model.gravity, model.rotation, state.position, t);
  if (model.third_body_enabled || model.srp_enabled) {
    const Vec3 sun = model.sun.position_aci(t);
    if (model.third_body_enabled) {
      const Vec3 d = sun - state.position;
      a += model.sun.mu_sun *
           (d / std::pow(d.norm(), 3) - sun / std::pow(sun.norm(), 3));
    }
    if (model.srp_enabled) {
      const Vec3 from_sun = state.position - sun;
      const double dist = from_sun.norm();
      const double pressure =
          kSolarPressure1Au * std::pow(kAstronomicalUnit / dist, 2);
      a += state.srp_coeff * pressure * state.cross_section_over_mass *
           from_sun / dist;
    }
  }
  return a;
}

namespace {

using State6 = Eigen::Matrix<double, 6, 1>;

State6 pack(const SpacecraftState& s) {
  State6 y;
  y << s.position, s.velocity;
  return y;
}

SpacecraftState unpack(const State6& y, const SpacecraftState& tpl) {
  SpacecraftState s = tpl;
  s.position = y.head<3>();
  s.velocity = y.tail<3>();
  return s;
}

State6 derivative(const DynamicsModel& model, const SpacecraftState& tpl,
                  const State6& y, double t) {
  State6 dy;
  dy.head<3>() = y.tail<3>();
  dy.tail<3>() = total_accel(model, unpack(y, tpl), t);
  return dy;
}

}  // namespace

SpacecraftState propagate_rk4(const SpacecraftState& state,
                              const DynamicsModel& model, double t0, double dt,
                              int substeps) {
  if (!(dt > 0.0)) throw StepFailure("propagate: dt must be positive");
  substeps = std::max(1, substeps);
  const double h = dt / substeps;
  State6 y = pack(state);
  double t = t0;
  for (int k = 0; k < substeps; ++k) {
    const State6 k1 = derivative(model, state, y, t);
    const State6 k2 = derivative(model, state, y + 0.5 * h * k1, t + 0.5 * h);
    const State6 k3 = derivative(model, state, y + 0.5 * h * k2, t + 0.5 * h);
    const State6 k4 = derivative(model, state, y + h * k3, t + h);
    y += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    t += h;
  }
  return unpack(y, state);
}

SpacecraftState propagate_adaptive(const SpacecraftState& state,
                                   const DynamicsModel& model, double t0,
                                   double dt, double rel_tol) {
  if (!(dt > 0.0)) throw StepFailure("propagate: dt must be positive");
  // Dormand-Prince 5(4) coefficients.
  static const double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
  static const double a21 = 1.0 / 5;
  static const double a31 = 3.0 / 40, a32 = 9.0 / 40;
  static const double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
  static const double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187,
                      a53 = 64448.0 / 6561, a54 = -212.0 / 729;
  static const double a61 = 9017.0 / 3168, a62 = -355.0 / 33,
                      a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                      a65 = -5103.0 / 18656;
  static const double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192,
                      b5 = -2187.0 / 6784, b6 = 11.0 / 84;
  static const double e1 = 35.0 / 384 - 5179.0 / 57600,
                      e3 = 500.0 / 1113 - 7571.0 / 16695,
                      e4 = 125.0 / 192 - 393.0 / 640,
                      e5 = -2187.0 / 6784 + 92097.0 / 339200,
                      e6 = 11.0 / 84 - 187.0 / 2100, e7 = -1.0 / 40;

  State6 y = pack(state);
  double t = t0;
  const double t_end = t0 + dt;
  double h = dt / 16.0;
  State6 k1 = derivative(model, state, y, t);
  int rejects_in_a_row = 0;

  while (t < t_end) {
    h = std::min(h, t_end - t);
    const State6 k2 =
        derivative(model, state, y + h * (a21 * k1), t + c2 * h);
    const State6 k3 =
        derivative(model, state, y + h * (a31 * k1 + a32 * k2), t + c3 * h);
    const State6 k4 = derivative(
        model, state, y + h * (a41 * k1 + a42 * k2 + a43 * k3), t + c4 * h);
    const State6 k5 = derivative(
        model, state, y + h * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4),
        t + c5 * h);
    const State6 k6 = derivative(
        model, state,
        y + h * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5), t + h);
    const State6 y5 =
        y + h * (b1 * k1 + b3 * k3 + b4 * k4 + b5 * k5 + b6 * k6);
    const State6 k7 = derivative(model, state, y5, t + h);
    const State6 err_vec =
        h * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);

    double err = 0.0;
    for (int i = 0; i < 6; ++i) {
      const double scale =
          rel_tol * std::max(std::abs(y[i]), std::abs(y5[i])) + rel_tol;
      err = std::max(err, std::abs(err_vec[i]) / scale);
    }
    if (err <= 1.0) {
      t += h;
      y = y5;
      k1 = k7;  // FSAL
      rejects_in_a_row = 0;
      h *= std::min(4.0, 0.9 * std::pow(std::max(err, 1e-10), -0.2));
    } else {
      ++rejects_in_a_row;
      if (rejects_in_a_row > 60 || h < 1e-12 * dt)
        throw StepFailure("adaptive integrator cannot meet tolerance");
      h *= std::max(0.1, 0.9 * std::pow(err, -0.2));
    }
  }
  return unpack(y, state);
}

Mat2 clock_process_noise(double q1, double q2, double dt) {
  Mat2 q;
  q << q1 * dt + q2 * dt * dt * dt / 3.0, q2 * dt * dt / 2.0,
      q2 * dt * dt / 2.0, q2 * dt;
  return q;
}

ClockState clock_transition(const ClockState& clock, double dt, Rng& rng) {
  ClockState out = clock;
  out.offset = clock.offset + dt * clock.drift;
  if (dt <= 0.0) return out;
  const Mat2 q = clock_process_noise(clock.q1, clock.q2, dt);
  // Manual 2x2 Cholesky with zero-variance guards.
  const double l11 = std::sqrt(std::max(q(0, 0), 0.0));
  const double l21 = l11 > 0.0 ? q(1, 0) / l11 : 0.0;
  const double l22 = std::sqrt(std::max(q(1, 1) - l21 * l21, 0.0));
  const double z1 = rng.normal();
  const double z2 = rng.normal();
  out.offset += l11 * z1;
  out.drift += l21 * z1 + l22 * z2;
  return out;
}

std::pair<double, double> allan_variance_fit(
    const std::vector<std::pair<double, double>>& avar_samples) {
  if (avar_samples.size() < 2)
    throw DegenerateFit("need at least two Allan-variance samples");
  double tau0 = avar_samples.front().first;
  bool distinct = false;
  for (const auto& [tau, av] : avar_samples)
    if (tau != tau0) distinct = true;
  if (!distinct) throw DegenerateFit("all averaging intervals equal");

  // WLS with relative weighting; basis [1/tau, tau/3].
  auto solve = [&](bool fit_q1, bool fit_q2) -> std::pair<double, double> {
    Mat2 ata = Mat2::Zero();
    Vec2 atb = Vec2::Zero();
    for (const auto& [tau, av] : avar_samples) {
      const double w = (av > 0.0) ? 1.0 / (av * av) : 1.0;
      const Vec2 row(fit_q1 ? 1.0 / tau : 0.0, fit_q2 ? tau / 3.0 : 0.0);
      ata += w * row * row.transpose();
      atb += w * row * av;
    }
    if (!fit_q1) ata(0, 0) = 1.0;
    if (!fit_q2) ata(1, 1) = 1.0;
    const Vec2 sol = ata.ldlt().solve(atb);
    return {fit_q1 ? sol[0] : 0.0, fit_q2 ? sol[1] : 0.0};
  };

  auto [q1, q2] = solve(true, true);
  if (q1 < 0.0 && q2 < 0.0) return {0.0, 0.0};
  if (q1 < 0.0) {
    auto [unused, q2b] = solve(false, true);
    (void)unused;
    return {0.0, std::max(q2b, 0.0)};
  }
  if (q2 < 0.0) {
    auto [q1b, unused] = solve(true, false);
    (void)unused;
    return {std::max(q1b, 0.0), 0.0};
  }
  return {q1, q2};
}

VecX RelativeOrbitalElements::vector() const {
  VecX v(6);
  v << da, dlambda, dex, dey, dix, diy;
  return v;
}

double solve_kepler(double mean_anomaly, double e) {
  double E = (e < 0.8) ? mean_anomaly : M_PI;
  for (int it = 0; it < 60; ++it) {
    const double f = E - e * std::sin(E) - mean_anomaly;
    const double fp = 1.0 - e * std::cos(E);
    const double step = f / fp;
    E -= step;
    if (std::abs(step) < 1e-14) break;
  }
  return E;
}

double true_anomaly_from_eccentric(double E, double e) {
  const double beta = e / (1.0 + std::sqrt(1.0 - e * e));
  return E + 2.0 * std::atan2(beta * std::sin(E), 1.0 - beta * std::cos(E));
}

SpacecraftState oe_to_cartesian(const OrbitalElements& oe, double mu) {
  const double E = solve_kepler(oe.mean_anomaly, oe.e);
  const double f = true_anomaly_from_eccentric(E, oe.e);
  const double p = oe.a * (1.0 - oe.e * oe.e);
  const double r = p / (1.0 + oe.e * std::cos(f));
  const Vec3 r_pf(r * std::cos(f), r * std::sin(f), 0.0);
  const double vscale = std::sqrt(mu / p);
  const Vec3 v_pf(-vscale * std::sin(f), vscale * (oe.e + std::cos(f)), 0.0);
  const Mat3 rot = rot_z(oe.raan) * rot_x(oe.i) * rot_z(oe.argp);
  SpacecraftState s;
  s.position = rot * r_pf;
  s.velocity = rot * v_pf;
  return s;
}

OrbitalElements cartesian_to_oe(const SpacecraftState& state, double mu) {
  const Vec3& r = state.position;
  const Vec3& v = state.velocity;
  const double rn = r.norm();
  const Vec3 h = r.cross(v);
  const Vec3 n(-h.y(), h.x(), 0.0);
  const Vec3 evec = (v.cross(h)) / mu - r / rn;
  const double e = evec.norm();
  const double energy = v.squaredNorm() / 2.0 - mu / rn;
  OrbitalElements oe;
  oe.a = -mu / (2.0 * energy);
  oe.e = e;
  oe.i = std::acos(std::clamp(h.z() / h.norm(), -1.0, 1.0));
  const double nn = n.norm();
  oe.raan = (nn > 1e-12) ? std::atan2(n.y(), n.x()) : 0.0;
  Vec3 node = (nn > 1e-12) ? Vec3(n / nn) : Vec3(1, 0, 0);
  if (e > 1e-12) {
    double cosw = node.dot(evec) / e;
    oe.argp = std::acos(std::clamp(cosw, -1.0, 1.0));
    if (evec.z() < 0.0) oe.argp = 2.0 * M_PI - oe.argp;
    double cosf = evec.dot(r) / (e * rn);
    double f = std::acos(std::clamp(cosf, -1.0, 1.0));
    if (r.dot(v) < 0.0) f = 2.0 * M_PI - f;
    const double E =
        2.0 * std::atan2(std::sqrt(1.0 - e) * std::sin(f / 2.0),
                         std::sqrt(1.0 + e) * std::cos(f / 2.0));
    oe.mean_anomaly = wrap_pi(E - e * std::sin(E));
  } else {
    // Circular: argument of latitude takes the role of argp + f.
    oe.argp = 0.0;
    double cosu = node.dot(r) / rn;
    double u = std::acos(std::clamp(cosu, -1.0, 1.0));
    if (r.z() < 0.0) u = 2.0 * M_PI - u;
    oe.mean_anomaly = wrap_pi(u);
  }
  if (oe.raan < 0.0) oe.raan += 2.0 * M_PI;
  return oe;
}

RelativeOrbitalElements oe_to_roe(const OrbitalElements& chief,
                                  const OrbitalElements& deputy) {
  RelativeOrbitalElements roe;
  const double uc = chief.mean_anomaly + chief.argp;
  const double ud = deputy.mean_anomaly + deputy.argp;
  roe.da = (deputy.a - chief.a) / chief.a;
  roe.dlambda =
      wrap_pi(ud - uc) + wrap_pi(deputy.raan - chief.raan) * std::cos(chief.i);
  roe.dex = deputy.e * std::cos(deputy.argp) - chief.e * std::cos(chief.argp);
  roe.dey = deputy.e * std::sin(deputy.argp) - chief.e * std::sin(chief.argp);
  roe.dix = deputy.i - chief.i;
  roe.diy = wrap_pi(deputy.raan - chief.raan) * std::sin(chief.i);
  return roe;
}

OrbitalElements roe_to_oe(const OrbitalElements& chief,
                          const RelativeOrbitalElements& roe) {
  OrbitalElements d = chief;
  d.a = chief.a * (1.0 + roe.da);
  d.i = chief.i + roe.dix;
  d.raan = chief.raan + roe.diy / std::sin(chief.i);
  const double ex = chief.e * std::cos(chief.argp) + roe.dex;
  const double ey = chief.e * std::sin(chief.argp) + roe.dey;
  d.e = std::hypot(ex, ey);
  d.argp = (d.e > 1e-15) ? std::atan2(ey, ex) : chief.argp;
  const double uc = chief.mean_anomaly + chief.argp;
  const double ud =
      uc + roe.dlambda - (d.raan - chief.raan) * std::cos(chief.i);
  d.mean_anomaly = wrap_pi(ud - d.argp);
  return d;
}

// First-order Brouwer-Lyddane J2 mapping (short- plus long-period terms).
// The helper applies the correction with gamma2 > 0 for mean->osculating;
// the inverse is recovered by fixed-point iteration in osculating_to_mean.
OrbitalElements mean_to_osculating(const OrbitalElements& mean, double j2,
                                   double mu, double ref_radius) {
  (void)mu;
  if (j2 == 0.0) return mean;
  const double a = mean.a, e = mean.e, inc = mean.i;
  const double raan = mean.raan, argp = mean.argp, M = mean.mean_anomaly;

  const double gamma2 = 0.5 * j2 * std::pow(ref_radius / a, 2);
  const double eta = std::sqrt(1.0 - e * e);
  const double gamma2p = gamma2 / std::pow(eta, 4);

  const double E = solve_kepler(M, e);
  const double f = true_anomaly_from_eccentric(E, e);
  const double a_r = (1.0 + e * std::cos(f)) / (eta * eta);

  const double theta = std::cos(inc);
  const double theta2 = theta * theta;
  const double theta4 = theta2 * theta2;
  const double theta6 = theta4 * theta2;
  const double crit = 1.0 - 5.0 * theta2;

  const double cf = std::cos(f), sf = std::sin(f);
  const double c2wf = std::cos(2.0 * argp + f);
  const double s2wf = std::sin(2.0 * argp + f);
  const double c2w2f = std::cos(2.0 * (argp + f));
  const double s2w2f = std::sin(2.0 * (argp + f));
  const double c2w3f = std::cos(2.0 * argp + 3.0 * f);
  const double s2w3f = std::sin(2.0 * argp + 3.0 * f);

  const double a_osc =
      a + a * gamma2 *
              ((3.0 * theta2 - 1.0) *
                   (std::pow(a_r, 3) - 1.0 / std::pow(eta, 3)) +
               3.0 * (1.0 - theta2) * std::pow(a_r, 3) * c2w2f);

  const double de1 = (gamma2p / 8.0) * e * eta * eta *
                     (1.0 - 11.0 * theta2 - 40.0 * theta4 / crit) *
                     std::cos(2.0 * argp);

  const double de =
      de1 +
      (eta * eta / 2.0) *
          (gamma2 * ((3.0 * theta2 - 1.0) / std::pow(eta, 6) *
                         (e * eta + e / (1.0 + eta) + 3.0 * cf +
                          3.0 * e * cf * cf + e * e * cf * cf * cf) +
                     3.0 * (1.0 - theta2) / std::pow(eta, 6) *
                         (e + 3.0 * cf + 3.0 * e * cf * cf +
                          e * e * cf * cf * cf) *
                         c2w2f) -
           gamma2p * (1.0 - theta2) * (3.0 * c2wf + c2w3f));

  const double di =
      -(e * de1) / (eta * eta * std::tan(inc)) +
      (gamma2p / 2.0) * theta * std::sqrt(1.0 - theta2) *
          (3.0 * c2w2f + 3.0 * e * c2wf + e * c2w3f);

  // Correction of the regular combination M + argp (mean argument of
  // latitude analogue); the node correction is separate.
  const double eq_center = f - M + e * sf;
  const double dmw =
      (gamma2p / 8.0) * eta * eta * eta *
          (1.0 - 11.0 * theta2 - 40.0 * theta4 / crit) -
      (gamma2p / 16.0) *
          (2.0 + e * e - 11.0 * (2.0 + 3.0 * e * e) * theta2 -
           40.0 * (2.0 + 5.0 * e * e) * theta4 / crit -
           400.0 * e * e * theta6 / (crit * crit)) +
      (gamma2p / 4.0) *
          (-6.0 * (1.0 - 5.0 * theta2) * eq_center +
           (3.0 - 5.0 * theta2) * (3.0 * s2w2f + 3.0 * e * s2wf + e * s2w3f));

  // e * (mean anomaly correction): regular as e -> 0.
  const double edM =
      (gamma2p / 8.0) * e * eta * eta * eta *
          (1.0 - 11.0 * theta2 - 40.0 * theta4 / crit) -
      (gamma2p / 4.0) * eta * eta * eta *
          (2.0 * (3.0 * theta2 - 1.0) *
               (a_r * a_r * eta * eta + a_r + 1.0) * sf +
           3.0 * (1.0 - theta2) *
               ((-a_r * a_r * eta * eta - a_r + 1.0) * s2wf +
                (a_r * a_r * eta * eta + a_r + 1.0 / 3.0) * s2w3f));

  const double draan =
      -(gamma2p / 8.0) * e * e * theta *
          (11.0 + 80.0 * theta2 / crit + 200.0 * theta4 / (crit * crit)) -
      (gamma2p / 2.0) * theta *
          (6.0 * eq_center - 3.0 * s2w2f - 3.0 * e * s2wf - e * s2w3f);

  // Nonsingular recovery: corrections of (e cos w, e sin w) stay finite for
  // vanishing eccentricity, where w and M individually do not.
  const double edw = e * dmw - edM;
  const double ex = e * std::cos(argp) + de * std::cos(argp) -
                    edw * std::sin(argp);
  const double ey = e * std::sin(argp) + de * std::sin(argp) +
                    edw * std::cos(argp);

  OrbitalElements osc;
  osc.a = a_osc;
  osc.e = std::hypot(ex, ey);
  osc.i = inc + di;
  osc.raan = wrap_pi(raan + draan);
  osc.argp = (osc.e > 1e-15) ? std::atan2(ey, ex) : argp;
  osc.mean_anomaly = wrap_pi(M + argp + dmw - osc.argp);
  return osc;
}

OrbitalElements osculating_to_mean(const OrbitalElements& osc, double j2,
                                   double mu, double ref_radius) {
  OrbitalElements mean = osc;
  for (int it = 0; it < 60; ++it) {
    const OrbitalElements mapped = mean_to_osculating(mean, j2, mu, ref_radius);
    const double corr[6] = {osc.a - mapped.a,
                            osc.e - mapped.e,
                            osc.i - mapped.i,
                            wrap_pi(osc.raan - mapped.raan),
                            wrap_pi(osc.argp - mapped.argp),
                            wrap_pi(osc.mean_anomaly - mapped.mean_anomaly)};
    mean.a += corr[0];
    mean.e += corr[1];
    mean.i += corr[2];
    mean.raan = wrap_pi(mean.raan + corr[3]);
    mean.argp = wrap_pi(mean.argp + corr[4]);
    mean.mean_anomaly = wrap_pi(mean.mean_anomaly + corr[5]);
    double err = std::abs(corr[0]) / osc.a;
    for (int k = 1; k < 6; ++k) err = std::max(err, std::abs(corr[k]));
    if (err < 1e-13) break;
  }
  return mean;
}

}  // namespace snac
