#include "snac/stereovision.hpp"

#include <cmath>

#include "snac/errors.hpp"

namespace snac {

Vec3 triangulate_linear(const std::vector<StereoObservation>& observations) {
  const int n = static_cast<int>(observations.size());
  if (n < 2) throw DegenerateGeometry("triangulation needs at least 2 views");
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      if ((observations[i].camera.position - observations[j].camera.position)
              .norm() < 1e-6)
        throw DegenerateGeometry("coincident camera centers");

  MatX a(2 * n, 4);
  for (int i = 0; i < n; ++i) {
    const Mat34 m = projection_matrix(observations[i].camera);
    a.row(2 * i) = observations[i].pixel.u * m.row(2) - m.row(0);
    a.row(2 * i + 1) = observations[i].pixel.v * m.row(2) - m.row(1);
  }
  Eigen::JacobiSVD<MatX> svd(a, Eigen::ComputeFullV);
  const VecX& sv = svd.singularValues();
  if (sv[2] > 0.0 && (sv[3] == 0.0 || (sv[2] - sv[3]) / sv[2] < 1e-9))
    throw DegenerateGeometry("triangulation system is rank deficient");
  const Vec4 hom = svd.matrixV().col(3);
  if (std::abs(hom[3]) < 1e-14 * hom.head<3>().norm())
    throw DegenerateGeometry("point at infinity");
  return hom.head<3>() / hom[3];
}

double reprojection_residual2(const Vec3& point,
                              const std::vector<StereoObservation>& obs) {
  double sum = 0.0;
  for (const StereoObservation& o : obs) {
    const auto p = try_project(o.camera, point);
    if (!p) return std::numeric_limits<double>::infinity();
    sum += (p->uv() - o.pixel.uv()).squaredNorm();
  }
  return sum;
}

PixelJacobian pixel_jacobian(const CameraModel& camera,
                             const Vec3& point_world) {
  const Mat3 kr = camera.calibration * camera.orientation.matrix;
  const Vec3 v = kr * (point_world - camera.position);
  Eigen::Matrix<double, 2, 3> dpi;
  const double iz = 1.0 / v.z();
  dpi << iz, 0.0, -v.x() * iz * iz, 0.0, iz, -v.y() * iz * iz;
  PixelJacobian j;
  j.d_point = dpi * kr;
  j.d_position = -j.d_point;
  return j;
}

Mat3 world_point_rotation_jacobian(const RotationState& rotation, double t,
                                   const Vec3& point_acaf) {
  const double theta =
      rotation.prime_meridian_epoch_angle + rotation.omega * t;
  const Mat3 rz1 = rot_z(rotation.alpha + M_PI / 2.0);
  const Mat3 rx = rot_x(M_PI / 2.0 - rotation.delta);
  const Mat3 rz2 = rot_z(theta);

  auto drot_z = [](double a) {
    Mat3 m;
    m << -std::sin(a), -std::cos(a), 0, std::cos(a), -std::sin(a), 0, 0, 0, 0;
    return m;
  };
  auto drot_x = [](double a) {
    Mat3 m;
    m << 0, 0, 0, 0, -std::sin(a), -std::cos(a), 0, std::cos(a), -std::sin(a);
    return m;
  };

  Mat3 j;
  j.col(0) = drot_z(rotation.alpha + M_PI / 2.0) * rx * rz2 * point_acaf;
  j.col(1) = rz1 * (-drot_x(M_PI / 2.0 - rotation.delta)) * rz2 * point_acaf;
  j.col(2) = rz1 * rx * drot_z(theta) * point_acaf * t;
  return j;
}

Vec3 triangulate_refine(const Vec3& initial,
                        const std::vector<StereoObservation>& observations,
                        int max_iterations) {
  for (const StereoObservation& o : observations)
    if (!try_project(o.camera, initial))
      throw DegenerateGeometry("initial point behind a camera");

  Vec3 point = initial;
  double cost = reprojection_residual2(point, observations);
  bool converged = false;
  for (int it = 0; it < max_iterations && !converged; ++it) {
    Mat3 jtj = Mat3::Zero();
    Vec3 jtr = Vec3::Zero();
    for (const StereoObservation& o : observations) {
      const PixelPoint pred = project(o.camera, point);
      const Vec2 res = pred.uv() - o.pixel.uv();
      const PixelJacobian jac = pixel_jacobian(o.camera, point);
      jtj += jac.d_point.transpose() * jac.d_point;
      jtr += jac.d_point.transpose() * res;
    }
    Eigen::LDLT<Mat3> fac(jtj);
    if (fac.info() != Eigen::Success)
      throw DegenerateGeometry("normal matrix singular in refinement");
    Vec3 step = -fac.solve(jtr);
    const double newton_step = step.norm();

    // Halve the step while it does not decrease the cost.
    double trial_cost = reprojection_residual2(point + step, observations);
    int halvings = 0;
    while (trial_cost > cost && halvings < 10) {
      step *= 0.5;
      trial_cost = reprojection_residual2(point + step, observations);
      ++halvings;
    }
    bool moved = false;
    if (trial_cost <= cost) {
      point += step;
      moved = true;
    }
    if (step.norm() < 1e-8) converged = true;
    // The cost is at its floating-point floor: no decrease is possible and
    // the Newton step itself is already geometrically negligible.
    if (!converged && newton_step < 1e-4 &&
        (!moved || cost - trial_cost < 1e-12 * (cost + 1.0)))
      converged = true;
    if (moved) cost = trial_cost;
  }
  if (!converged)
    throw NonConvergence("Gauss-Newton triangulation did not converge");
  // Never worse than the initializer.
  if (cost > reprojection_residual2(initial, observations)) return initial;
  return point;
}

StereoCovariance stereo_covariance(const MatX& a_landmark, const MatX& a_state,
                                   const VecX& r_diag, const MatX& p_minus) {
  const MatX rinv_al = r_diag.cwiseInverse().asDiagonal() * a_landmark;
  const Mat3 info = (a_landmark.transpose() * rinv_al);
  Eigen::LDLT<Mat3> fac(info);
  if (fac.info() != Eigen::Success || info.determinant() <= 0.0)
    throw DegenerateGeometry("stereo information matrix not invertible");
  const Mat3 info_inv = fac.solve(Mat3::Identity());
  const MatX x = fac.solve(rinv_al.transpose());  // 3 x 2N
  const MatX xax = x * a_state;                   // 3 x n
  StereoCovariance out;
  out.p_cross = -xax * p_minus;
  out.p_landmark = info_inv + (xax * p_minus * xax.transpose());
  out.p_landmark = 0.5 * (out.p_landmark + out.p_landmark.transpose());
  return out;
}

BaselineGain wide_baseline_gain(const Vec3& point,
                                const std::vector<StereoObservation>& obs,
                                double pixel_sigma) {
  MatX a_l(2 * obs.size(), 3);
  for (size_t i = 0; i < obs.size(); ++i)
    a_l.middleRows<2>(2 * i) = pixel_jacobian(obs[i].camera, point).d_point;
  const Mat3 info = a_l.transpose() * a_l / (pixel_sigma * pixel_sigma);
  const Mat3 cov = info.ldlt().solve(Mat3::Identity());
  BaselineGain g;
  g.trace = cov.trace();
  const Vec3 depth_axis = obs.front().camera.orientation.matrix.row(2);
  g.depth_variance = depth_axis.dot(cov * depth_axis);
  return g;
}

}  // namespace snac
