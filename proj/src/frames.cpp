#include "snac/frames.hpp"

#include <cmath>

#include "snac/errors.hpp"
#include "snac/stats.hpp"

namespace snac {

std::string frame_name(Frame f) {
  switch (f) {
    case Frame::ACAF: return "ACAF";
    case Frame::ACI: return "ACI";
    case Frame::ACIC: return "ACIC";
    case Frame::CF: return "CF";
    case Frame::RTN: return "RTN";
  }
  return "?";
}

FrameRotation::FrameRotation(const Mat3& m, Frame from, Frame to)
    : matrix(m), from_frame(from), to_frame(to) {}

FrameRotation FrameRotation::inverse() const {
  return FrameRotation(matrix.transpose(), to_frame, from_frame);
}

FrameRotation FrameRotation::compose(const FrameRotation& other) const {
  return FrameRotation(matrix * other.matrix, other.from_frame, to_frame);
}

double FrameRotation::orthonormality_error() const {
  return (matrix.transpose() * matrix - Mat3::Identity())
      .cwiseAbs()
      .maxCoeff();
}

Mat3 rot_x(double a) {
  Mat3 m;
  m << 1, 0, 0, 0, std::cos(a), -std::sin(a), 0, std::sin(a), std::cos(a);
  return m;
}

Mat3 rot_y(double a) {
  Mat3 m;
  m << std::cos(a), 0, std::sin(a), 0, 1, 0, -std::sin(a), 0, std::cos(a);
  return m;
}

Mat3 rot_z(double a) {
  Mat3 m;
  m << std::cos(a), -std::sin(a), 0, std::sin(a), std::cos(a), 0, 0, 0, 1;
  return m;
}

CameraModel CameraModel::pinhole(double focal_px, int width, int height,
                                 const Vec3& position,
                                 const FrameRotation& world_to_cf) {
  CameraModel cam;
  cam.calibration << focal_px, 0, 0.5 * width, 0, focal_px, 0.5 * height, 0,
      0, 1;
  cam.width = width;
  cam.height = height;
  cam.position = position;
  cam.orientation = world_to_cf;
  return cam;
}

Mat34 projection_matrix(const CameraModel& camera) {
  const Mat3& rot = camera.orientation.matrix;
  Mat34 m;
  m.leftCols<3>() = rot;
  m.col(3) = rot * (-camera.position);
  return camera.calibration * m;
}

std::optional<PixelPoint> try_project(const CameraModel& camera,
                                      const Vec3& point_world) {
  const Mat34 m = projection_matrix(camera);
  Vec4 hom;
  hom << point_world, 1.0;
  const Vec3 proj = m * hom;
  if (!(proj.z() > 0.0)) return std::nullopt;
  return PixelPoint{proj.x() / proj.z(), proj.y() / proj.z(), proj.z()};
}

PixelPoint project(const CameraModel& camera, const Vec3& point_world) {
  auto p = try_project(camera, point_world);
  if (!p) throw BehindCamera();
  return *p;
}

Vec3 back_project_ray(const CameraModel& camera, const PixelPoint& pixel) {
  const Vec3 dir_cf = camera.calibration.inverse() * pixel.homogeneous();
  return (camera.orientation.matrix.transpose() * dir_cf).normalized();
}

double mahalanobis(const VecX& sample, const GaussianBelief& belief) {
  const VecX diff = sample - belief.mean;
  Eigen::SelfAdjointEigenSolver<MatX> es(symmetrize(belief.covariance));
  const VecX& ev = es.eigenvalues();
  const double emax = ev.cwiseAbs().maxCoeff();
  const double emin = ev.minCoeff();
  if (!(emin > 0.0) || emax / emin > 1e12)
    throw SingularCovariance();
  const VecX y = es.eigenvectors().transpose() * diff;
  double q = 0.0;
  for (int i = 0; i < ev.size(); ++i) q += y[i] * y[i] / ev[i];
  return std::sqrt(q);
}

double mahalanobis_threshold(double p_m, int dims) {
  if (!(p_m > 0.0) || p_m > 1.0) throw InvalidProbability();
  if (dims == 1) return normal_quantile(1.0 - 0.5 * p_m);
  if (dims == 2) return std::sqrt(-2.0 * std::log(p_m));
  throw Error("mahalanobis_threshold supports dims 1 or 2");
}

}  // namespace snac
