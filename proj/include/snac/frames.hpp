#pragma once

#include <optional>
#include <string>

#include "snac/linalg.hpp"

namespace snac {

/// Frame tags used across the pipeline. W denotes a generic world frame
/// (ACAF, ACI, or ACIC depending on context).
enum class Frame { ACAF, ACI, ACIC, CF, RTN };

std::string frame_name(Frame f);

/// Orthonormal, right-handed rotation between two tagged frames.
/// Applying `matrix` to a vector expressed in `from_frame` yields the same
/// vector expressed in `to_frame`.
struct FrameRotation {
  Mat3 matrix = Mat3::Identity();
  Frame from_frame = Frame::ACI;
  Frame to_frame = Frame::ACI;

  FrameRotation() = default;
  FrameRotation(const Mat3& m, Frame from, Frame to);

  FrameRotation inverse() const;

  /// Composition: this ∘ other, requiring other.to_frame == this->from_frame.
  FrameRotation compose(const FrameRotation& other) const;

  Vec3 apply(const Vec3& v) const { return matrix * v; }

  /// Orthonormality defect max|RᵀR − I|; valid rotations stay below 1e-12.
  double orthonormality_error() const;
};

Mat3 rot_x(double angle);
Mat3 rot_y(double angle);
Mat3 rot_z(double angle);

/// Pixel coordinates. `w` is the homogeneous common factor; a projection
/// with w > 0 lies in front of the camera.
struct PixelPoint {
  double u = 0.0;
  double v = 0.0;
  double w = 1.0;

  Vec2 uv() const { return Vec2(u, v); }
  Vec3 homogeneous() const { return Vec3(u, v, 1.0); }
};

/// Finite projective camera: intrinsics, image size, and pose in a world
/// frame. The camera center coincides with the spacecraft center of mass.
struct CameraModel {
  Mat3 calibration = Mat3::Identity();  // upper triangular, px units
  int width = 0;
  int height = 0;
  Vec3 position = Vec3::Zero();  // camera center in world frame [m]
  FrameRotation orientation;     // world -> CF

  static CameraModel pinhole(double focal_px, int width, int height,
                             const Vec3& position,
                             const FrameRotation& world_to_cf);

  bool contains(const PixelPoint& p) const {
    return p.u >= 0.0 && p.u < width && p.v >= 0.0 && p.v < height;
  }

  PixelPoint principal_point() const {
    return {calibration(0, 2), calibration(1, 2), 1.0};
  }
};

/// Mean/covariance pair for Mahalanobis gating.
struct GaussianBelief {
  VecX mean;
  MatX covariance;
};

/// 3x4 projective camera matrix M = K [R | R(-r)].
Mat34 projection_matrix(const CameraModel& camera);

/// Projection that reports the point-behind-camera case as an empty optional
/// instead of throwing; project() below is the throwing contract.
std::optional<PixelPoint> try_project(const CameraModel& camera,
                                      const Vec3& point_world);

/// Euclidean pixel of a world point. Throws BehindCamera when the
/// homogeneous factor is non-positive.
PixelPoint project(const CameraModel& camera, const Vec3& point_world);

/// Unit ray direction (world frame) through a pixel, leaving the camera
/// center.
Vec3 back_project_ray(const CameraModel& camera, const PixelPoint& pixel);

/// Mahalanobis distance of a sample to a Gaussian belief. Throws
/// SingularCovariance when the covariance condition number exceeds 1e12.
double mahalanobis(const VecX& sample, const GaussianBelief& belief);

/// Distance threshold for a rejection probability p_m: two-sided standard
/// normal quantile in 1D, sqrt(-2 ln p_m) in 2D.
double mahalanobis_threshold(double p_m, int dims);

}  // namespace snac
