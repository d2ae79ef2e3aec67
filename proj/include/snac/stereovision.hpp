#pragma once

#include <vector>

#include "snac/dynamics.hpp"
#include "snac/frames.hpp"

namespace snac {

struct StereoObservation {
  CameraModel camera;  // world frame = ACI at the epoch
  PixelPoint pixel;
  int spacecraft = 0;
};

/// Homogeneous linear triangulation (DLT). Throws DegenerateGeometry for
/// parallel rays / coincident centers.
Vec3 triangulate_linear(const std::vector<StereoObservation>& observations);

/// Gauss-Newton refinement of the total squared reprojection error.
/// Converges when the step drops below 1e-8 m; throws NonConvergence after
/// 25 iterations. The result never has a larger residual than the input.
Vec3 triangulate_refine(const Vec3& initial,
                        const std::vector<StereoObservation>& observations,
                        int max_iterations = 25);

/// Total squared reprojection residual [px^2].
double reprojection_residual2(const Vec3& point,
                              const std::vector<StereoObservation>& obs);

/// Pixel partials of one observation: d(pixel)/d(point_world) and
/// d(pixel)/d(camera position).
struct PixelJacobian {
  Eigen::Matrix<double, 2, 3> d_point;
  Eigen::Matrix<double, 2, 3> d_position;
};
PixelJacobian pixel_jacobian(const CameraModel& camera,
                             const Vec3& point_world);

/// d(world point)/d(psi) for an ACAF-fixed point observed through the
/// rotation parameterized by (alpha, delta, omega) at time t.
Mat3 world_point_rotation_jacobian(const RotationState& rotation, double t,
                                   const Vec3& point_acaf);

/// Covariance of a stereovision estimate and its cross covariance with the
/// filter state:
///   X   = (A_L^T R^-1 A_L)^-1 A_L^T R^-1
///   P_L = X A_x P^- A_x^T X^T + (A_L^T R^-1 A_L)^-1
///   P_Lx = -X A_x P^-
struct StereoCovariance {
  Mat3 p_landmark;
  MatX p_cross;  // 3 x n
};
StereoCovariance stereo_covariance(const MatX& a_landmark, const MatX& a_state,
                                   const VecX& r_diag, const MatX& p_minus);

/// Stereovision output handed to the filter for augmentation.
struct StereoEstimate {
  Vec3 acaf_position = Vec3::Zero();
  Mat3 covariance = Mat3::Zero();
  MatX cross_covariance;  // 3 x n against the pre-update state
  std::vector<int> keypoint_ids;  // per-view bookkeeping (evaluation only)
  double residual_rms_px = 0.0;
  int views = 0;
};

/// Geometry-only landmark information comparison used by the wide-baseline
/// diagnostic: trace and depth variance of (A_L^T R^-1 A_L)^-1, the depth
/// axis taken from the first observer's CF frame.
struct BaselineGain {
  double trace = 0.0;
  double depth_variance = 0.0;
};
BaselineGain wide_baseline_gain(const Vec3& point,
                                const std::vector<StereoObservation>& obs,
                                double pixel_sigma);

}  // namespace snac
