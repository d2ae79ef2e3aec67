#pragma once

#include <Eigen/Dense>

namespace snac {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Vec4 = Eigen::Vector4d;
using Vec6 = Eigen::Matrix<double, 6, 1>;
using VecX = Eigen::VectorXd;
using Mat2 = Eigen::Matrix2d;
using Mat3 = Eigen::Matrix3d;
using Mat6 = Eigen::Matrix<double, 6, 6>;
using Mat34 = Eigen::Matrix<double, 3, 4>;
using MatX = Eigen::MatrixXd;

/// Force exact symmetry on a square matrix.
inline MatX symmetrize(const MatX& m) { return 0.5 * (m + m.transpose()); }

/// Clamp the eigenvalues of a symmetric matrix at `floor_value` from below.
inline MatX clamp_eigenvalues(const MatX& m, double floor_value) {
  Eigen::SelfAdjointEigenSolver<MatX> es(symmetrize(m));
  VecX ev = es.eigenvalues().cwiseMax(floor_value);
  return es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().transpose();
}

}  // namespace snac
