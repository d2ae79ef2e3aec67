#include <cmath>

#include "doctest.h"
#include "snac/errors.hpp"
#include "snac/frames.hpp"
#include "snac/rng.hpp"

using namespace snac;

namespace {

FrameRotation random_rotation(Rng& rng, Frame from, Frame to) {
  // QR of a random matrix gives a uniform-ish orthonormal basis.
  Mat3 m;
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 3; ++c) m(r, c) = rng.normal();
  Eigen::HouseholderQR<Mat3> qr(m);
  Mat3 q = qr.householderQ();
  if (q.determinant() < 0) q.col(2) *= -1.0;
  return FrameRotation(q, from, to);
}

/// Independent oracle: per-element arithmetic of K [R | R(-r)] L_h without
/// any library projection code.
Vec2 project_oracle(const Mat3& k, const Mat3& rot, const Vec3& cam_pos,
                    const Vec3& point) {
  double m[3][4];
  const Vec3 t = rot * (-cam_pos);
  for (int r = 0; r < 3; ++r) {
    for (int c = 0; c < 3; ++c) {
      double acc = 0.0;
      for (int i = 0; i < 3; ++i) acc += k(r, i) * rot(i, c);
      m[r][c] = acc;
    }
    double acc = 0.0;
    for (int i = 0; i < 3; ++i) acc += k(r, i) * t[i];
    m[r][3] = acc;
  }
  double h[3];
  for (int r = 0; r < 3; ++r)
    h[r] = m[r][0] * point.x() + m[r][1] * point.y() + m[r][2] * point.z() +
           m[r][3];
  return Vec2(h[0] / h[2], h[1] / h[2]);
}

/// Explicit 2x2 / 3x3 inverse via the adjugate (oracle for mahalanobis).
MatX adjugate_inverse(const MatX& a) {
  if (a.rows() == 2) {
    const double det = a(0, 0) * a(1, 1) - a(0, 1) * a(1, 0);
    MatX inv(2, 2);
    inv << a(1, 1), -a(0, 1), -a(1, 0), a(0, 0);
    return inv / det;
  }
  REQUIRE(a.rows() == 3);
  MatX inv(3, 3);
  inv(0, 0) = a(1, 1) * a(2, 2) - a(1, 2) * a(2, 1);
  inv(0, 1) = a(0, 2) * a(2, 1) - a(0, 1) * a(2, 2);
  inv(0, 2) = a(0, 1) * a(1, 2) - a(0, 2) * a(1, 1);
  inv(1, 0) = a(1, 2) * a(2, 0) - a(1, 0) * a(2, 2);
  inv(1, 1) = a(0, 0) * a(2, 2) - a(0, 2) * a(2, 0);
  inv(1, 2) = a(0, 2) * a(1, 0) - a(0, 0) * a(1, 2);
  inv(2, 0) = a(1, 0) * a(2, 1) - a(1, 1) * a(2, 0);
  inv(2, 1) = a(0, 1) * a(2, 0) - a(0, 0) * a(2, 1);
  inv(2, 2) = a(0, 0) * a(1, 1) - a(0, 1) * a(1, 0);
  const double det = a(0, 0) * inv(0, 0) + a(0, 1) * inv(1, 0) +
                     a(0, 2) * inv(2, 0);
  return inv / det;
}

}  // namespace

TEST_CASE("projection matrix: identity camera") {
  CameraModel cam;
  cam.width = 2;
  cam.height = 2;
  const Mat34 m = projection_matrix(cam);
  CHECK((m.leftCols<3>() - Mat3::Identity()).norm() == doctest::Approx(0.0));
  CHECK(m.col(3).norm() == doctest::Approx(0.0));
}

TEST_CASE("projection: boresight point maps to the principal point") {
  Rng rng(7);
  for (int trial = 0; trial < 20; ++trial) {
    const FrameRotation att = random_rotation(rng, Frame::ACI, Frame::CF);
    const Vec3 pos(rng.normal(0, 1e4), rng.normal(0, 1e4), rng.normal(0, 1e4));
    const CameraModel cam = CameraModel::pinhole(2500.0, 1024, 1024, pos, att);
    const Vec3 boresight = att.matrix.row(2);
    const double d = rng.uniform(10.0, 1e5);
    const PixelPoint p = project(cam, pos + d * boresight);
    CHECK(p.u == doctest::Approx(512.0).epsilon(1e-9));
    CHECK(p.v == doctest::Approx(512.0).epsilon(1e-9));
    CHECK(p.w > 0.0);
  }
}

TEST_CASE("projection matches the independent element-wise oracle") {
  Rng rng(11);
  for (int trial = 0; trial < 50; ++trial) {
    const FrameRotation att = random_rotation(rng, Frame::ACI, Frame::CF);
    const Vec3 pos(rng.normal(0, 5e4), rng.normal(0, 5e4), rng.normal(0, 5e4));
    Mat3 k = Mat3::Identity();
    k(0, 0) = rng.uniform(500, 4000);
    k(1, 1) = rng.uniform(500, 4000);
    k(0, 2) = rng.uniform(100, 900);
    k(1, 2) = rng.uniform(100, 900);
    CameraModel cam;
    cam.calibration = k;
    cam.width = 1024;
    cam.height = 1024;
    cam.position = pos;
    cam.orientation = att;
    const Vec3 boresight = att.matrix.row(2);
    Vec3 point = pos + rng.uniform(100, 1e5) * boresight;
    point += Vec3(rng.normal(0, 500), rng.normal(0, 500), rng.normal(0, 500));
    const PixelPoint p = project(cam, point);
    const Vec2 oracle = project_oracle(k, att.matrix, pos, point);
    CHECK(p.u == doctest::Approx(oracle.x()).epsilon(1e-10));
    CHECK(p.v == doctest::Approx(oracle.y()).epsilon(1e-10));
  }
}

TEST_CASE("projection: point at the camera center is degenerate") {
  CameraModel cam = CameraModel::pinhole(2500.0, 1024, 1024, Vec3(1, 2, 3),
                                         FrameRotation());
  CHECK_THROWS_AS(project(cam, Vec3(1, 2, 3)), BehindCamera);
  CHECK_THROWS_AS(project(cam, Vec3(1, 2, 2)), BehindCamera);  // behind
}

TEST_CASE("back-projected ray passes through the world point") {
  Rng rng(13);
  for (int trial = 0; trial < 30; ++trial) {
    const FrameRotation att = random_rotation(rng, Frame::ACI, Frame::CF);
    const Vec3 pos(rng.normal(0, 1e4), rng.normal(0, 1e4), rng.normal(0, 1e4));
    const CameraModel cam = CameraModel::pinhole(2500.0, 1024, 1024, pos, att);
    const Vec3 boresight = att.matrix.row(2);
    Vec3 point = pos + rng.uniform(100, 1e4) * boresight;
    point += Vec3(rng.normal(0, 100), rng.normal(0, 100), rng.normal(0, 100));
    const auto pix = try_project(cam, point);
    if (!pix) continue;
    const Vec3 ray = back_project_ray(cam, *pix);
    const Vec3 rel = point - cam.position;
    const double along = rel.dot(ray);
    const double off = (rel - along * ray).norm();
    CHECK(off < 1e-9 * std::max(1.0, rel.norm()));
  }
}

TEST_CASE("mahalanobis basics") {
  GaussianBelief b;
  b.mean = VecX::Zero(2);
  b.covariance = MatX::Identity(2, 2);
  CHECK(mahalanobis(b.mean, b) == doctest::Approx(0.0));
  VecX s(2);
  s << 3.0, 4.0;
  CHECK(mahalanobis(s, b) == doctest::Approx(5.0));
}

TEST_CASE("mahalanobis matches the adjugate-inverse oracle") {
  Rng rng(17);
  for (int trial = 0; trial < 40; ++trial) {
    const int n = (trial % 2) ? 2 : 3;
    MatX a(n, n);
    for (int r = 0; r < n; ++r)
      for (int c = 0; c < n; ++c) a(r, c) = rng.normal();
    GaussianBelief b;
    b.covariance = a * a.transpose() + 0.5 * MatX::Identity(n, n);
    b.mean = VecX::Zero(n);
    for (int i = 0; i < n; ++i) b.mean[i] = rng.normal(0, 2);
    VecX s(n);
    for (int i = 0; i < n; ++i) s[i] = rng.normal(0, 2);
    const VecX d = s - b.mean;
    const double oracle =
        std::sqrt(d.dot(adjugate_inverse(b.covariance) * d));
    CHECK(mahalanobis(s, b) == doctest::Approx(oracle).epsilon(1e-10));
  }
}

TEST_CASE("mahalanobis rejects singular covariance") {
  GaussianBelief b;
  b.mean = VecX::Zero(2);
  b.covariance = MatX::Zero(2, 2);
  b.covariance(0, 0) = 1.0;
  b.covariance(1, 1) = 1e-15;
  VecX s(2);
  s << 1.0, 1.0;
  CHECK_THROWS_AS(mahalanobis(s, b), SingularCovariance);
}

TEST_CASE("mahalanobis invariant under joint invertible linear maps") {
  Rng rng(19);
  for (int trial = 0; trial < 25; ++trial) {
    const int n = 3;
    MatX a(n, n), t(n, n);
    for (int r = 0; r < n; ++r)
      for (int c = 0; c < n; ++c) {
        a(r, c) = rng.normal();
        t(r, c) = rng.normal();
      }
    t += 3.0 * MatX::Identity(n, n);  // keep it invertible
    GaussianBelief b;
    b.covariance = a * a.transpose() + MatX::Identity(n, n);
    b.mean = VecX::Zero(n);
    VecX s(n);
    for (int i = 0; i < n; ++i) {
      b.mean[i] = rng.normal();
      s[i] = rng.normal();
    }
    const double m0 = mahalanobis(s, b);
    GaussianBelief bt;
    bt.mean = t * b.mean;
    bt.covariance = t * b.covariance * t.transpose();
    const double m1 = mahalanobis(t * s, bt);
    CHECK(m1 == doctest::Approx(m0).epsilon(1e-8));
  }
}

TEST_CASE("mahalanobis thresholds match the published operating point") {
  // 4 significant figures at p_m = 0.001.
  CHECK(mahalanobis_threshold(0.001, 1) ==
        doctest::Approx(3.291).epsilon(5e-4));
  CHECK(mahalanobis_threshold(0.001, 2) ==
        doctest::Approx(3.717).epsilon(5e-4));
  CHECK(mahalanobis_threshold(1.0, 2) == doctest::Approx(0.0));
  CHECK(mahalanobis_threshold(1.0, 1) ==
        doctest::Approx(0.0).epsilon(1e-12));
  CHECK_THROWS_AS(mahalanobis_threshold(0.0, 1), InvalidProbability);
  CHECK_THROWS_AS(mahalanobis_threshold(1.5, 2), InvalidProbability);
}

TEST_CASE("thresholds are monotone decreasing in p_m") {
  for (int dims = 1; dims <= 2; ++dims) {
    double prev = mahalanobis_threshold(1e-6, dims);
    for (double p : {1e-5, 1e-4, 1e-3, 1e-2, 0.1, 0.5, 0.9}) {
      const double cur = mahalanobis_threshold(p, dims);
      CHECK(cur < prev);
      prev = cur;
    }
  }
}

TEST_CASE("frame rotation composition and inverse") {
  Rng rng(23);
  const FrameRotation ab = random_rotation(rng, Frame::ACAF, Frame::ACI);
  const FrameRotation ba = ab.inverse();
  const FrameRotation id = ab.compose(ba);
  CHECK((id.matrix - Mat3::Identity()).cwiseAbs().maxCoeff() < 1e-12);
  CHECK(ab.orthonormality_error() < 1e-12);
  CHECK(ab.matrix.determinant() == doctest::Approx(1.0));
  CHECK(id.from_frame == Frame::ACI);
  CHECK(id.to_frame == Frame::ACI);
}
