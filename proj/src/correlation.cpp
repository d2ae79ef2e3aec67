#include "snac/correlation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "snac/dual.hpp"
#include "snac/errors.hpp"

namespace snac {

namespace {

struct TwoNearest {
  int best = -1;
  double best_d2 = std::numeric_limits<double>::infinity();
  double second_d2 = std::numeric_limits<double>::infinity();
};

TwoNearest two_nearest(const VecX& query,
                       const std::vector<KeypointObservation>& set) {
  TwoNearest r;
  for (size_t k = 0; k < set.size(); ++k) {
    const double d2 = (set[k].descriptor - query).squaredNorm();
    if (d2 < r.best_d2) {
      r.second_d2 = r.best_d2;
      r.best_d2 = d2;
      r.best = static_cast<int>(k);
    } else if (d2 < r.second_d2) {
      r.second_d2 = d2;
    }
  }
  return r;
}

bool ratio_ok(const TwoNearest& nn, double lowe_ratio) {
  if (nn.best < 0) return false;
  if (!std::isfinite(nn.second_d2)) return true;  // single neighbor: accept
  return std::sqrt(nn.best_d2) < lowe_ratio * std::sqrt(nn.second_d2);
}

}  // namespace

std::vector<MatchPair> match_descriptors(
    const std::vector<KeypointObservation>& set_a,
    const std::vector<KeypointObservation>& set_b, double lowe_ratio) {
  std::vector<MatchPair> out;
  if (set_a.empty() || set_b.empty()) return out;
  std::vector<TwoNearest> b_nn(set_b.size());
  for (size_t k = 0; k < set_b.size(); ++k)
    b_nn[k] = two_nearest(set_b[k].descriptor, set_a);
  for (size_t i = 0; i < set_a.size(); ++i) {
    const TwoNearest nn = two_nearest(set_a[i].descriptor, set_b);
    if (!ratio_ok(nn, lowe_ratio)) continue;
    const TwoNearest& back = b_nn[nn.best];
    if (back.best != static_cast<int>(i)) continue;  // not mutual
    if (!ratio_ok(back, lowe_ratio)) continue;
    MatchPair p;
    p.index_a = static_cast<int>(i);
    p.index_b = nn.best;
    p.descriptor_dist2 = nn.best_d2;
    out.push_back(p);
  }
  return out;
}

namespace {

Vec3 normalized_coords(const Mat3& calib, const PixelPoint& p) {
  return calib.inverse() * p.homogeneous();
}

// ---- Minimal five-point essential matrix solver ------------------------
//
// E = x E1 + y E2 + z E3 + E4 over the nullspace of the 5x9 epipolar
// system. The essential constraints (det E = 0 and 2 E E^T E = tr(E E^T) E)
// give ten cubics in (x, y, z). Treating z as a hidden variable yields a
// 10x10 system M(z) m = 0 over the (x, y) monomials; solvability requires
// det M(z) = 0, a degree-10 polynomial whose roots recover the candidates.
// The linear eight-point estimate is useless here: the observed surface
// patch is nearly planar, which is exactly its degenerate configuration.

/// Dense polynomial in (x, y, z) of total degree <= 3 (20 monomials).
struct Poly3 {
  std::array<double, 20> c{};

  static const std::array<std::array<int, 3>, 20>& exponents() {
    static const std::array<std::array<int, 3>, 20> e = {{
        {3, 0, 0}, {2, 1, 0}, {1, 2, 0}, {0, 3, 0}, {2, 0, 1},
        {1, 1, 1}, {0, 2, 1}, {1, 0, 2}, {0, 1, 2}, {0, 0, 3},
        {2, 0, 0}, {1, 1, 0}, {0, 2, 0}, {1, 0, 1}, {0, 1, 1},
        {0, 0, 2}, {1, 0, 0}, {0, 1, 0}, {0, 0, 1}, {0, 0, 0},
    }};
    return e;
  }
  static int index(int i, int j, int k) {
    const auto& exps = exponents();
    for (int n = 0; n < 20; ++n)
      if (exps[n][0] == i && exps[n][1] == j && exps[n][2] == k) return n;
    return -1;
  }

  static Poly3 linear(double cx, double cy, double cz, double c1) {
    Poly3 p;
    p.c[16] = cx;
    p.c[17] = cy;
    p.c[18] = cz;
    p.c[19] = c1;
    return p;
  }

  Poly3 operator+(const Poly3& o) const {
    Poly3 r;
    for (int n = 0; n < 20; ++n) r.c[n] = c[n] + o.c[n];
    return r;
  }
  Poly3 operator-(const Poly3& o) const {
    Poly3 r;
    for (int n = 0; n < 20; ++n) r.c[n] = c[n] - o.c[n];
    return r;
  }
  Poly3 operator*(double s) const {
    Poly3 r;
    for (int n = 0; n < 20; ++n) r.c[n] = c[n] * s;
    return r;
  }
  Poly3 operator*(const Poly3& o) const {
    static const auto lut = [] {
      std::array<std::array<int, 20>, 20> t{};
      const auto& exps = exponents();
      for (int a = 0; a < 20; ++a)
        for (int b = 0; b < 20; ++b) {
          const int i = exps[a][0] + exps[b][0];
          const int j = exps[a][1] + exps[b][1];
          const int k = exps[a][2] + exps[b][2];
          t[a][b] = (i + j + k <= 3) ? index(i, j, k) : -1;
        }
      return t;
    }();
    Poly3 r;
    for (int a = 0; a < 20; ++a) {
      if (c[a] == 0.0) continue;
      for (int b = 0; b < 20; ++b) {
        if (o.c[b] == 0.0) continue;
        const int n = lut[a][b];
        // Degree overflow cannot occur for the products formed here
        // (deg1*deg1 and deg2*deg1).
        if (n >= 0) r.c[n] += c[a] * o.c[b];
      }
    }
    return r;
  }
};

/// Coefficient of the (x,y)-monomial `which` as a cubic polynomial in z.
/// Monomial order: x^3, x^2 y, x y^2, y^3, x^2, x y, y^2, x, y, 1.
Vec4 hidden_z_coeffs(const Poly3& p, int which) {
  auto at = [&](int i, int j, int k) {
    const int n = Poly3::index(i, j, k);
    return n >= 0 ? p.c[n] : 0.0;
  };
  Vec4 out = Vec4::Zero();  // [z^0, z^1, z^2, z^3]
  switch (which) {
    case 0: out[0] = at(3, 0, 0); break;
    case 1: out[0] = at(2, 1, 0); break;
    case 2: out[0] = at(1, 2, 0); break;
    case 3: out[0] = at(0, 3, 0); break;
    case 4: out[0] = at(2, 0, 0); out[1] = at(2, 0, 1); break;
    case 5: out[0] = at(1, 1, 0); out[1] = at(1, 1, 1); break;
    case 6: out[0] = at(0, 2, 0); out[1] = at(0, 2, 1); break;
    case 7:
      out[0] = at(1, 0, 0);
      out[1] = at(1, 0, 1);
      out[2] = at(1, 0, 2);
      break;
    case 8:
      out[0] = at(0, 1, 0);
      out[1] = at(0, 1, 1);
      out[2] = at(0, 1, 2);
      break;
    case 9:
      out[0] = at(0, 0, 0);
      out[1] = at(0, 0, 1);
      out[2] = at(0, 0, 2);
      out[3] = at(0, 0, 3);
      break;
  }
  return out;
}

/// Real roots of a Chebyshev series via the colleague matrix.
std::vector<double> chebyshev_roots(const VecX& a) {
  int n = static_cast<int>(a.size()) - 1;
  while (n > 0 && std::abs(a[n]) < 1e-13 * a.cwiseAbs().maxCoeff()) --n;
  std::vector<double> roots;
  if (n < 1) return roots;
  MatX colleague = MatX::Zero(n, n);
  if (n == 1) {
    roots.push_back(-a[0] / a[1]);
    return roots;
  }
  colleague(0, 1) = 1.0;
  for (int i = 1; i < n - 1; ++i) {
    colleague(i, i - 1) = 0.5;
    colleague(i, i + 1) = 0.5;
  }
  colleague(n - 1, n - 2) = 0.5;
  for (int j = 0; j < n; ++j) colleague(n - 1, j) -= a[j] / (2.0 * a[n]);
  Eigen::EigenSolver<MatX> es(colleague);
  for (int i = 0; i < n; ++i) {
    const auto ev = es.eigenvalues()[i];
    if (std::abs(ev.imag()) < 1e-8 * (1.0 + std::abs(ev.real())))
      roots.push_back(ev.real());
  }
  return roots;
}

std::vector<Mat3> five_point_candidates(const std::vector<Vec3>& xa,
                                        const std::vector<Vec3>& xb,
                                        const std::vector<int>& subset) {
  MatX chi(subset.size(), 9);
  for (size_t r = 0; r < subset.size(); ++r) {
    const Vec3& x1 = xa[subset[r]];
    const Vec3& x2 = xb[subset[r]];
    chi.row(r) << x2.x() * x1.x(), x2.x() * x1.y(), x2.x() * x1.z(),
        x2.y() * x1.x(), x2.y() * x1.y(), x2.y() * x1.z(),
        x2.z() * x1.x(), x2.z() * x1.y(), x2.z() * x1.z();
  }
  Eigen::JacobiSVD<MatX> svd(chi, Eigen::ComputeFullV);
  const MatX v = svd.matrixV();
  Mat3 basis[4];
  for (int b = 0; b < 4; ++b) {
    const VecX e = v.col(5 + b);
    basis[b] << e[0], e[1], e[2], e[3], e[4], e[5], e[6], e[7], e[8];
  }

  // Entries of E as degree-1 polynomials in (x, y, z).
  Poly3 e[3][3];
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 3; ++c)
      e[r][c] = Poly3::linear(basis[0](r, c), basis[1](r, c),
                              basis[2](r, c), basis[3](r, c));

  std::vector<Poly3> eqs;
  eqs.reserve(10);
  // det(E) = 0.
  eqs.push_back(e[0][0] * (e[1][1] * e[2][2] - e[1][2] * e[2][1]) -
                e[0][1] * (e[1][0] * e[2][2] - e[1][2] * e[2][0]) +
                e[0][2] * (e[1][0] * e[2][1] - e[1][1] * e[2][0]));
  // 2 E E^T E - tr(E E^T) E = 0.
  Poly3 eet[3][3];
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 3; ++c) {
      Poly3 acc;
      for (int k = 0; k < 3; ++k) acc = acc + e[r][k] * e[c][k];
      eet[r][c] = acc;
    }
  const Poly3 trace = eet[0][0] + eet[1][1] + eet[2][2];
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 3; ++c) {
      Poly3 acc;
      for (int k = 0; k < 3; ++k) acc = acc + eet[r][k] * e[k][c];
      eqs.push_back(acc * 2.0 - trace * e[r][c]);
    }

  // Hidden-variable matrix M(z): rows are the 10 cubics, columns the (x,y)
  // monomials, entries cubic polynomials in z.
  Vec4 mz[10][10];
  for (int r = 0; r < 10; ++r)
    for (int c = 0; c < 10; ++c) mz[r][c] = hidden_z_coeffs(eqs[r], c);

  auto mat_at = [&](double z) {
    MatX m(10, 10);
    const double z2 = z * z, z3 = z * z * z;
    for (int r = 0; r < 10; ++r)
      for (int c = 0; c < 10; ++c)
        m(r, c) = mz[r][c][0] + mz[r][c][1] * z + mz[r][c][2] * z2 +
                  mz[r][c][3] * z3;
    return m;
  };

  // det M(z) has degree 10; interpolate it on Chebyshev nodes of a wide
  // interval (solutions are O(1) for a normalized nullspace basis).
  const double span = 20.0;
  const int n_nodes = 16;
  VecX tk(n_nodes), pk(n_nodes);
  for (int k = 0; k < n_nodes; ++k) {
    tk[k] = std::cos(M_PI * (k + 0.5) / n_nodes);
    pk[k] = mat_at(span * tk[k]).partialPivLu().determinant();
  }
  // Chebyshev coefficients by discrete orthogonality.
  VecX coef = VecX::Zero(n_nodes);
  for (int j = 0; j < n_nodes; ++j) {
    double acc = 0.0;
    for (int k = 0; k < n_nodes; ++k)
      acc += pk[k] * std::cos(j * M_PI * (k + 0.5) / n_nodes);
    coef[j] = 2.0 / n_nodes * acc;
  }
  coef[0] *= 0.5;

  std::vector<Mat3> out;
  for (double t : chebyshev_roots(coef)) {
    if (std::abs(t) > 1.5) continue;  // far outside the sampled interval
    double z = span * t;
    // Newton polish on det M(z).
    for (int it = 0; it < 3; ++it) {
      const double h = 1e-6 * (1.0 + std::abs(z));
      const double f = mat_at(z).partialPivLu().determinant();
      const double fp = (mat_at(z + h).partialPivLu().determinant() -
                         mat_at(z - h).partialPivLu().determinant()) /
                        (2.0 * h);
      if (fp == 0.0) break;
      z -= f / fp;
    }
    // Null vector of M(z) gives the (x, y) monomials.
    Eigen::JacobiSVD<MatX> msvd(mat_at(z), Eigen::ComputeFullV);
    const VecX m = msvd.matrixV().col(9);
    if (std::abs(m[9]) < 1e-10 * m.cwiseAbs().maxCoeff()) continue;
    const double x = m[7] / m[9];
    const double y = m[8] / m[9];
    Mat3 cand = x * basis[0] + y * basis[1] + z * basis[2] + basis[3];
    // Project to the essential manifold.
    Eigen::JacobiSVD<Mat3> esvd(cand,
                                Eigen::ComputeFullU | Eigen::ComputeFullV);
    Vec3 s(1.0, 1.0, 0.0);
    out.push_back(esvd.matrixU() * s.asDiagonal() *
                  esvd.matrixV().transpose());
  }
  return out;
}

double sampson_error(const Mat3& E, const Vec3& x1, const Vec3& x2) {
  const Vec3 Ex1 = E * x1;
  const Vec3 Etx2 = E.transpose() * x2;
  const double num = x2.dot(Ex1);
  const double den = Ex1.head<2>().squaredNorm() + Etx2.head<2>().squaredNorm();
  if (den <= 0.0) return std::numeric_limits<double>::infinity();
  return num * num / den;
}

}  // namespace

ConsensusResult consensus_reject(const std::vector<MatchPair>& pairs,
                                 const std::vector<KeypointObservation>& a,
                                 const std::vector<KeypointObservation>& b,
                                 const Mat3& calib_a, const Mat3& calib_b,
                                 const CorrelationConfig& config, Rng& rng) {
  ConsensusResult result;
  if (pairs.size() < 5) {
    result.inliers = pairs;
    result.passthrough = true;
    return result;
  }

  const int n = static_cast<int>(pairs.size());
  std::vector<Vec3> xa(n), xb(n);
  for (int i = 0; i < n; ++i) {
    xa[i] = normalized_coords(calib_a, a[pairs[i].index_a].pixel);
    xb[i] = normalized_coords(calib_b, b[pairs[i].index_b].pixel);
  }
  // Sampson threshold in normalized coordinates (pixel threshold over the
  // mean focal length).
  const double focal = 0.5 * (calib_a(0, 0) + calib_b(0, 0));
  const double thresh2 = std::pow(config.ransac_threshold_px / focal, 2);

  const int sample_size = 5;
  std::vector<int> all_idx(n);
  for (int i = 0; i < n; ++i) all_idx[i] = i;

  Mat3 best_e = Mat3::Zero();
  int best_count = -1;
  for (int it = 0; it < config.ransac_iterations; ++it) {
    std::vector<int> subset;
    if (sample_size >= n) {
      subset = all_idx;
    } else {
      subset.reserve(sample_size);
      while (static_cast<int>(subset.size()) < sample_size) {
        const int cand = static_cast<int>(rng.index(n));
        if (std::find(subset.begin(), subset.end(), cand) == subset.end())
          subset.push_back(cand);
      }
    }
    for (const Mat3& E : five_point_candidates(xa, xb, subset)) {
      int count = 0;
      for (int i = 0; i < n; ++i)
        if (sampson_error(E, xa[i], xb[i]) < thresh2) ++count;
      if (count > best_count) {
        best_count = count;
        best_e = E;
      }
    }
    if (sample_size >= n) break;  // a single deterministic sample
    // A near-unanimous consensus cannot be improved meaningfully.
    if (it >= 30 && best_count >= static_cast<int>(0.95 * n)) break;
  }

  if (best_count < config.ransac_min_inlier_fraction * n)
    throw ConsensusFailure("no essential matrix reached the inlier fraction");
  result.essential = best_e;
  for (int i = 0; i < n; ++i)
    if (sampson_error(best_e, xa[i], xb[i]) < thresh2)
      result.inliers.push_back(pairs[i]);
  if (static_cast<int>(result.inliers.size()) <
      config.ransac_min_inlier_fraction * n)
    throw ConsensusFailure("inlier fraction below minimum after refit");
  return result;
}

namespace {

// d and its partials via forward-mode duals over
// [r1 (3), r2 (3), l1 (2), l2 (2)].
using D = Dual<10>;
using DVec3 = Eigen::Matrix<D, 3, 1>;

DVec3 mat_vec(const Mat3& m, const DVec3& v) {
  DVec3 out;
  for (int r = 0; r < 3; ++r) {
    D acc(0.0);
    for (int c = 0; c < 3; ++c) acc += D(m(r, c)) * v[c];
    out[r] = acc;
  }
  return out;
}

DVec3 cross(const DVec3& a, const DVec3& b) {
  DVec3 o;
  o[0] = a[1] * b[2] - a[2] * b[1];
  o[1] = a[2] * b[0] - a[0] * b[2];
  o[2] = a[0] * b[1] - a[1] * b[0];
  return o;
}

}  // namespace

EpipolarDistance epipolar_distance(const CameraModel& camera_a,
                                   const CameraModel& camera_b,
                                   const PixelPoint& l1, const PixelPoint& l2,
                                   const Mat6& joint_position_cov,
                                   const Mat2& pixel_cov_a,
                                   const Mat2& pixel_cov_b) {
  DVec3 r1, r2;
  for (int k = 0; k < 3; ++k) {
    r1[k] = D::seed(camera_a.position[k], k);
    r2[k] = D::seed(camera_b.position[k], 3 + k);
  }
  const D u1 = D::seed(l1.u, 6), v1 = D::seed(l1.v, 7);
  const D u2 = D::seed(l2.u, 8), v2 = D::seed(l2.v, 9);

  // Ray of l1 in the world frame; a far point on it plus the camera-a
  // center project into image b to span the epipolar line.
  DVec3 l1h;
  l1h << u1, v1, D(1.0);
  const Mat3 k1inv = camera_a.calibration.inverse();
  const Mat3 r1w = camera_a.orientation.matrix.transpose();  // CF -> world
  const DVec3 dir = mat_vec(r1w, mat_vec(k1inv, l1h));
  const double span = (camera_b.position - camera_a.position).norm() +
                      camera_a.position.norm() + 1.0;
  DVec3 far_point;
  for (int k = 0; k < 3; ++k) far_point[k] = r1[k] + D(span) * dir[k];

  // Project both points with camera b: p = Kb Rb (x - r2).
  const Mat3 kb_rb = camera_b.calibration * camera_b.orientation.matrix;
  DVec3 d1, d2;
  for (int k = 0; k < 3; ++k) {
    d1[k] = r1[k] - r2[k];
    d2[k] = far_point[k] - r2[k];
  }
  const DVec3 p = mat_vec(kb_rb, d1);
  const DVec3 q = mat_vec(kb_rb, d2);
  const DVec3 line = cross(p, q);  // epipolar line [a, b, c] in image b

  const D denom = sqrt(line[0] * line[0] + line[1] * line[1]);
  const D dist = (line[0] * u2 + line[1] * v2 + line[2]) / denom;

  EpipolarDistance out;
  out.d = dist.v;
  for (int k = 0; k < 6; ++k) out.d_dgamma(0, k) = dist.d[k];
  out.d_dl1 << dist.d[6], dist.d[7];
  out.d_dl2 << dist.d[8], dist.d[9];
  out.variance =
      (out.d_dgamma * joint_position_cov * out.d_dgamma.transpose())(0, 0) +
      (out.d_dl1 * pixel_cov_a * out.d_dl1.transpose())(0, 0) +
      (out.d_dl2 * pixel_cov_b * out.d_dl2.transpose())(0, 0);
  return out;
}

std::vector<MatchPair> epipolar_reject(
    const std::vector<MatchPair>& pairs,
    const std::vector<KeypointObservation>& a,
    const std::vector<KeypointObservation>& b, const CameraModel& camera_a,
    const CameraModel& camera_b, const Mat6& joint_position_cov,
    const Mat2& pixel_cov_a, const Mat2& pixel_cov_b, double p_m) {
  std::vector<MatchPair> out;
  const double gate = mahalanobis_threshold(p_m, 1);
  for (const MatchPair& pair : pairs) {
    const EpipolarDistance ed = epipolar_distance(
        camera_a, camera_b, a[pair.index_a].pixel, b[pair.index_b].pixel,
        joint_position_cov, pixel_cov_a, pixel_cov_b);
    if (!(ed.variance > 0.0) || !std::isfinite(ed.variance))
      continue;  // singular gate covariance: reject conservatively
    const double m = std::abs(ed.d) / std::sqrt(ed.variance);
    if (m > gate) continue;
    MatchPair kept = pair;
    kept.epipolar_distance = ed.d;
    kept.mahalanobis = m;
    out.push_back(kept);
  }
  return out;
}

std::vector<CorrelatedSet> share_correlations(
    const std::vector<MatchPair>& middle_to_outer1,
    const std::vector<MatchPair>& middle_to_outer2,
    const std::vector<MatchPair>& outer1_to_outer2) {
  std::vector<CorrelatedSet> sets;

  std::map<int, const MatchPair*> m_to_1, m_to_2;
  for (const auto& p : middle_to_outer1) m_to_1[p.index_a] = &p;
  for (const auto& p : middle_to_outer2) m_to_2[p.index_a] = &p;
  std::map<std::pair<int, int>, const MatchPair*> direct;
  for (const auto& p : outer1_to_outer2) direct[{p.index_a, p.index_b}] = &p;

  // Sets built around middle keypoints (pairs or shared triplets).
  for (const auto& [mk, p1] : m_to_1) {
    CorrelatedSet s;
    s.middle = mk;
    s.outer1 = p1->index_b;
    s.total_descriptor_dist2 = p1->descriptor_dist2;
    auto it2 = m_to_2.find(mk);
    if (it2 != m_to_2.end()) {
      s.outer2 = it2->second->index_b;
      s.total_descriptor_dist2 += it2->second->descriptor_dist2;
      auto dit = direct.find({s.outer1, s.outer2});
      if (dit != direct.end())
        s.total_descriptor_dist2 += dit->second->descriptor_dist2;
    }
    sets.push_back(s);
  }
  for (const auto& [mk, p2] : m_to_2) {
    if (m_to_1.count(mk)) continue;  // already covered above
    CorrelatedSet s;
    s.middle = mk;
    s.outer2 = p2->index_b;
    s.total_descriptor_dist2 = p2->descriptor_dist2;
    sets.push_back(s);
  }
  // Direct outer matches not already inside a shared set.
  for (const auto& p : outer1_to_outer2) {
    bool covered = false;
    for (const auto& s : sets)
      if (s.outer1 == p.index_a && s.outer2 == p.index_b) covered = true;
    if (covered) continue;
    CorrelatedSet s;
    s.outer1 = p.index_a;
    s.outer2 = p.index_b;
    s.total_descriptor_dist2 = p.descriptor_dist2;
    sets.push_back(s);
  }

  // Resolve keypoint ownership conflicts: smaller summed descriptor
  // distance wins; ties break on indices for determinism.
  std::sort(sets.begin(), sets.end(), [](const auto& x, const auto& y) {
    if (x.total_descriptor_dist2 != y.total_descriptor_dist2)
      return x.total_descriptor_dist2 < y.total_descriptor_dist2;
    return std::tie(x.middle, x.outer1, x.outer2) <
           std::tie(y.middle, y.outer1, y.outer2);
  });
  std::vector<CorrelatedSet> out;
  std::map<int, bool> used_m, used_1, used_2;
  for (const auto& s : sets) {
    if (s.middle >= 0 && used_m.count(s.middle)) continue;
    if (s.outer1 >= 0 && used_1.count(s.outer1)) continue;
    if (s.outer2 >= 0 && used_2.count(s.outer2)) continue;
    if (s.middle >= 0) used_m[s.middle] = true;
    if (s.outer1 >= 0) used_1[s.outer1] = true;
    if (s.outer2 >= 0) used_2[s.outer2] = true;
    out.push_back(s);
  }
  return out;
}

std::vector<F2scAssignment> correlate_filter_to_image(
    const std::vector<LandmarkProjection>& landmarks,
    const std::vector<KeypointObservation>& keypoints,
    const Mat2& pixel_noise_cov, const CorrelationConfig& config) {
  const double gate2d = mahalanobis_threshold(config.p_m, 2);
  const double gate1d = mahalanobis_threshold(config.p_m, 1);

  std::vector<F2scAssignment> candidates;
  for (const LandmarkProjection& lm : landmarks) {
    if (!lm.valid) continue;
    const Mat2 sigma = lm.projected_cov + pixel_noise_cov;
    Eigen::LLT<Mat2> chol(sigma);
    if (chol.info() != Eigen::Success) continue;
    for (size_t k = 0; k < keypoints.size(); ++k) {
      const Vec2 diff = keypoints[k].pixel.uv() - lm.predicted.uv();
      const double desc2 =
          (keypoints[k].descriptor - lm.descriptor).squaredNorm();
      if (desc2 > config.descriptor_gate) continue;
      const double m2d = std::sqrt(diff.dot(chol.solve(diff)));
      if (m2d > gate2d) continue;
      const double mu = std::abs(diff.x()) / std::sqrt(sigma(0, 0));
      if (mu > gate1d) continue;
      const double mv = std::abs(diff.y()) / std::sqrt(sigma(1, 1));
      if (mv > gate1d) continue;
      F2scAssignment c;
      c.landmark_id = lm.landmark_id;
      c.keypoint = static_cast<int>(k);
      c.m2d = m2d;
      c.mu = mu;
      c.mv = mv;
      c.desc2 = desc2;
      c.cost = config.w_2d * m2d + config.w_u * mu + config.w_v * mv + desc2;
      candidates.push_back(c);
    }
  }

  std::sort(candidates.begin(), candidates.end(),
            [](const F2scAssignment& x, const F2scAssignment& y) {
              if (x.cost != y.cost) return x.cost < y.cost;
              return std::tie(x.landmark_id, x.keypoint) <
                     std::tie(y.landmark_id, y.keypoint);
            });
  std::vector<F2scAssignment> out;
  std::map<int, bool> used_landmark, used_keypoint;
  for (const auto& c : candidates) {
    if (used_landmark.count(c.landmark_id) || used_keypoint.count(c.keypoint))
      continue;
    used_landmark[c.landmark_id] = true;
    used_keypoint[c.keypoint] = true;
    out.push_back(c);
  }
  return out;
}

double eigenvalue_overlap(const Mat3& cov_a, const Mat3& cov_b,
                          double distance) {
  Eigen::SelfAdjointEigenSolver<Mat3> ea(cov_a), eb(cov_b);
  return std::sqrt(ea.eigenvalues().maxCoeff()) +
         std::sqrt(eb.eigenvalues().maxCoeff()) - distance;
}

RetireResult retire_and_dedupe(std::vector<LandmarkRecord>& tracked,
                               std::vector<LandmarkRecord>& retired_db,
                               const CorrelationConfig& config) {
  RetireResult result;
  std::vector<LandmarkRecord> still_tracked;
  still_tracked.reserve(tracked.size());

  for (LandmarkRecord& lm : tracked) {
    if (lm.consecutive_misses < config.retire_steps) {
      still_tracked.push_back(std::move(lm));
      continue;
    }
    if (lm.total_correlations == 0) {
      // Initialized but never correlated: drop from the database entirely.
      result.deleted_ids.push_back(lm.id);
      continue;
    }
    lm.retired = true;
    result.retired_ids.push_back(lm.id);

    // Dedupe against nearby retired landmarks, one by one.
    bool keep_new = true;
    for (auto it = retired_db.begin(); it != retired_db.end() && keep_new;) {
      const double dist = (it->acaf_position - lm.acaf_position).norm();
      if (dist > config.dedupe_distance) {
        ++it;
        continue;
      }
      const double overlap = eigenvalue_overlap(lm.covariance, it->covariance,
                                                dist);
      if (overlap < 0.0) {
        const double ev_new =
            Eigen::SelfAdjointEigenSolver<Mat3>(lm.covariance)
                .eigenvalues()
                .maxCoeff();
        const double ev_old =
            Eigen::SelfAdjointEigenSolver<Mat3>(it->covariance)
                .eigenvalues()
                .maxCoeff();
        if (ev_new < ev_old) {
          result.deleted_ids.push_back(it->id);
          it = retired_db.erase(it);
        } else {
          result.deleted_ids.push_back(lm.id);
          keep_new = false;
        }
      } else {
        ++it;
      }
    }
    if (keep_new) retired_db.push_back(std::move(lm));
  }
  tracked = std::move(still_tracked);
  return result;
}

}  // namespace snac
