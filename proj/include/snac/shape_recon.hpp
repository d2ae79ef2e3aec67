#pragma once

#include <vector>

#include "snac/linalg.hpp"
#include "snac/sphharm.hpp"

namespace snac {

/// Normalized spherical-harmonic shape coefficients [m], ordered
/// [A00 A10 A11 ... ANN | B11 B21 B22 ... BNN] (degree-major in each block).
struct ShapeCoefficients {
  int max_degree = 0;
  VecX s;

  static int size(int degree) { return (degree + 1) * (degree + 1); }
  static int a_index(int n, int m) { return n * (n + 1) / 2 + m; }
  static int b_index(int max_degree, int n, int m) {
    return (max_degree + 1) * (max_degree + 2) / 2 + n * (n - 1) / 2 + m - 1;
  }

  static ShapeCoefficients zeros(int degree) {
    return {degree, VecX::Zero(size(degree))};
  }
  static ShapeCoefficients sphere(int degree, double radius);

  double a(int n, int m) const { return s[a_index(n, m)]; }
  double b(int n, int m) const { return s[b_index(max_degree, n, m)]; }
  void set_a(int n, int m, double v) { s[a_index(n, m)] = v; }
  void set_b(int n, int m, double v) { s[b_index(max_degree, n, m)] = v; }

  /// Degree of the i-th element of s (used by the Tikhonov weights).
  static int element_degree(int max_degree, int i);

  /// Rotation-invariant RMS power spectrum of degree n.
  double degree_rms(int n) const;
};

/// Radius of the truncated expansion at longitude/latitude [rad].
double evaluate_shape(const ShapeCoefficients& coeffs, double lon, double lat);

/// Radius plus first derivatives with respect to (lon, lat).
struct ShapeEval {
  double r;
  double dr_dlon;
  double dr_dlat;
};
ShapeEval evaluate_shape_gradient(const ShapeCoefficients& coeffs, double lon,
                                  double lat);

/// RMS error between reference radii and the model prediction at the
/// reference directions.
double shape_rmse(const ShapeCoefficients& coeffs,
                  const std::vector<Vec3>& reference_points);

struct ShapeDesign {
  MatX A;                    // n_l x (N+1)^2 basis matrix
  VecX r;                    // landmark radii [m]
  std::vector<LonLat> geo;   // per-landmark longitude/latitude
};

/// Basis matrix and radius vector for a set of ACAF landmark positions.
/// Throws OriginPoint (OriginSingularity) for a landmark at the origin.
ShapeDesign design_matrix(const std::vector<Vec3>& landmarks, int max_degree);

/// Per-landmark radius variances from 3x3 position covariances via
/// dr/dL = L^T/||L||.
VecX radius_variances(const std::vector<Vec3>& landmarks,
                      const std::vector<Mat3>& covariances);

/// Full radius covariance for a block-diagonal landmark covariance.
MatX radius_covariance(const std::vector<Vec3>& landmarks,
                       const std::vector<Mat3>& covariances);

/// Plain least squares. Throws RankDeficient when columns exceed rows or
/// the design condition number exceeds 1e12.
VecX fit_unregularized(const MatX& A, const VecX& r);

/// Diagonal of the Tikhonov matrix Gamma^{1/2}: deg(s_i)^alpha with epsilon
/// added to the degree-0 entry.
VecX tikhonov_matrix(int max_degree, double alpha, double epsilon);

/// Weighted, regularized fit inputs. `p_diag` holds per-landmark radius
/// variances (the default); `p_full` optionally carries the full covariance.
struct ShapeFitProblem {
  MatX A;
  VecX r;
  VecX p_diag;
  MatX p_full;  // empty unless full covariance weighting is requested
  int max_degree = 0;
  double alpha = 1.84;
  double epsilon = 0.0;  // 0 -> auto: 1e-8 * max diagonal of Gamma^{1/2}

  VecX gamma_sqrt() const;
  bool has_full_p() const { return p_full.size() > 0; }
};

ShapeFitProblem make_fit_problem(const std::vector<Vec3>& landmarks,
                                 const std::vector<Mat3>& covariances,
                                 int max_degree, double alpha);

/// Regularized weighted least squares solution for a given nu >= 0.
VecX fit_regularized(const ShapeFitProblem& problem, double nu);

/// GCV objective machinery. One SVD at construction; each evaluation of
/// V, V', V'' is O(n_s).
class GcvEvaluator {
 public:
  explicit GcvEvaluator(const ShapeFitProblem& problem);

  double value(double nu_bar) const;
  double first_derivative(double nu_bar) const;
  double second_derivative(double nu_bar) const;

  double sigma_min_pos() const { return sigma_min_pos_; }
  double sigma_max() const { return sigma_max_; }
  int n_points() const { return n_points_; }

 private:
  struct Terms;
  Terms terms(double nu_bar) const;
  VecX sv_;           // singular values of Abar
  VecX beta_;         // U^T rbar
  double orth2_ = 0;  // squared residual orthogonal to the column space
  int n_points_ = 0;
  double sigma_min_pos_ = 0;
  double sigma_max_ = 0;
};

struct GcvResult {
  double nu = 0.0;      // weight used in fit_regularized
  double nu_bar = 0.0;  // standard-form weight (nu / n_l)
  double v = 0.0;
  double v_prime = 0.0;
  double v_double_prime = 0.0;
  bool newton_converged = false;
  bool fallback_to_grid = false;  // no interior minimum found
};

/// Three-step GCV weight selection: singular-value bracket, log-space grid
/// (default 40 points), Newton refinement on V'.
GcvResult gcv_select(const ShapeFitProblem& problem, int grid_points = 40);

/// Fit with GCV-selected weight; flags likely undersmoothing by comparing
/// the fitted spectrum against a power-law envelope fitted to low degrees.
struct ShapeFitReport {
  ShapeCoefficients coefficients;
  GcvResult gcv;
  bool undersmoothing_warning = false;
};
ShapeFitReport fit_shape_gcv(const ShapeFitProblem& problem);

}  // namespace snac
