#include "snac/shape_recon.hpp"

#include <algorithm>
#include <cmath>

#include "snac/errors.hpp"

namespace snac {

ShapeCoefficients ShapeCoefficients::sphere(int degree, double radius) {
  ShapeCoefficients c = zeros(degree);
  c.s[0] = radius;
  return c;
}

int ShapeCoefficients::element_degree(int max_degree, int i) {
  const int a_count = (max_degree + 1) * (max_degree + 2) / 2;
  if (i < a_count) {
    int n = 0;
    while ((n + 1) * (n + 2) / 2 <= i) ++n;
    return n;
  }
  const int j = i - a_count;  // index in the B block: (n,m) with m >= 1
  int n = 1;
  while (n * (n + 1) / 2 <= j) ++n;
  return n;
}

double ShapeCoefficients::degree_rms(int n) const {
  double sum = 0.0;
  for (int m = 0; m <= n; ++m) sum += a(n, m) * a(n, m);
  for (int m = 1; m <= n; ++m) sum += b(n, m) * b(n, m);
  return std::sqrt(sum / (2.0 * n + 1.0));
}

double evaluate_shape(const ShapeCoefficients& coeffs, double lon,
                      double lat) {
  const LegendreTable leg(coeffs.max_degree, std::sin(lat), std::cos(lat),
                          /*with_derivatives=*/false);
  double r = 0.0;
  for (int n = 0; n <= coeffs.max_degree; ++n) {
    for (int m = 0; m <= n; ++m) {
      const double p = leg.value(n, m);
      r += coeffs.a(n, m) * std::cos(m * lon) * p;
      if (m > 0) r += coeffs.b(n, m) * std::sin(m * lon) * p;
    }
  }
  return r;
}

ShapeEval evaluate_shape_gradient(const ShapeCoefficients& coeffs, double lon,
                                  double lat) {
  const LegendreTable leg(coeffs.max_degree, std::sin(lat), std::cos(lat));
  ShapeEval out{0.0, 0.0, 0.0};
  for (int n = 0; n <= coeffs.max_degree; ++n) {
    for (int m = 0; m <= n; ++m) {
      const double p = leg.value(n, m);
      const double dp = leg.deriv(n, m);
      const double cm = std::cos(m * lon), sm = std::sin(m * lon);
      const double a = coeffs.a(n, m);
      const double b = (m > 0) ? coeffs.b(n, m) : 0.0;
      out.r += (a * cm + b * sm) * p;
      out.dr_dlon += (-a * m * sm + b * m * cm) * p;
      out.dr_dlat += (a * cm + b * sm) * dp;
    }
  }
  return out;
}

double shape_rmse(const ShapeCoefficients& coeffs,
                  const std::vector<Vec3>& reference_points) {
  if (reference_points.empty()) return 0.0;
  double sum = 0.0;
  for (const Vec3& p : reference_points) {
    const LonLat geo = to_lonlat(p);
    const double err = evaluate_shape(coeffs, geo.lon, geo.lat) - geo.radius;
    sum += err * err;
  }
  return std::sqrt(sum / reference_points.size());
}

ShapeDesign design_matrix(const std::vector<Vec3>& landmarks,
                          int max_degree) {
  const int n_l = static_cast<int>(landmarks.size());
  const int n_s = ShapeCoefficients::size(max_degree);
  ShapeDesign d;
  d.A.resize(n_l, n_s);
  d.r.resize(n_l);
  d.geo.reserve(n_l);
  for (int i = 0; i < n_l; ++i) {
    const LonLat geo = to_lonlat(landmarks[i]);  // throws on origin
    d.geo.push_back(geo);
    d.r[i] = geo.radius;
    const LegendreTable leg(max_degree, std::sin(geo.lat), std::cos(geo.lat),
                            /*with_derivatives=*/false);
    for (int n = 0; n <= max_degree; ++n) {
      for (int m = 0; m <= n; ++m) {
        const double p = leg.value(n, m);
        d.A(i, ShapeCoefficients::a_index(n, m)) = p * std::cos(m * geo.lon);
        if (m > 0)
          d.A(i, ShapeCoefficients::b_index(max_degree, n, m)) =
              p * std::sin(m * geo.lon);
      }
    }
  }
  return d;
}

VecX radius_variances(const std::vector<Vec3>& landmarks,
                      const std::vector<Mat3>& covariances) {
  VecX v(landmarks.size());
  for (size_t i = 0; i < landmarks.size(); ++i) {
    const Vec3 u = landmarks[i].normalized();
    v[i] = u.dot(covariances[i] * u);
  }
  return v;
}

MatX radius_covariance(const std::vector<Vec3>& landmarks,
                       const std::vector<Mat3>& covariances) {
  return radius_variances(landmarks, covariances).asDiagonal();
}

VecX fit_unregularized(const MatX& A, const VecX& r) {
  if (A.cols() > A.rows())
    throw RankDeficient("more coefficients than surface points");
  Eigen::JacobiSVD<MatX> svd(A, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const VecX& sv = svd.singularValues();
  if (!(sv[0] > 0.0) || sv[0] / sv[sv.size() - 1] > 1e12)
    throw RankDeficient("design matrix condition number exceeds 1e12");
  return svd.solve(r);
}

VecX tikhonov_matrix(int max_degree, double alpha, double epsilon) {
  const int n_s = ShapeCoefficients::size(max_degree);
  VecX g(n_s);
  for (int i = 0; i < n_s; ++i) {
    const int deg = ShapeCoefficients::element_degree(max_degree, i);
    g[i] = (deg == 0) ? epsilon : std::pow(double(deg), alpha);
  }
  return g;
}

VecX ShapeFitProblem::gamma_sqrt() const {
  double eps = epsilon;
  if (eps <= 0.0) eps = 1e-8 * std::pow(double(std::max(max_degree, 1)), alpha);
  return tikhonov_matrix(max_degree, alpha, eps);
}

ShapeFitProblem make_fit_problem(const std::vector<Vec3>& landmarks,
                                 const std::vector<Mat3>& covariances,
                                 int max_degree, double alpha) {
  ShapeFitProblem p;
  ShapeDesign d = design_matrix(landmarks, max_degree);
  p.A = std::move(d.A);
  p.r = std::move(d.r);
  p.p_diag = radius_variances(landmarks, covariances).cwiseMax(1e-12);
  p.max_degree = max_degree;
  p.alpha = alpha;
  return p;
}

VecX fit_regularized(const ShapeFitProblem& problem, double nu) {
  if (nu < 0.0) throw NumericalFailure("nu must be non-negative");
  const VecX g = problem.gamma_sqrt();
  MatX normal;
  VecX rhs;
  if (problem.has_full_p()) {
    Eigen::LDLT<MatX> pfac(problem.p_full);
    const MatX pia = pfac.solve(problem.A);
    normal = problem.A.transpose() * pia;
    rhs = pia.transpose() * problem.r;
  } else {
    const VecX w = problem.p_diag.cwiseInverse();
    normal = problem.A.transpose() * w.asDiagonal() * problem.A;
    rhs = problem.A.transpose() * (w.asDiagonal() * problem.r);
  }
  normal += nu * g.cwiseProduct(g).asDiagonal();
  Eigen::LDLT<MatX> fac(symmetrize(normal));
  if (fac.info() != Eigen::Success)
    throw NumericalFailure("regularized normal matrix factorization failed");
  VecX sol = fac.solve(rhs);
  if (!sol.allFinite())
    throw NumericalFailure("regularized solve produced non-finite values");
  return sol;
}

namespace {

/// Standard-form data matrix Abar = P^{-1/2} A Gamma^{-1/2} and rbar.
void standard_form(const ShapeFitProblem& p, MatX& abar, VecX& rbar) {
  const VecX g = p.gamma_sqrt();
  if (p.has_full_p()) {
    Eigen::LLT<MatX> chol(symmetrize(p.p_full));
    if (chol.info() != Eigen::Success)
      throw NumericalFailure("radius covariance is not positive definite");
    abar = chol.matrixL().solve(p.A);
    rbar = chol.matrixL().solve(p.r);
  } else {
    const VecX w = p.p_diag.cwiseSqrt().cwiseInverse();
    abar = w.asDiagonal() * p.A;
    rbar = w.asDiagonal() * p.r;
  }
  abar = abar * g.cwiseInverse().asDiagonal();
}

}  // namespace

GcvEvaluator::GcvEvaluator(const ShapeFitProblem& problem) {
  MatX abar;
  VecX rbar;
  standard_form(problem, abar, rbar);
  n_points_ = static_cast<int>(abar.rows());
  Eigen::BDCSVD<MatX> svd(abar, Eigen::ComputeThinU);
  sv_ = svd.singularValues();
  beta_ = svd.matrixU().transpose() * rbar;
  orth2_ = std::max(0.0, rbar.squaredNorm() - beta_.squaredNorm());
  sigma_max_ = sv_.size() ? sv_[0] : 0.0;
  sigma_min_pos_ = sigma_max_;
  for (int i = 0; i < sv_.size(); ++i)
    if (sv_[i] > sigma_max_ * 1e-15) sigma_min_pos_ = sv_[i];
}

struct GcvEvaluator::Terms {
  double num, num_p, num_pp;  // n_l ||B rbar||^2 and nu_bar derivatives
  double tr, tr_p, tr_pp;     // Tr(B) and derivatives
};

GcvEvaluator::Terms GcvEvaluator::terms(double nu_bar) const {
  const double c = n_points_ * nu_bar;
  Terms t{0, 0, 0, double(n_points_), 0, 0};
  double br2 = orth2_;
  for (int i = 0; i < sv_.size(); ++i) {
    const double s2 = sv_[i] * sv_[i];
    const double h = s2 + c;
    const double g = s2 / h;
    const double gp = -s2 * n_points_ / (h * h);
    const double gpp = 2.0 * s2 * n_points_ * n_points_ / (h * h * h);
    const double b2 = beta_[i] * beta_[i];
    br2 += (1.0 - g) * (1.0 - g) * b2;
    t.num_p += 2.0 * (1.0 - g) * (-gp) * b2;
    t.num_pp += 2.0 * (gp * gp - (1.0 - g) * gpp) * b2;
    t.tr -= g;
    t.tr_p -= gp;
    t.tr_pp -= gpp;
  }
  t.num = n_points_ * br2;
  t.num_p *= n_points_;
  t.num_pp *= n_points_;
  return t;
}

double GcvEvaluator::value(double nu_bar) const {
  const Terms t = terms(nu_bar);
  return t.num / (t.tr * t.tr);
}

double GcvEvaluator::first_derivative(double nu_bar) const {
  const Terms t = terms(nu_bar);
  return t.num_p / (t.tr * t.tr) - 2.0 * t.num * t.tr_p / std::pow(t.tr, 3);
}

double GcvEvaluator::second_derivative(double nu_bar) const {
  const Terms t = terms(nu_bar);
  return t.num_pp / (t.tr * t.tr) -
         (4.0 * t.num_p * t.tr_p + 2.0 * t.num * t.tr_pp) / std::pow(t.tr, 3) +
         6.0 * t.num * t.tr_p * t.tr_p / std::pow(t.tr, 4);
}

GcvResult gcv_select(const ShapeFitProblem& problem, int grid_points) {
  const VecX g = problem.gamma_sqrt();
  if (!(g.minCoeff() > 0.0))
    throw NumericalFailure("Tikhonov matrix must be invertible (epsilon > 0)");
  GcvEvaluator ev(problem);
  const int n_l = ev.n_points();

  // Step 1: bracket nu_bar so that n_l * nu_bar spans the numerically
  // meaningful range set by the squared singular values of Abar.
  const double lo = ev.sigma_min_pos() * ev.sigma_min_pos() / n_l;
  const double hi = ev.sigma_max() * ev.sigma_max() / n_l;
  if (!(hi > lo) || !(lo > 0.0))
    throw NumericalFailure("GCV bracket is empty");

  // Step 2: log-space grid.
  GcvResult res;
  double best_v = std::numeric_limits<double>::infinity();
  int best_idx = 0;
  std::vector<double> grid(grid_points);
  for (int i = 0; i < grid_points; ++i) {
    const double frac = double(i) / (grid_points - 1);
    grid[i] = lo * std::pow(hi / lo, frac);
    const double v = ev.value(grid[i]);
    if (v < best_v) {
      best_v = v;
      best_idx = i;
    }
  }
  double nu_bar = grid[best_idx];
  const bool edge = (best_idx == 0 || best_idx == grid_points - 1);

  // Step 3: Newton refinement on V'; half-step damping on non-decrease.
  bool converged = false;
  double fp = ev.first_derivative(nu_bar);
  for (int it = 0; it < 60 && !converged; ++it) {
    const double fpp = ev.second_derivative(nu_bar);
    double step = (fpp > 0.0) ? fp / fpp : fp * nu_bar / std::abs(fp + 1e-300);
    double trial = nu_bar - step;
    int damp = 0;
    while (damp < 50) {
      if (trial > 0.0) {
        const double fp_trial = ev.first_derivative(trial);
        if (std::abs(fp_trial) <= std::abs(fp)) break;
      }
      step *= 0.5;
      trial = nu_bar - step;
      ++damp;
    }
    if (damp >= 50) break;
    nu_bar = trial;
    fp = ev.first_derivative(nu_bar);
    if (std::abs(step) < 1e-14 * nu_bar || fp == 0.0) converged = true;
  }

  res.nu_bar = nu_bar;
  res.nu = n_l * nu_bar;
  res.v = ev.value(nu_bar);
  res.v_prime = ev.first_derivative(nu_bar);
  res.v_double_prime = ev.second_derivative(nu_bar);
  res.newton_converged =
      converged && res.v_double_prime > 0.0 &&
      std::abs(res.v_prime) < 1e-8 * std::abs(res.v);
  if (!res.newton_converged && edge) {
    // No interior minimum: fall back to the grid minimizer.
    res.fallback_to_grid = true;
    res.nu_bar = grid[best_idx];
    res.nu = n_l * res.nu_bar;
    res.v = ev.value(res.nu_bar);
    res.v_prime = ev.first_derivative(res.nu_bar);
    res.v_double_prime = ev.second_derivative(res.nu_bar);
  }
  return res;
}

ShapeFitReport fit_shape_gcv(const ShapeFitProblem& problem) {
  ShapeFitReport rep;
  rep.gcv = gcv_select(problem);
  rep.coefficients.max_degree = problem.max_degree;
  rep.coefficients.s = fit_regularized(problem, rep.gcv.nu);

  // Undersmoothing check: fit K of K/n^alpha to the low-degree spectrum and
  // flag any degree whose fitted RMS exceeds the envelope by 10x.
  const int nmax = problem.max_degree;
  if (nmax >= 3) {
    double num = 0.0, den = 0.0;
    const int n_fit = std::min(5, nmax);
    for (int n = 1; n <= n_fit; ++n) {
      const double w = std::pow(double(n), -problem.alpha);
      num += rep.coefficients.degree_rms(n) * w;
      den += w * w;
    }
    const double K = (den > 0.0) ? num / den : 0.0;
    for (int n = 2; n <= nmax; ++n) {
      const double envelope = 10.0 * K * std::pow(double(n), -problem.alpha);
      if (K > 0.0 && rep.coefficients.degree_rms(n) > envelope)
        rep.undersmoothing_warning = true;
    }
  }
  return rep;
}

}  // namespace snac
