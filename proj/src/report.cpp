#include "snac/report.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>

#include "json.hpp"
#include "snac/errors.hpp"
#include "snac/io.hpp"
#include "snac/scenario.hpp"
#include "snac/shape_recon.hpp"
#include "snac/stats.hpp"
#include "snac/ukf.hpp"

namespace snac {

using nlohmann::json;

namespace {

struct Accum {
  double sq = 0.0;
  double var = 0.0;
  long n = 0;
  void add(double err, double variance) {
    sq += err * err;
    var += variance;
    ++n;
  }
  ParameterStats stats() const {
    ParameterStats s;
    if (n > 0) {
      s.rmse = std::sqrt(sq / n);
      s.mean_sigma = std::sqrt(var / n);
    }
    return s;
  }
};

}  // namespace

RunReport compute_report(const std::string& run_dir) {
  RunReport rep;
  const ScenarioConfig config =
      ScenarioConfig::from_json_file(run_dir + "/config.json");
  const int ns = config.n_spacecraft();
  rep.n_spacecraft = ns;

  FilterLayout lay;
  lay.n_spacecraft = ns;
  lay.gravity_degree = config.filter_gravity_degree;
  lay.n_landmarks = 0;

  const CsvTable hist = read_csv(run_dir + "/filter_history.csv");
  const CsvTable truth = read_csv(run_dir + "/truth_states.csv");
  rep.epochs = static_cast<int>(hist.rows.size());

  const double t_end =
      hist.rows.empty() ? 0.0 : hist.rows.back()[hist.column("epoch")];
  rep.final_orbit_start = std::max(0.0, t_end - config.orbit_period());

  // Index truth rows by (epoch, spacecraft).
  std::map<std::pair<double, int>, std::vector<double>> truth_by_key;
  if (!truth.rows.empty()) {
    const int ce = truth.column("epoch");
    const int cs = truth.column("spacecraft");
    for (const auto& row : truth.rows)
      truth_by_key[{row[ce], static_cast<int>(row[cs])}] = row;
  }

  const GravityField truth_field =
      load_gravity_field(run_dir + "/truth_gravity.txt");

  Accum acc_mu, acc_alpha, acc_delta, acc_omega, acc_pos, acc_vel, acc_cr,
      acc_br, acc_bd;
  const int n_deg = config.filter_gravity_degree - 1;
  std::vector<double> grav_err_sq(n_deg, 0.0), grav_var(n_deg, 0.0);
  long grav_count = 0;
  double nees_sum = 0.0;
  long nees_count = 0;

  const int mean0 = hist.rows.empty() ? -1 : hist.column("mean_0");
  const int var0 = hist.rows.empty() ? -1 : hist.column("var_0");

  for (const auto& row : hist.rows) {
    const double t = row[hist.column("epoch")];
    if (t < rep.final_orbit_start) continue;
    auto mean_at = [&](int i) { return row[mean0 + i]; };
    auto var_at = [&](int i) { return row[var0 + i]; };

    // Asteroid parameters against the truth model.
    acc_mu.add((mean_at(lay.idx_gravity()) - truth_field.mu) /
                   truth_field.mu * 100.0,
               var_at(lay.idx_gravity()) /
                   (truth_field.mu * truth_field.mu) * 1e4);
    // Spin axis/rate: truth from the config (the generator uses it
    // directly).
    acc_alpha.add((mean_at(0) - config.body.spin_alpha) * 180.0 / M_PI,
                  var_at(0) * std::pow(180.0 / M_PI, 2));
    acc_delta.add((mean_at(1) - config.body.spin_delta) * 180.0 / M_PI,
                  var_at(1) * std::pow(180.0 / M_PI, 2));
    const double omega_true = 2.0 * M_PI / config.body.spin_period;
    acc_omega.add((mean_at(2) - omega_true) / omega_true * 100.0,
                  var_at(2) / (omega_true * omega_true) * 1e4);

    // Gravity coefficients by degree.
    {
      int idx = lay.idx_gravity() + 1;
      std::vector<double> err_by_deg(n_deg, 0.0), var_by_deg(n_deg, 0.0);
      std::vector<int> count_by_deg(n_deg, 0);
      for (int deg = 2; deg <= config.filter_gravity_degree; ++deg)
        for (int m = 0; m <= deg; ++m, ++idx) {
          const double e = mean_at(idx) - truth_field.c(deg, m);
          err_by_deg[deg - 2] += e * e;
          var_by_deg[deg - 2] += var_at(idx);
          count_by_deg[deg - 2] += 1;
        }
      for (int deg = 2; deg <= config.filter_gravity_degree; ++deg)
        for (int m = 1; m <= deg; ++m, ++idx) {
          const double e = mean_at(idx) - truth_field.s(deg, m);
          err_by_deg[deg - 2] += e * e;
          var_by_deg[deg - 2] += var_at(idx);
          count_by_deg[deg - 2] += 1;
        }
      for (int d = 0; d < n_deg; ++d) {
        grav_err_sq[d] += err_by_deg[d] / count_by_deg[d];
        grav_var[d] += var_by_deg[d] / count_by_deg[d];
      }
      ++grav_count;
    }

    for (int i = 0; i < ns; ++i) {
      const auto it = truth_by_key.find({t, i});
      if (it == truth_by_key.end()) continue;
      const auto& trow = it->second;
      const int tx = truth.column("x");
      const int tv = truth.column("vx");
      const int b = lay.idx_spacecraft(i);
      for (int k = 0; k < 3; ++k) {
        acc_pos.add(mean_at(b + k) - trow[tx + k], var_at(b + k));
        acc_vel.add((mean_at(b + 3 + k) - trow[tv + k]) * 1e3,
                    var_at(b + 3 + k) * 1e6);
      }
      acc_cr.add((mean_at(lay.idx_cr(i)) - config.srp_coeff) /
                     config.srp_coeff * 100.0,
                 var_at(lay.idx_cr(i)) /
                     (config.srp_coeff * config.srp_coeff) * 1e4);
      if (i > 0) {
        const auto it0 = truth_by_key.find({t, 0});
        if (it0 == truth_by_key.end()) continue;
        const int co = truth.column("clock_offset");
        const int cd = truth.column("clock_drift");
        const double db_true =
            kSpeedOfLight * (trow[co] - it0->second[co]);
        const double bd_true =
            kSpeedOfLight * (trow[cd] - it0->second[cd]);
        const int cb = lay.idx_clock_deputy(i);
        acc_br.add(mean_at(cb) - db_true, var_at(cb));
        acc_bd.add((mean_at(cb + 1) - bd_true) * 1e3, var_at(cb + 1) * 1e6);
      }
    }

    nees_sum += row[hist.column("nees_posvel")];
    ++nees_count;
  }

  rep.parameters["mu_percent"] = acc_mu.stats();
  rep.parameters["spin_ra_deg"] = acc_alpha.stats();
  rep.parameters["spin_dec_deg"] = acc_delta.stats();
  rep.parameters["spin_rate_percent"] = acc_omega.stats();
  rep.parameters["position_m"] = acc_pos.stats();
  rep.parameters["velocity_mmps"] = acc_vel.stats();
  rep.parameters["srp_coeff_percent"] = acc_cr.stats();
  rep.parameters["range_bias_m"] = acc_br.stats();
  rep.parameters["doppler_bias_mmps"] = acc_bd.stats();

  for (int d = 0; d < n_deg; ++d) {
    rep.gravity_truth_rms.push_back(truth_field.degree_rms(d + 2));
    if (grav_count > 0) {
      rep.gravity_error_rms.push_back(std::sqrt(grav_err_sq[d] / grav_count));
      rep.gravity_sigma_rms.push_back(std::sqrt(grav_var[d] / grav_count));
    }
  }

  if (nees_count > 0) {
    rep.nees_mean = nees_sum / nees_count;
    const double dof = 6.0 * ns;
    rep.nees_lower = chi2_quantile(0.025, dof) / dof;
    rep.nees_upper = chi2_quantile(0.975, dof) / dof;
    const double normalized = rep.nees_mean / dof;
    rep.nees_within_bounds =
        normalized >= rep.nees_lower && normalized <= rep.nees_upper;
  }

  // Correlation quality over the whole run.
  {
    const CsvTable corr = read_csv(run_dir + "/correlation_stats.csv");
    long sc_pairs = 0, sc_tp = 0, f_total = 0, f_tp = 0;
    for (const auto& row : corr.rows) {
      sc_pairs += static_cast<long>(row[corr.column("sc2sc_pairs")]);
      sc_tp += static_cast<long>(row[corr.column("sc2sc_true_positive")]);
      f_total += static_cast<long>(row[corr.column("f2sc_assignments")]);
      f_tp += static_cast<long>(row[corr.column("f2sc_true_positive")]);
    }
    rep.sc2sc_pairs = sc_pairs;
    rep.f2sc_assignments = f_total;
    rep.sc2sc_true_positive_rate =
        sc_pairs > 0 ? double(sc_tp) / sc_pairs : 0.0;
    rep.f2sc_true_positive_rate = f_total > 0 ? double(f_tp) / f_total : 0.0;
  }

  // Stereo error statistics (CF frame of the first observer).
  {
    const CsvTable st = read_csv(run_dir + "/stereo_init.csv");
    double sum[3] = {0, 0, 0}, sq[3] = {0, 0, 0};
    for (const auto& row : st.rows) {
      for (int k = 0; k < 3; ++k) {
        const double e = row[st.column("err_cf_x") + k];
        sum[k] += e;
        sq[k] += e * e;
      }
    }
    rep.stereo_count = static_cast<int>(st.rows.size());
    for (int k = 0; k < 3 && rep.stereo_count > 0; ++k) {
      rep.stereo_mean[k] = sum[k] / rep.stereo_count;
      rep.stereo_sigma[k] = std::sqrt(
          std::max(0.0, sq[k] / rep.stereo_count -
                            rep.stereo_mean[k] * rep.stereo_mean[k]));
    }
  }

  // Shape reconstruction error against the truth radial function.
  if (std::filesystem::exists(run_dir + "/shape_fit.txt")) {
    const ShapeFileContents fit =
        load_shape_coefficients(run_dir + "/shape_fit.txt");
    const ShapeFileContents truth_shape =
        load_shape_coefficients(run_dir + "/truth_shape.txt");
    double sq = 0.0;
    int count = 0;
    for (int i = 0; i < 64; ++i)
      for (int j = 1; j < 32; ++j) {
        const double lon = 2.0 * M_PI * i / 64;
        const double lat = M_PI * j / 32 - M_PI / 2;
        const double r_fit = evaluate_shape(fit.coefficients, lon, lat);
        const double r_true =
            evaluate_shape(truth_shape.coefficients, lon, lat);
        sq += (r_fit - r_true) * (r_fit - r_true);
        ++count;
      }
    rep.shape_rmse = std::sqrt(sq / count);
    rep.shape_rmse_fraction = rep.shape_rmse / config.body.avg_radius;
  }

  {
    const CsvTable db = read_csv(run_dir + "/landmarks.csv");
    rep.database_landmarks = static_cast<int>(db.rows.size());
  }
  return rep;
}

std::string RunReport::to_json_text() const {
  json j;
  j["epochs"] = epochs;
  j["n_spacecraft"] = n_spacecraft;
  j["final_orbit_start_s"] = final_orbit_start;
  for (const auto& [name, stats] : parameters)
    j["parameters"][name] = {{"rmse", stats.rmse},
                             {"mean_sigma", stats.mean_sigma}};
  j["gravity"]["truth_rms"] = gravity_truth_rms;
  j["gravity"]["error_rms"] = gravity_error_rms;
  j["gravity"]["sigma_rms"] = gravity_sigma_rms;
  j["nees"] = {{"mean", nees_mean},
               {"normalized_lower", nees_lower},
               {"normalized_upper", nees_upper},
               {"within_bounds", nees_within_bounds}};
  j["correlation"] = {{"sc2sc_true_positive_rate", sc2sc_true_positive_rate},
                      {"f2sc_true_positive_rate", f2sc_true_positive_rate},
                      {"sc2sc_pairs", sc2sc_pairs},
                      {"f2sc_assignments", f2sc_assignments}};
  j["stereo"] = {{"count", stereo_count},
                 {"mean_cf", {stereo_mean[0], stereo_mean[1],
                              stereo_mean[2]}},
                 {"sigma_cf", {stereo_sigma[0], stereo_sigma[1],
                               stereo_sigma[2]}}};
  j["shape"] = {{"rmse_m", shape_rmse},
                {"rmse_fraction_of_radius", shape_rmse_fraction}};
  j["database_landmarks"] = database_landmarks;
  return j.dump(2) + "\n";
}

RunReport write_report(const std::string& run_dir) {
  const RunReport rep = compute_report(run_dir);
  std::ofstream out(run_dir + "/report.json");
  out << rep.to_json_text();
  return rep;
}

void emit_plots(const std::string& run_dir) {
  const ScenarioConfig config =
      ScenarioConfig::from_json_file(run_dir + "/config.json");
  const int ns = config.n_spacecraft();
  FilterLayout lay;
  lay.n_spacecraft = ns;
  lay.gravity_degree = config.filter_gravity_degree;
  std::filesystem::create_directories(run_dir + "/plots");

  const CsvTable hist = read_csv(run_dir + "/filter_history.csv");
  const CsvTable truth = read_csv(run_dir + "/truth_states.csv");
  std::map<std::pair<double, int>, std::vector<double>> truth_by_key;
  if (!truth.rows.empty()) {
    const int ce = truth.column("epoch");
    const int cs = truth.column("spacecraft");
    for (const auto& row : truth.rows)
      truth_by_key[{row[ce], static_cast<int>(row[cs])}] = row;
  }
  const GravityField truth_field =
      load_gravity_field(run_dir + "/truth_gravity.txt");

  // Error-against-time with 3-sigma envelopes for representative states.
  {
    CsvWriter w(run_dir + "/plots/error_vs_time.csv",
                {"epoch", "mu_err", "mu_3sigma", "c20_err", "c20_3sigma",
                 "spin_rate_err", "spin_rate_3sigma", "chief_x_err",
                 "chief_x_3sigma", "chief_vx_err", "chief_vx_3sigma",
                 "deputy1_bias_err", "deputy1_bias_3sigma"});
    if (!hist.rows.empty()) {
      const int mean0 = hist.column("mean_0");
      const int var0 = hist.column("var_0");
      const double omega_true = 2.0 * M_PI / config.body.spin_period;
      for (const auto& row : hist.rows) {
        const double t = row[hist.column("epoch")];
        auto mean_at = [&](int i) { return row[mean0 + i]; };
        auto sig3 = [&](int i) { return 3.0 * std::sqrt(row[var0 + i]); };
        const auto chief = truth_by_key.find({t, 0});
        const auto dep1 = truth_by_key.find({t, 1});
        if (chief == truth_by_key.end()) continue;
        double bias_err = 0.0, bias_sig = 0.0;
        if (ns > 1 && dep1 != truth_by_key.end()) {
          const int co = truth.column("clock_offset");
          const double db_true = kSpeedOfLight * (dep1->second[co] -
                                                  chief->second[co]);
          bias_err = mean_at(lay.idx_clock_deputy(1)) - db_true;
          bias_sig = sig3(lay.idx_clock_deputy(1));
        }
        w.row({t, mean_at(lay.idx_gravity()) - truth_field.mu,
               sig3(lay.idx_gravity()),
               mean_at(lay.idx_gravity() + 1) - truth_field.c(2, 0),
               sig3(lay.idx_gravity() + 1), mean_at(2) - omega_true,
               sig3(2),
               mean_at(lay.idx_spacecraft(0)) -
                   chief->second[truth.column("x")],
               sig3(lay.idx_spacecraft(0)),
               mean_at(lay.idx_spacecraft(0) + 3) -
                   chief->second[truth.column("vx")],
               sig3(lay.idx_spacecraft(0) + 3), bias_err, bias_sig});
      }
    }
  }

  // Per-degree gravity spectrum comparison (final epoch).
  {
    CsvWriter w(run_dir + "/plots/gravity_rms_per_degree.csv",
                {"degree", "truth_rms", "apriori_sigma", "error_rms",
                 "sigma_rms"});
    if (!hist.rows.empty()) {
      const auto& row = hist.rows.back();
      const int mean0 = hist.column("mean_0");
      const int var0 = hist.column("var_0");
      for (int deg = 2; deg <= config.filter_gravity_degree; ++deg) {
        double err_sq = 0.0, var_sum = 0.0;
        int count = 0;
        int idx = lay.idx_gravity() + 1;
        for (int d2 = 2; d2 <= config.filter_gravity_degree; ++d2)
          for (int m = 0; m <= d2; ++m, ++idx)
            if (d2 == deg) {
              const double e = row[mean0 + idx] - truth_field.c(d2, m);
              err_sq += e * e;
              var_sum += row[var0 + idx];
              ++count;
            }
        for (int d2 = 2; d2 <= config.filter_gravity_degree; ++d2)
          for (int m = 1; m <= d2; ++m, ++idx)
            if (d2 == deg) {
              const double e = row[mean0 + idx] - truth_field.s(d2, m);
              err_sq += e * e;
              var_sum += row[var0 + idx];
              ++count;
            }
        w.row({double(deg), truth_field.degree_rms(deg),
               config.apriori.gravity_coeff, std::sqrt(err_sq / count),
               std::sqrt(var_sum / count)});
      }
    }
  }

  // Shape RMSE against degree for the three regularization choices.
  {
    CsvWriter w(run_dir + "/plots/shape_rmse_vs_degree.csv",
                {"degree", "rmse_unregularized", "rmse_identity_tikhonov",
                 "rmse_power_law"});
    const CsvTable db = read_csv(run_dir + "/landmarks.csv");
    if (!db.rows.empty()) {
      std::vector<Vec3> pts;
      std::vector<Mat3> covs;
      for (const auto& row : db.rows) {
        pts.emplace_back(row[db.column("x")], row[db.column("y")],
                         row[db.column("z")]);
        Mat3 cov;
        cov << row[db.column("cov_xx")], row[db.column("cov_xy")],
            row[db.column("cov_xz")], row[db.column("cov_xy")],
            row[db.column("cov_yy")], row[db.column("cov_yz")],
            row[db.column("cov_xz")], row[db.column("cov_yz")],
            row[db.column("cov_zz")];
        covs.push_back(cov);
      }
      const ShapeFileContents truth_shape =
          load_shape_coefficients(run_dir + "/truth_shape.txt");
      std::vector<Vec3> reference;
      for (int i = 0; i < 48; ++i)
        for (int j = 1; j < 24; ++j) {
          const double lon = 2.0 * M_PI * i / 48;
          const double lat = M_PI * j / 24 - M_PI / 2;
          const double r =
              evaluate_shape(truth_shape.coefficients, lon, lat);
          reference.push_back(
              r * Vec3(std::cos(lat) * std::cos(lon),
                       std::cos(lat) * std::sin(lon), std::sin(lat)));
        }
      for (int deg = 2; deg <= config.shape_fit_degree + 4; deg += 2) {
        double unreg = std::numeric_limits<double>::quiet_NaN();
        double ident = std::numeric_limits<double>::quiet_NaN();
        double power = std::numeric_limits<double>::quiet_NaN();
        try {
          const ShapeDesign d = design_matrix(pts, deg);
          unreg = shape_rmse({deg, fit_unregularized(d.A, d.r)}, reference);
        } catch (const Error&) {
        }
        try {
          ShapeFitProblem p =
              make_fit_problem(pts, covs, deg, config.shape_fit_alpha);
          power = shape_rmse({deg, fit_regularized(p, gcv_select(p).nu)},
                             reference);
          ShapeFitProblem pi = p;
          pi.alpha = 0.0;  // deg^0: identity Tikhonov weights
          ident = shape_rmse({deg, fit_regularized(pi, gcv_select(pi).nu)},
                             reference);
        } catch (const Error&) {
        }
        w.row({double(deg), unreg, ident, power});
      }
    }
  }
}

}  // namespace snac
