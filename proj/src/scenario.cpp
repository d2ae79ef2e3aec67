#include "snac/scenario.hpp"

#include <algorithm>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>

#include "json.hpp"
#include "snac/errors.hpp"
#include "snac/io.hpp"
#include "snac/shape_recon.hpp"
#include "snac/stats.hpp"
#include "snac/stereovision.hpp"

namespace snac {

using nlohmann::json;

namespace {
constexpr double kDeg = M_PI / 180.0;
}

void ScenarioConfig::validate() const {
  if (cadence <= 0.0) throw ConfigError("cadence must be positive");
  if (duration_orbits < 0.0) throw ConfigError("duration must be >= 0");
  if (n_spacecraft() < 2)
    throw ConfigError("stereovision needs at least two spacecraft");
  if (chief_mean.a <= 0.0 || chief_mean.e < 0.0 || chief_mean.e >= 1.0)
    throw ConfigError("chief elements out of range");
  if (body.mu <= 0.0 || body.avg_radius <= 0.0)
    throw ConfigError("body parameters must be positive");
  if (chief_mean.a < body.ref_radius)
    throw ConfigError("orbit radius inside the Brillouin sphere");
  if (feature_count <= 0) throw ConfigError("feature count must be positive");
  if (camera_focal <= 0.0 || camera_width <= 0 || camera_height <= 0)
    throw ConfigError("camera parameters must be positive");
  if (detection.pixel_sigma < 0.0 || rf_noise.range_sigma < 0.0 ||
      rf_noise.doppler_sigma < 0.0)
    throw ConfigError("noise sigmas must be non-negative");
  if (apriori.position <= 0.0 || apriori.velocity <= 0.0 ||
      apriori.gravity_coeff <= 0.0)
    throw ConfigError("a-priori sigmas must be positive");
  if (filter_gravity_degree < 2 ||
      filter_gravity_degree > body.gravity_degree)
    throw ConfigError("filter gravity degree out of range");
  if (correlation.retire_steps < 1) throw ConfigError("n_r must be >= 1");
  if (ukf.underweight_factor < 1.0)
    throw ConfigError("underweight factor must be >= 1");
  if (max_new_landmarks < 0)
    throw ConfigError("max new landmarks must be >= 0");
  if (shape_fit_degree < 0) throw ConfigError("shape degree must be >= 0");
}

namespace {

json config_to_json(const ScenarioConfig& c) {
  json j;
  j["name"] = c.name;
  j["seed"] = c.seed;
  j["duration_orbits"] = c.duration_orbits;
  j["cadence_s"] = c.cadence;
  j["body"] = {{"mu_m3s2", c.body.mu},
               {"ref_radius_km", c.body.ref_radius / 1e3},
               {"avg_radius_km", c.body.avg_radius / 1e3},
               {"shape_degree", c.body.shape_degree},
               {"gravity_degree", c.body.gravity_degree},
               {"shape_alpha", c.body.shape_alpha},
               {"shape_K_fraction", c.body.shape_K_fraction},
               {"gravity_sigma2", c.body.gravity_sigma2},
               {"gravity_alpha", c.body.gravity_alpha},
               {"spin_ra_deg", c.body.spin_alpha / kDeg},
               {"spin_dec_deg", c.body.spin_delta / kDeg},
               {"spin_period_h", c.body.spin_period / 3600.0},
               {"prime_meridian_deg", c.body.prime_meridian / kDeg},
               {"gravity_file", c.gravity_file}};
  j["sun"] = {{"distance_au", c.sun_distance / kAstronomicalUnit},
              {"phase_deg", c.sun_phase / kDeg}};
  j["swarm"]["chief"] = {{"a_km", c.chief_mean.a / 1e3},
                         {"e", c.chief_mean.e},
                         {"i_deg", c.chief_mean.i / kDeg},
                         {"raan_deg", c.chief_mean.raan / kDeg},
                         {"argp_deg", c.chief_mean.argp / kDeg},
                         {"mean_anomaly_deg", c.chief_mean.mean_anomaly / kDeg}};
  j["swarm"]["deputies"] = json::array();
  for (const auto& d : c.deputies)
    j["swarm"]["deputies"].push_back(
        {{"ada_km", d.roe.da * c.chief_mean.a / 1e3},
         {"adlambda_km", d.roe.dlambda * c.chief_mean.a / 1e3},
         {"adex_km", d.roe.dex * c.chief_mean.a / 1e3},
         {"adey_km", d.roe.dey * c.chief_mean.a / 1e3},
         {"adix_km", d.roe.dix * c.chief_mean.a / 1e3},
         {"adiy_km", d.roe.diy * c.chief_mean.a / 1e3}});
  j["swarm"]["srp_coeff"] = c.srp_coeff;
  j["swarm"]["area_over_mass_m2kg"] = c.area_over_mass;
  j["swarm"]["clock_q1_s"] = c.clock_q1;
  j["swarm"]["clock_q2_inv_s"] = c.clock_q2;
  j["swarm"]["mothership_clock_perfect"] = c.mothership_clock_perfect;
  j["camera"] = {{"focal_px", c.camera_focal},
                 {"width", c.camera_width},
                 {"height", c.camera_height}};
  j["features"] = {{"count", c.feature_count},
                   {"detectability", c.feature_detectability},
                   {"canonical_sigma", c.canonical_sigma},
                   {"descriptor_sigma", c.detection.descriptor_sigma},
                   {"limb_angle_deg", c.detection.limb_angle / kDeg},
                   {"terminator_cos", c.detection.terminator_cos}};
  j["noise"] = {{"pixel_sigma_px", c.detection.pixel_sigma},
                {"range_sigma_m", c.rf_noise.range_sigma},
                {"doppler_sigma_mps", c.rf_noise.doppler_sigma},
                {"attitude_z_arcsec",
                 c.attitude_noise.sigma_z / kDeg * 3600.0},
                {"attitude_xy_arcsec",
                 c.attitude_noise.sigma_xy / kDeg * 3600.0}};
  j["correlation"] = {{"p_m", c.correlation.p_m},
                      {"descriptor_gate", c.correlation.descriptor_gate},
                      {"w_2d", c.correlation.w_2d},
                      {"w_u", c.correlation.w_u},
                      {"w_v", c.correlation.w_v},
                      {"retire_steps", c.correlation.retire_steps},
                      {"dedupe_distance_m", c.correlation.dedupe_distance},
                      {"lowe_ratio", c.correlation.lowe_ratio},
                      {"ransac_iterations", c.correlation.ransac_iterations},
                      {"ransac_threshold_px",
                       c.correlation.ransac_threshold_px},
                      {"ransac_min_inlier_fraction",
                       c.correlation.ransac_min_inlier_fraction}};
  j["filter"] = {{"gravity_degree", c.filter_gravity_degree},
                 {"ukf_alpha", c.ukf.alpha},
                 {"ukf_beta", c.ukf.beta},
                 {"ukf_kappa", c.ukf.kappa},
                 {"underweight_factor", c.ukf.underweight_factor},
                 {"stereo_inflation", c.ukf.stereo_inflation},
                 {"substeps", c.ukf.substeps},
                 {"innovation_gate", c.ukf.innovation_gate_enabled},
                 {"max_new_landmarks_per_epoch", c.max_new_landmarks},
                 {"asnc_enabled", c.asnc.enabled},
                 {"asnc_window", c.asnc.window}};
  j["apriori"] = {{"position_m", c.apriori.position},
                  {"velocity_mps", c.apriori.velocity},
                  {"srp_frac", c.apriori.srp_frac},
                  {"range_bias_m", c.apriori.range_bias},
                  {"doppler_bias_mps", c.apriori.doppler_bias},
                  {"mu_frac", c.apriori.mu_frac},
                  {"spin_axis_deg", c.apriori.spin_axis / kDeg},
                  {"spin_rate_frac", c.apriori.spin_rate_frac},
                  {"gravity_coeff", c.apriori.gravity_coeff}};
  j["truth"] = {{"tolerance", c.truth_tolerance}};
  j["shape_fit"] = {{"degree", c.shape_fit_degree},
                    {"alpha", c.shape_fit_alpha}};
  j["evaluation"] = {{"tp_distance_m", c.tp_distance}};
  return j;
}

template <typename T>
void maybe(const json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

ScenarioConfig config_from_json(const json& j) {
  ScenarioConfig c = desk_scenario();
  maybe(j, "name", c.name);
  maybe(j, "seed", c.seed);
  maybe(j, "duration_orbits", c.duration_orbits);
  maybe(j, "cadence_s", c.cadence);
  if (j.contains("body")) {
    const json& b = j["body"];
    maybe(b, "mu_m3s2", c.body.mu);
    if (b.contains("ref_radius_km"))
      c.body.ref_radius = b["ref_radius_km"].get<double>() * 1e3;
    if (b.contains("avg_radius_km"))
      c.body.avg_radius = b["avg_radius_km"].get<double>() * 1e3;
    maybe(b, "shape_degree", c.body.shape_degree);
    maybe(b, "gravity_degree", c.body.gravity_degree);
    maybe(b, "shape_alpha", c.body.shape_alpha);
    maybe(b, "shape_K_fraction", c.body.shape_K_fraction);
    maybe(b, "gravity_sigma2", c.body.gravity_sigma2);
    maybe(b, "gravity_alpha", c.body.gravity_alpha);
    if (b.contains("spin_ra_deg"))
      c.body.spin_alpha = b["spin_ra_deg"].get<double>() * kDeg;
    if (b.contains("spin_dec_deg"))
      c.body.spin_delta = b["spin_dec_deg"].get<double>() * kDeg;
    if (b.contains("spin_period_h"))
      c.body.spin_period = b["spin_period_h"].get<double>() * 3600.0;
    if (b.contains("prime_meridian_deg"))
      c.body.prime_meridian = b["prime_meridian_deg"].get<double>() * kDeg;
    maybe(b, "gravity_file", c.gravity_file);
  }
  if (j.contains("sun")) {
    if (j["sun"].contains("distance_au"))
      c.sun_distance = j["sun"]["distance_au"].get<double>() *
                       kAstronomicalUnit;
    if (j["sun"].contains("phase_deg"))
      c.sun_phase = j["sun"]["phase_deg"].get<double>() * kDeg;
  }
  if (j.contains("swarm")) {
    const json& s = j["swarm"];
    if (s.contains("chief")) {
      const json& ch = s["chief"];
      if (ch.contains("a_km")) c.chief_mean.a = ch["a_km"].get<double>() * 1e3;
      maybe(ch, "e", c.chief_mean.e);
      if (ch.contains("i_deg"))
        c.chief_mean.i = ch["i_deg"].get<double>() * kDeg;
      if (ch.contains("raan_deg"))
        c.chief_mean.raan = ch["raan_deg"].get<double>() * kDeg;
      if (ch.contains("argp_deg"))
        c.chief_mean.argp = ch["argp_deg"].get<double>() * kDeg;
      if (ch.contains("mean_anomaly_deg"))
        c.chief_mean.mean_anomaly =
            ch["mean_anomaly_deg"].get<double>() * kDeg;
    }
    if (s.contains("deputies")) {
      c.deputies.clear();
      for (const json& d : s["deputies"]) {
        DeputyConfig dep;
        auto roe_km = [&](const char* key, double& out) {
          if (d.contains(key))
            out = d[key].get<double>() * 1e3 / c.chief_mean.a;
        };
        roe_km("ada_km", dep.roe.da);
        roe_km("adlambda_km", dep.roe.dlambda);
        roe_km("adex_km", dep.roe.dex);
        roe_km("adey_km", dep.roe.dey);
        roe_km("adix_km", dep.roe.dix);
        roe_km("adiy_km", dep.roe.diy);
        c.deputies.push_back(dep);
      }
    }
    maybe(s, "srp_coeff", c.srp_coeff);
    maybe(s, "area_over_mass_m2kg", c.area_over_mass);
    maybe(s, "clock_q1_s", c.clock_q1);
    maybe(s, "clock_q2_inv_s", c.clock_q2);
    maybe(s, "mothership_clock_perfect", c.mothership_clock_perfect);
  }
  if (j.contains("camera")) {
    maybe(j["camera"], "focal_px", c.camera_focal);
    maybe(j["camera"], "width", c.camera_width);
    maybe(j["camera"], "height", c.camera_height);
  }
  if (j.contains("features")) {
    const json& f = j["features"];
    maybe(f, "count", c.feature_count);
    maybe(f, "detectability", c.feature_detectability);
    maybe(f, "canonical_sigma", c.canonical_sigma);
    maybe(f, "descriptor_sigma", c.detection.descriptor_sigma);
    if (f.contains("limb_angle_deg"))
      c.detection.limb_angle = f["limb_angle_deg"].get<double>() * kDeg;
    maybe(f, "terminator_cos", c.detection.terminator_cos);
  }
  if (j.contains("noise")) {
    const json& nz = j["noise"];
    maybe(nz, "pixel_sigma_px", c.detection.pixel_sigma);
    maybe(nz, "range_sigma_m", c.rf_noise.range_sigma);
    maybe(nz, "doppler_sigma_mps", c.rf_noise.doppler_sigma);
    if (nz.contains("attitude_z_arcsec"))
      c.attitude_noise.sigma_z =
          nz["attitude_z_arcsec"].get<double>() / 3600.0 * kDeg;
    if (nz.contains("attitude_xy_arcsec"))
      c.attitude_noise.sigma_xy =
          nz["attitude_xy_arcsec"].get<double>() / 3600.0 * kDeg;
  }
  if (j.contains("correlation")) {
    const json& co = j["correlation"];
    maybe(co, "p_m", c.correlation.p_m);
    maybe(co, "descriptor_gate", c.correlation.descriptor_gate);
    maybe(co, "w_2d", c.correlation.w_2d);
    maybe(co, "w_u", c.correlation.w_u);
    maybe(co, "w_v", c.correlation.w_v);
    maybe(co, "retire_steps", c.correlation.retire_steps);
    maybe(co, "dedupe_distance_m", c.correlation.dedupe_distance);
    maybe(co, "lowe_ratio", c.correlation.lowe_ratio);
    maybe(co, "ransac_iterations", c.correlation.ransac_iterations);
    maybe(co, "ransac_threshold_px", c.correlation.ransac_threshold_px);
    maybe(co, "ransac_min_inlier_fraction",
          c.correlation.ransac_min_inlier_fraction);
  }
  if (j.contains("filter")) {
    const json& f = j["filter"];
    maybe(f, "gravity_degree", c.filter_gravity_degree);
    maybe(f, "ukf_alpha", c.ukf.alpha);
    maybe(f, "ukf_beta", c.ukf.beta);
    maybe(f, "ukf_kappa", c.ukf.kappa);
    maybe(f, "underweight_factor", c.ukf.underweight_factor);
    maybe(f, "stereo_inflation", c.ukf.stereo_inflation);
    maybe(f, "substeps", c.ukf.substeps);
    maybe(f, "innovation_gate", c.ukf.innovation_gate_enabled);
    maybe(f, "max_new_landmarks_per_epoch", c.max_new_landmarks);
    maybe(f, "asnc_enabled", c.asnc.enabled);
    maybe(f, "asnc_window", c.asnc.window);
  }
  if (j.contains("apriori")) {
    const json& a = j["apriori"];
    maybe(a, "position_m", c.apriori.position);
    maybe(a, "velocity_mps", c.apriori.velocity);
    maybe(a, "srp_frac", c.apriori.srp_frac);
    maybe(a, "range_bias_m", c.apriori.range_bias);
    maybe(a, "doppler_bias_mps", c.apriori.doppler_bias);
    maybe(a, "mu_frac", c.apriori.mu_frac);
    if (a.contains("spin_axis_deg"))
      c.apriori.spin_axis = a["spin_axis_deg"].get<double>() * kDeg;
    maybe(a, "spin_rate_frac", c.apriori.spin_rate_frac);
    maybe(a, "gravity_coeff", c.apriori.gravity_coeff);
  }
  if (j.contains("truth")) maybe(j["truth"], "tolerance", c.truth_tolerance);
  if (j.contains("shape_fit")) {
    maybe(j["shape_fit"], "degree", c.shape_fit_degree);
    maybe(j["shape_fit"], "alpha", c.shape_fit_alpha);
  }
  if (j.contains("evaluation"))
    maybe(j["evaluation"], "tp_distance_m", c.tp_distance);
  return c;
}

}  // namespace

ScenarioConfig desk_scenario() {
  ScenarioConfig c;
  c.name = "desk";
  c.seed = 20240801;
  c.duration_orbits = 2.0;
  c.body.shape_degree = 12;
  c.body.gravity_degree = 8;
  c.filter_gravity_degree = 4;
  c.feature_count = 2000;
  c.deputies.resize(2);
  c.deputies[0].roe.dlambda = 10e3 / c.chief_mean.a;
  c.deputies[1].roe.dlambda = 20e3 / c.chief_mean.a;
  return c;
}

ScenarioConfig ScenarioConfig::from_json_text(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const std::exception& e) {
    throw ConfigError(std::string("config parse failure: ") + e.what());
  }
  ScenarioConfig c = config_from_json(j);
  c.validate();
  return c;
}

ScenarioConfig ScenarioConfig::from_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path);
  std::string text((std::istreambuf_iterator<char>(in)),
                   std::istreambuf_iterator<char>());
  return from_json_text(text);
}

std::string ScenarioConfig::to_json_text() const {
  return config_to_json(*this).dump(2) + "\n";
}

FilterEstimate init_from_ground_phase(
    const ScenarioConfig& config, const BodyModel& body,
    const std::vector<SpacecraftState>& truth_states,
    const std::vector<ClockState>& truth_clocks, Rng& rng) {
  FilterEstimate est;
  est.layout.n_spacecraft = config.n_spacecraft();
  est.layout.gravity_degree = config.filter_gravity_degree;
  est.layout.n_landmarks = 0;
  const FilterLayout& lay = est.layout;
  const int n = lay.size();
  est.mean = VecX::Zero(n);
  est.epoch = 0.0;

  VecX sigma(n);
  // Rotation parameters.
  est.mean[0] = body.rotation.alpha;
  est.mean[1] = body.rotation.delta;
  est.mean[2] = body.rotation.omega;
  sigma[0] = config.apriori.spin_axis;
  sigma[1] = config.apriori.spin_axis;
  sigma[2] = config.apriori.spin_rate_frac * body.rotation.omega;
  // Gravity: mu plus truth coefficients through the filter degree.
  est.mean[lay.idx_gravity()] = body.gravity.mu;
  sigma[lay.idx_gravity()] = config.apriori.mu_frac * body.gravity.mu;
  {
    int idx = lay.idx_gravity() + 1;
    for (int deg = 2; deg <= lay.gravity_degree; ++deg)
      for (int m = 0; m <= deg; ++m) est.mean[idx++] = body.gravity.c(deg, m);
    for (int deg = 2; deg <= lay.gravity_degree; ++deg)
      for (int m = 1; m <= deg; ++m) est.mean[idx++] = body.gravity.s(deg, m);
    for (int i = lay.idx_gravity() + 1; i < lay.idx_gravity() + lay.gravity_size();
         ++i)
      sigma[i] = config.apriori.gravity_coeff;
  }
  for (int i = 0; i < lay.n_spacecraft; ++i) {
    const int b = lay.idx_spacecraft(i);
    est.mean.segment<3>(b) = truth_states[i].position;
    est.mean.segment<3>(b + 3) = truth_states[i].velocity;
    est.mean[lay.idx_cr(i)] = truth_states[i].srp_coeff;
    sigma.segment<3>(b).setConstant(config.apriori.position);
    sigma.segment<3>(b + 3).setConstant(config.apriori.velocity);
    sigma[lay.idx_cr(i)] = config.apriori.srp_frac * truth_states[i].srp_coeff;
  }
  for (int i = 1; i < lay.n_spacecraft; ++i) {
    const int b = lay.idx_clock_deputy(i);
    est.mean[b] =
        kSpeedOfLight * (truth_clocks[i].offset - truth_clocks[0].offset);
    est.mean[b + 1] =
        kSpeedOfLight * (truth_clocks[i].drift - truth_clocks[0].drift);
    sigma[b] = config.apriori.range_bias;
    sigma[b + 1] = config.apriori.doppler_bias;
  }

  // Sample the initial error from the a-priori covariance.
  for (int i = 0; i < n; ++i) est.mean[i] += rng.normal(0.0, sigma[i]);
  est.covariance = sigma.cwiseProduct(sigma).asDiagonal();
  return est;
}

namespace {

struct Stopwatch {
  std::chrono::steady_clock::time_point t0 =
      std::chrono::steady_clock::now();
  double lap() {
    const auto t1 = std::chrono::steady_clock::now();
    const double dt = std::chrono::duration<double>(t1 - t0).count();
    t0 = t1;
    return dt;
  }
};

struct TimingAccumulator {
  std::map<std::string, std::pair<double, double>> sum_worst;
  void add(const std::string& key, double seconds) {
    auto& entry = sum_worst[key];
    entry.first += seconds;
    entry.second = std::max(entry.second, seconds);
  }
};

/// Linear-plus-gravity extrapolation of a truth state by a tiny clock
/// offset (microseconds); exact to far below measurement noise.
SpacecraftState nudge_state(const SpacecraftState& s, const Vec3& accel,
                            double dt) {
  SpacecraftState out = s;
  out.position += dt * s.velocity + 0.5 * dt * dt * accel;
  out.velocity += dt * accel;
  return out;
}

struct EvalAnchor {
  Vec3 truth_position = Vec3::Zero();  // mean truth position of the
                                       // features behind a landmark
  int count = 0;
};

}  // namespace

RunSummary run_scenario(const ScenarioConfig& config,
                        const std::string& out_dir) {
  config.validate();
  namespace fs = std::filesystem;
  fs::create_directories(out_dir);
  fs::create_directories(out_dir + "/plots");

  RunSummary summary;
  summary.out_dir = out_dir;

  {
    std::ofstream cfg(out_dir + "/config.json");
    cfg << config.to_json_text();
  }

  // --- World construction (deterministic in the seed) -------------------
  Rng master(config.seed);
  BodyModel body = generate_body(config.seed, config.body);
  if (!config.gravity_file.empty())
    body.gravity = load_gravity_field(config.gravity_file);
  const auto features =
      seed_features(body.shape, config.feature_count, config.seed + 1,
                    config.canonical_sigma, config.feature_detectability);
  save_gravity_field(body.gravity, out_dir + "/truth_gravity.txt");
  save_shape_coefficients(body.shape.harmonics, config.body.shape_alpha, 0.0,
                          out_dir + "/truth_shape.txt");

  const int ns = config.n_spacecraft();
  DynamicsModel truth_dynamics;
  truth_dynamics.gravity = body.gravity;
  truth_dynamics.rotation = body.rotation;
  truth_dynamics.sun.distance = config.sun_distance;
  truth_dynamics.sun.phase0 = config.sun_phase;

  // Initial truth states: mean elements through the J2-only osculating map.
  std::vector<SpacecraftState> truth(ns);
  {
    const double j2 = body.gravity.j2();
    std::vector<OrbitalElements> mean(ns, config.chief_mean);
    for (int d = 0; d < ns - 1; ++d)
      mean[d + 1] = roe_to_oe(config.chief_mean, config.deputies[d].roe);
    for (int i = 0; i < ns; ++i) {
      const OrbitalElements osc = mean_to_osculating(
          mean[i], j2, body.gravity.mu, body.gravity.ref_radius);
      // Elements are defined in ACIC; rotate into ACI.
      SpacecraftState s = oe_to_cartesian(osc, body.gravity.mu);
      const Mat3 rot = aci_from_acic(body.rotation).matrix;
      s.position = rot * s.position;
      s.velocity = rot * s.velocity;
      s.srp_coeff = config.srp_coeff;
      s.cross_section_over_mass = config.area_over_mass;
      truth[i] = s;
    }
  }
  std::vector<ClockState> clocks(ns);
  for (int i = 0; i < ns; ++i) {
    clocks[i].q1 = (i == 0 && config.mothership_clock_perfect)
                       ? 0.0
                       : config.clock_q1;
    clocks[i].q2 = (i == 0 && config.mothership_clock_perfect)
                       ? 0.0
                       : config.clock_q2;
    if (i > 0) {
      Rng init = master.fork(900 + i);
      clocks[i].offset =
          init.normal(0.0, config.apriori.range_bias / kSpeedOfLight);
      clocks[i].drift =
          init.normal(0.0, config.apriori.doppler_bias / kSpeedOfLight);
    }
  }

  // --- Filter construction ----------------------------------------------
  UkfModel ukf_model;
  ukf_model.config = config.ukf;
  ukf_model.config.pixel_sigma = config.detection.pixel_sigma;
  ukf_model.config.range_sigma = config.rf_noise.range_sigma;
  ukf_model.config.doppler_sigma = config.rf_noise.doppler_sigma;
  ukf_model.sun = truth_dynamics.sun;
  ukf_model.ref_radius = body.gravity.ref_radius;
  ukf_model.prime_meridian = body.rotation.prime_meridian_epoch_angle;
  ukf_model.cross_section_over_mass.assign(ns, config.area_over_mass);
  ukf_model.clock_q1.assign(ns, config.clock_q1);
  ukf_model.clock_q2.assign(ns, config.clock_q2);
  if (config.mothership_clock_perfect) {
    ukf_model.clock_q1[0] = 0.0;
    ukf_model.clock_q2[0] = 0.0;
  }

  Rng init_rng = master.fork(1);
  FilterEstimate est =
      init_from_ground_phase(config, body, truth, clocks, init_rng);
  AsncState asnc = AsncState::initial(est.layout, 0.0);
  {
    // Initial guess: the J2-based upper bound at the initial radius.
    const double j2 = std::max(0.0, body.gravity.j2());
    for (int i = 0; i < ns; ++i) {
      const double r = truth[i].position.norm();
      const double qu = asnc_upper_bound(body.gravity.mu, j2,
                                         body.gravity.ref_radius, r,
                                         config.cadence);
      asnc.qtilde.segment<3>(3 * i).setConstant(qu);
    }
  }

  const Mat3 calib = CameraModel::pinhole(config.camera_focal,
                                          config.camera_width,
                                          config.camera_height, Vec3::Zero(),
                                          FrameRotation())
                         .calibration;
  const Mat2 pixel_cov = config.detection.pixel_sigma *
                         config.detection.pixel_sigma * Mat2::Identity();

  // --- Logs ---------------------------------------------------------------
  CsvWriter truth_log(
      out_dir + "/truth_states.csv",
      {"epoch", "spacecraft", "x", "y", "z", "vx", "vy", "vz",
       "clock_offset", "clock_drift"});
  CsvWriter keypoint_log(out_dir + "/keypoints.csv",
                         {"epoch", "spacecraft", "u", "v",
                          "truth_feature_id"});
  CsvWriter rf_log(out_dir + "/rf.csv",
                   {"epoch", "transmitter", "receiver", "pseudorange",
                    "doppler"});
  CsvWriter attitude_log(out_dir + "/attitude.csv",
                         {"epoch", "spacecraft", "r00", "r01", "r02", "r10",
                          "r11", "r12", "r20", "r21", "r22"});
  std::vector<std::string> hist_header = {"epoch", "n_landmarks",
                                          "nees_posvel", "n_pixels",
                                          "n_rf", "innovation_rms"};
  {
    const FilterLayout& lay = est.layout;
    auto add = [&](const std::string& base, int count) {
      for (int i = 0; i < count; ++i)
        hist_header.push_back(base + "_" + std::to_string(i));
    };
    add("mean", lay.base_size());
    add("var", lay.base_size());
    (void)lay;
    for (int i = 0; i < 3 * ns; ++i)
      hist_header.push_back("qtilde_" + std::to_string(i));
  }
  CsvWriter filter_log(out_dir + "/filter_history.csv", hist_header);
  CsvWriter landmark_state_log(out_dir + "/landmark_states.csv",
                               {"epoch", "id", "x", "y", "z", "var_x",
                                "var_y", "var_z"});
  CsvWriter corr_log(out_dir + "/correlation_stats.csv",
                     {"epoch", "sc2sc_pairs", "sc2sc_true_positive",
                      "f2sc_assignments", "f2sc_true_positive",
                      "stereo_inits", "retired", "deleted"});
  CsvWriter stereo_log(out_dir + "/stereo_init.csv",
                       {"epoch", "id", "views", "x", "y", "z", "truth_x",
                        "truth_y", "truth_z", "err_cf_x", "err_cf_y",
                        "err_cf_z", "residual_rms_px"});
  CsvWriter nees_log(out_dir + "/nees_detail.csv",
                     {"epoch", "nees_posvel", "dof"});

  TimingAccumulator timing;
  const int n_epochs = config.epoch_count();
  const double period = config.orbit_period();

  // Landmark bookkeeping.
  std::vector<LandmarkRecord> tracked;
  std::vector<LandmarkRecord> retired_db;
  std::map<int, EvalAnchor> anchors;  // evaluation only
  int next_landmark_id = 0;

  double time_prev = 0.0;
  double last_nees = 0.0;

  for (int epoch = 1; epoch <= n_epochs; ++epoch) {
    const double t_k = epoch * config.cadence;
    Rng rng_epoch = master.fork(1000 + epoch);
    Stopwatch watch;

    // 1. Truth propagation to the nominal epoch.
    for (int i = 0; i < ns; ++i) {
      truth[i] = propagate_adaptive(truth[i], truth_dynamics, time_prev,
                                    t_k - time_prev, config.truth_tolerance);
      clocks[i] = clock_transition(clocks[i], t_k - time_prev, rng_epoch);
    }
    timing.add("truth_propagation", watch.lap());

    // 2. Acquisition epochs: nominal minus true offset plus estimated
    // offset of the onboard clock relative to the mothership.
    std::vector<double> t_meas(ns, t_k);
    std::vector<SpacecraftState> sampled = truth;
    std::vector<ClockState> sampled_clocks = clocks;
    for (int i = 0; i < ns; ++i) {
      double est_offset = 0.0;
      if (i > 0)
        est_offset = est.mean[est.layout.idx_clock_deputy(i)] / kSpeedOfLight;
      t_meas[i] = acquisition_time(t_k, clocks[i], est_offset);
      const double delta = t_meas[i] - t_k;
      const Vec3 accel = total_accel(truth_dynamics, truth[i], t_k);
      sampled[i] = nudge_state(truth[i], accel, delta);
      sampled_clocks[i].offset += clocks[i].drift * delta;
    }

    // 3. Measurements.
    std::vector<std::vector<KeypointObservation>> keypoints(ns);
    std::vector<FrameRotation> truth_attitudes(ns), meas_attitudes(ns);
    std::vector<CameraModel> truth_cameras(ns);
    for (int i = 0; i < ns; ++i) {
      truth_attitudes[i] = nadir_attitude(sampled[i]);
      meas_attitudes[i] =
          measure_attitude(truth_attitudes[i], config.attitude_noise,
                           rng_epoch);
      truth_cameras[i] = CameraModel::pinhole(
          config.camera_focal, config.camera_width, config.camera_height,
          sampled[i].position, truth_attitudes[i]);
      const FrameRotation rot =
          aci_from_acaf(body.rotation, t_meas[i]);
      const Vec3 sun_dir =
          truth_dynamics.sun.position_aci(t_meas[i]).normalized();
      keypoints[i] = detect_keypoints(features, body.shape, rot,
                                      truth_cameras[i], sun_dir,
                                      config.detection, i, t_meas[i],
                                      rng_epoch);
    }
    std::vector<RfMeasurement> rf;
    for (int i = 0; i < ns; ++i)
      for (int jj = 0; jj < ns; ++jj) {
        if (i == jj) continue;
        rf.push_back(measure_rf(sampled[i], sampled[jj], sampled_clocks[i],
                                sampled_clocks[jj], i, jj, t_k,
                                config.rf_noise, rng_epoch));
      }
    timing.add("measurement_generation", watch.lap());

    // Measurement logs.
    for (int i = 0; i < ns; ++i) {
      truth_log.row({t_k, double(i), truth[i].position.x(),
                     truth[i].position.y(), truth[i].position.z(),
                     truth[i].velocity.x(), truth[i].velocity.y(),
                     truth[i].velocity.z(), clocks[i].offset,
                     clocks[i].drift});
      attitude_log.row({t_k, double(i), meas_attitudes[i].matrix(0, 0),
                        meas_attitudes[i].matrix(0, 1),
                        meas_attitudes[i].matrix(0, 2),
                        meas_attitudes[i].matrix(1, 0),
                        meas_attitudes[i].matrix(1, 1),
                        meas_attitudes[i].matrix(1, 2),
                        meas_attitudes[i].matrix(2, 0),
                        meas_attitudes[i].matrix(2, 1),
                        meas_attitudes[i].matrix(2, 2)});
      for (const auto& k : keypoints[i])
        keypoint_log.row({t_k, double(i), k.pixel.u, k.pixel.v,
                          double(k.truth_feature_id)});
    }
    for (const auto& m : rf)
      rf_log.row({t_k, double(m.transmitter), double(m.receiver),
                  m.pseudorange, m.doppler});

    // 4. Filter time update.
    watch.lap();
    const TimeUpdateResult tu =
        time_update(est, t_k - time_prev, ukf_model, asnc.qtilde);
    est = tu.estimate;
    timing.add("filter_time_update", watch.lap());

    // 5. Filter-to-spacecraft correlation: the filter belief is post time
    // update, pre measurement update.
    std::vector<PixelMeasurement> pixel_meas;
    std::set<std::pair<int, int>> claimed;  // (spacecraft, keypoint)
    std::map<int, bool> correlated_this_epoch;
    int f2sc_total = 0, f2sc_tp = 0;
    for (int j = 0; j < ns; ++j) {
      std::vector<LandmarkProjection> projections;
      for (size_t slot = 0; slot < est.landmark_ids.size(); ++slot) {
        const int id = est.landmark_ids[slot];
        LandmarkProjection lp;
        const ProjectedLandmark pr = project_landmark_belief(
            est, static_cast<int>(slot), j, meas_attitudes[j], calib,
            ukf_model);
        if (!pr.valid) continue;
        lp.landmark_id = id;
        lp.predicted = pr.pixel;
        lp.projected_cov = pr.covariance;
        // Descriptor from this spacecraft when available, else the lowest
        // spacecraft index that has seen the landmark.
        const LandmarkRecord* rec = nullptr;
        for (const auto& r : tracked)
          if (r.id == id) rec = &r;
        if (!rec || rec->last_descriptor.empty()) continue;
        auto it = rec->last_descriptor.find(j);
        if (it == rec->last_descriptor.end())
          it = rec->last_descriptor.begin();
        lp.descriptor = it->second;
        lp.valid = true;
        projections.push_back(std::move(lp));
      }
      const auto assignments = correlate_filter_to_image(
          projections, keypoints[j], pixel_cov, config.correlation);
      for (const auto& a : assignments) {
        PixelMeasurement pm;
        pm.landmark_id = a.landmark_id;
        pm.spacecraft = j;
        pm.pixel = keypoints[j][a.keypoint].pixel;
        pixel_meas.push_back(pm);
        claimed.insert({j, a.keypoint});
        correlated_this_epoch[a.landmark_id] = true;
        for (auto& r : tracked)
          if (r.id == a.landmark_id) {
            r.last_descriptor[j] = keypoints[j][a.keypoint].descriptor;
            r.total_correlations += 1;
          }
        ++f2sc_total;
        // Evaluation: ray-trace criterion via the generating features.
        const auto anchor = anchors.find(a.landmark_id);
        if (anchor != anchors.end()) {
          const Vec3 fpos =
              features[keypoints[j][a.keypoint].truth_feature_id]
                  .acaf_position;
          if ((fpos - anchor->second.truth_position).norm() <
              config.tp_distance)
            ++f2sc_tp;
        }
      }
    }
    timing.add("f2sc_correlation", watch.lap());

    // 6. Miss counters and retirement (before the measurement update).
    for (auto& r : tracked) {
      if (correlated_this_epoch.count(r.id))
        r.consecutive_misses = 0;
      else
        r.consecutive_misses += 1;
    }
    // Sync filter marginals into the records for the dedupe rule.
    for (auto& r : tracked) {
      const int slot = est.landmark_slot(r.id);
      if (slot < 0) continue;
      r.acaf_position = est.landmark(slot);
      r.covariance = est.covariance.block<3, 3>(
          est.layout.idx_landmark(slot), est.layout.idx_landmark(slot));
    }
    const RetireResult retire_result =
        retire_and_dedupe(tracked, retired_db, config.correlation);
    {
      std::vector<int> to_remove = retire_result.retired_ids;
      for (int id : retire_result.deleted_ids)
        if (est.landmark_slot(id) >= 0) to_remove.push_back(id);
      std::sort(to_remove.begin(), to_remove.end());
      to_remove.erase(std::unique(to_remove.begin(), to_remove.end()),
                      to_remove.end());
      retire_from_state(est, to_remove);
    }
    // Drop pixel measurements that referenced now-removed landmarks.
    {
      std::vector<PixelMeasurement> kept;
      for (const auto& pm : pixel_meas)
        if (est.landmark_slot(pm.landmark_id) >= 0) kept.push_back(pm);
      pixel_meas = std::move(kept);
    }
    timing.add("retirement", watch.lap());

    // 7. Spacecraft-to-spacecraft correlation on all pairs.
    // Identify the middle spacecraft from the believed geometry.
    int outer_a = 0, outer_b = 1, middle = 2;
    if (ns >= 3) {
      double best = -1.0;
      for (int i = 0; i < ns; ++i)
        for (int jj = i + 1; jj < ns; ++jj) {
          const double d =
              (est.mean.segment<3>(est.layout.idx_spacecraft(i)) -
               est.mean.segment<3>(est.layout.idx_spacecraft(jj)))
                  .norm();
          if (d > best) {
            best = d;
            outer_a = i;
            outer_b = jj;
          }
        }
      for (int i = 0; i < ns; ++i)
        if (i != outer_a && i != outer_b) middle = i;
    }

    // Believed cameras: filter mean positions with measured attitudes.
    std::vector<CameraModel> believed(ns);
    for (int i = 0; i < ns; ++i)
      believed[i] = CameraModel::pinhole(
          config.camera_focal, config.camera_width, config.camera_height,
          est.mean.segment<3>(est.layout.idx_spacecraft(i)),
          meas_attitudes[i]);

    auto matched_pair = [&](int i, int jj) -> std::vector<MatchPair> {
      auto pairs =
          match_descriptors(keypoints[i], keypoints[jj],
                            config.correlation.lowe_ratio);
      try {
        const ConsensusResult cr = consensus_reject(
            pairs, keypoints[i], keypoints[jj], calib, calib,
            config.correlation, rng_epoch);
        pairs = cr.inliers;
      } catch (const ConsensusFailure&) {
        return {};  // skip stereo initialization from this pair
      }
      Mat6 p_gamma;
      const int bi = est.layout.idx_spacecraft(i);
      const int bj = est.layout.idx_spacecraft(jj);
      p_gamma.topLeftCorner<3, 3>() = est.covariance.block<3, 3>(bi, bi);
      p_gamma.topRightCorner<3, 3>() = est.covariance.block<3, 3>(bi, bj);
      p_gamma.bottomLeftCorner<3, 3>() = est.covariance.block<3, 3>(bj, bi);
      p_gamma.bottomRightCorner<3, 3>() = est.covariance.block<3, 3>(bj, bj);
      return epipolar_reject(pairs, keypoints[i], keypoints[jj], believed[i],
                             believed[jj], p_gamma, pixel_cov, pixel_cov,
                             config.correlation.p_m);
    };

    int sc2sc_pairs = 0, sc2sc_tp = 0;
    std::vector<CorrelatedSet> sets;
    if (ns >= 3) {
      const auto m_to_a = matched_pair(middle, outer_a);
      const auto m_to_b = matched_pair(middle, outer_b);
      const auto a_to_b = matched_pair(outer_a, outer_b);
      auto count_tp = [&](const std::vector<MatchPair>& pairs, int i,
                          int jj) {
        for (const auto& p : pairs) {
          ++sc2sc_pairs;
          const Vec3 fa =
              features[keypoints[i][p.index_a].truth_feature_id]
                  .acaf_position;
          const Vec3 fb =
              features[keypoints[jj][p.index_b].truth_feature_id]
                  .acaf_position;
          if ((fa - fb).norm() < config.tp_distance) ++sc2sc_tp;
        }
      };
      count_tp(m_to_a, middle, outer_a);
      count_tp(m_to_b, middle, outer_b);
      count_tp(a_to_b, outer_a, outer_b);
      sets = share_correlations(m_to_a, m_to_b, a_to_b);
    } else {
      const auto ab = matched_pair(0, 1);
      for (const auto& p : ab) {
        ++sc2sc_pairs;
        CorrelatedSet s;
        s.middle = p.index_a;
        s.outer1 = p.index_b;
        s.total_descriptor_dist2 = p.descriptor_dist2;
        sets.push_back(s);
      }
      middle = 0;
      outer_a = 1;
      outer_b = -1;
    }
    timing.add("sc2sc_correlation", watch.lap());

    // 8. Stereovision initialization of unclaimed correlated sets.
    struct Candidate {
      std::vector<StereoObservation> obs;
      std::vector<int> feature_ids;
      double desc_dist2;
    };
    std::vector<Candidate> candidates;
    for (const auto& s : sets) {
      Candidate cand;
      cand.desc_dist2 = s.total_descriptor_dist2;
      auto add_view = [&](int sc, int kp_index) {
        if (kp_index < 0) return true;
        if (claimed.count({sc, kp_index})) return false;
        StereoObservation o;
        o.camera = believed[sc];
        o.pixel = keypoints[sc][kp_index].pixel;
        o.spacecraft = sc;
        cand.obs.push_back(o);
        cand.feature_ids.push_back(
            keypoints[sc][kp_index].truth_feature_id);
        return true;
      };
      bool free_set = add_view(middle, s.middle) &&
                      add_view(outer_a, s.outer1) &&
                      add_view(outer_b, s.outer2);
      if (!free_set || cand.obs.size() < 2) continue;
      candidates.push_back(std::move(cand));
    }
    std::sort(candidates.begin(), candidates.end(),
              [](const Candidate& a, const Candidate& b) {
                if (a.obs.size() != b.obs.size())
                  return a.obs.size() > b.obs.size();
                return a.desc_dist2 < b.desc_dist2;
              });

    std::vector<StereoEstimate> new_estimates;
    std::vector<int> new_ids;
    std::vector<Candidate> accepted_candidates;
    const double residual_gate =
        4.0 * config.detection.pixel_sigma;  // RMS per coordinate [px]
    for (const auto& cand : candidates) {
      if (static_cast<int>(new_estimates.size()) >= config.max_new_landmarks)
        break;
      Vec3 point;
      try {
        point = triangulate_refine(triangulate_linear(cand.obs), cand.obs);
      } catch (const Error&) {
        continue;
      }
      const double rms = std::sqrt(reprojection_residual2(point, cand.obs) /
                                   (2.0 * cand.obs.size()));
      if (rms > residual_gate) continue;

      // Covariance and cross covariance against the current belief.
      const int nview = static_cast<int>(cand.obs.size());
      MatX a_l(2 * nview, 3);
      MatX a_x = MatX::Zero(2 * nview, est.layout.size());
      const RotationState rot_belief =
          est.rotation_state(ukf_model.prime_meridian);
      const Vec3 point_acaf =
          aci_from_acaf(rot_belief, est.epoch).matrix.transpose() * point;
      for (int v = 0; v < nview; ++v) {
        const PixelJacobian pj =
            pixel_jacobian(cand.obs[v].camera, point);
        a_l.middleRows<2>(2 * v) =
            pj.d_point *
            aci_from_acaf(rot_belief, est.epoch).matrix;  // d/dL_acaf
        a_x.block<2, 3>(2 * v, est.layout.idx_spacecraft(
                                   cand.obs[v].spacecraft)) = pj.d_position;
        a_x.block<2, 3>(2 * v, 0) =
            pj.d_point *
            world_point_rotation_jacobian(rot_belief, est.epoch, point_acaf);
      }
      const VecX r_diag = VecX::Constant(
          2 * nview,
          config.detection.pixel_sigma * config.detection.pixel_sigma);
      StereoCovariance sc;
      try {
        sc = stereo_covariance(a_l, a_x, r_diag, est.covariance);
      } catch (const Error&) {
        continue;
      }
      StereoEstimate se;
      se.acaf_position = point_acaf;
      se.covariance = sc.p_landmark;
      se.cross_covariance = sc.p_cross;
      se.views = nview;
      se.residual_rms_px = rms;
      new_estimates.push_back(std::move(se));
      new_ids.push_back(next_landmark_id++);
      accepted_candidates.push_back(cand);
    }

    const AugmentResult aug =
        augment(est, new_estimates, new_ids, ukf_model.config);
    est = aug.estimate;
    int stereo_inits = 0;
    for (size_t k = 0; k < new_estimates.size(); ++k) {
      const int id = new_ids[k];
      if (std::find(aug.dropped_ids.begin(), aug.dropped_ids.end(), id) !=
          aug.dropped_ids.end())
        continue;
      ++stereo_inits;
      LandmarkRecord rec;
      rec.id = id;
      rec.acaf_position = new_estimates[k].acaf_position;
      rec.covariance =
          ukf_model.config.stereo_inflation * new_estimates[k].covariance;
      for (size_t v = 0; v < accepted_candidates[k].obs.size(); ++v) {
        const int sc_idx = accepted_candidates[k].obs[v].spacecraft;
        // Store the observing descriptor for follow-up correlation.
        for (const auto& kp : keypoints[sc_idx]) {
          if (kp.truth_feature_id ==
                  accepted_candidates[k].feature_ids[v] &&
              std::abs(kp.pixel.u - accepted_candidates[k].obs[v].pixel.u) <
                  1e-9) {
            rec.last_descriptor[sc_idx] = kp.descriptor;
            break;
          }
        }
      }
      tracked.push_back(rec);

      // Evaluation anchor: mean truth position of the generating features.
      EvalAnchor anchor;
      for (int fid : accepted_candidates[k].feature_ids) {
        anchor.truth_position += features[fid].acaf_position;
        anchor.count += 1;
      }
      anchor.truth_position /= std::max(1, anchor.count);
      anchors[id] = anchor;

      const Vec3 err_aci =
          aci_from_acaf(body.rotation, t_k).matrix *
              (new_estimates[k].acaf_position - anchor.truth_position);
      const Vec3 err_cf =
          accepted_candidates[k].obs[0].camera.orientation.matrix * err_aci;
      stereo_log.row({t_k, double(id), double(new_estimates[k].views),
                      new_estimates[k].acaf_position.x(),
                      new_estimates[k].acaf_position.y(),
                      new_estimates[k].acaf_position.z(),
                      anchor.truth_position.x(), anchor.truth_position.y(),
                      anchor.truth_position.z(), err_cf.x(), err_cf.y(),
                      err_cf.z(), new_estimates[k].residual_rms_px});
    }
    timing.add("stereovision", watch.lap());

    // 9. Measurement update.
    std::sort(pixel_meas.begin(), pixel_meas.end(),
              [&](const PixelMeasurement& a, const PixelMeasurement& b) {
                const int sa = est.landmark_slot(a.landmark_id);
                const int sb = est.landmark_slot(b.landmark_id);
                return std::tie(sa, a.spacecraft) <
                       std::tie(sb, b.spacecraft);
              });
    const MeasurementUpdateResult mu = measurement_update(
        est, rf, pixel_meas, meas_attitudes, calib, ukf_model,
        t_k - time_prev);
    est = mu.estimate;
    timing.add("filter_measurement_update", watch.lap());

    // 10. ASNC re-estimation.
    if (config.asnc.enabled) {
      VecX bounds(3 * ns);
      const double mu_hat = est.mean[est.layout.idx_gravity()];
      const double j2_hat = std::max(
          0.0, -std::sqrt(5.0) * est.mean[est.layout.idx_gravity() + 1]);
      for (int i = 0; i < ns; ++i) {
        const double r =
            est.mean.segment<3>(est.layout.idx_spacecraft(i)).norm();
        bounds.segment<3>(3 * i).setConstant(
            asnc_upper_bound(mu_hat, j2_hat, ukf_model.ref_radius, r,
                             t_k - time_prev));
      }
      asnc_update(asnc, mu.innovation, est, ukf_model, config.asnc, bounds);
    }
    timing.add("asnc", watch.lap());

    // 11. Filter history and evaluation logs.
    {
      const FilterLayout& lay = est.layout;
      // NEES over the spacecraft position/velocity sub-block.
      VecX err(6 * ns);
      std::vector<int> idx;
      for (int i = 0; i < ns; ++i) {
        const int b = lay.idx_spacecraft(i);
        err.segment<3>(6 * i) =
            est.mean.segment<3>(b) - truth[i].position;
        err.segment<3>(6 * i + 3) =
            est.mean.segment<3>(b + 3) - truth[i].velocity;
        for (int k = 0; k < 6; ++k) idx.push_back(b + k);
      }
      MatX sub(6 * ns, 6 * ns);
      for (int r = 0; r < 6 * ns; ++r)
        for (int cc = 0; cc < 6 * ns; ++cc)
          sub(r, cc) = est.covariance(idx[r], idx[cc]);
      last_nees = err.dot(sub.ldlt().solve(err));
      nees_log.row({t_k, last_nees, double(6 * ns)});

      std::vector<double> row = {t_k, double(lay.n_landmarks), last_nees,
                                 double(pixel_meas.size()),
                                 double(rf.size()),
                                 mu.innovation.innovation.size()
                                     ? std::sqrt(mu.innovation.innovation
                                                     .squaredNorm() /
                                                 mu.innovation.innovation
                                                     .size())
                                     : 0.0};
      for (int i = 0; i < lay.base_size(); ++i) row.push_back(est.mean[i]);
      for (int i = 0; i < lay.base_size(); ++i)
        row.push_back(est.covariance(i, i));
      for (int i = 0; i < 3 * ns; ++i) row.push_back(asnc.qtilde[i]);
      filter_log.row(row);
      for (int j = 0; j < lay.n_landmarks; ++j) {
        const int b = lay.idx_landmark(j);
        landmark_state_log.row({t_k, double(est.landmark_ids[j]),
                                est.mean[b], est.mean[b + 1],
                                est.mean[b + 2], est.covariance(b, b),
                                est.covariance(b + 1, b + 1),
                                est.covariance(b + 2, b + 2)});
      }
      corr_log.row({t_k, double(sc2sc_pairs), double(sc2sc_tp),
                    double(f2sc_total), double(f2sc_tp),
                    double(stereo_inits),
                    double(retire_result.retired_ids.size()),
                    double(retire_result.deleted_ids.size())});
    }
    time_prev = t_k;
  }

  // --- Final database and shape fit --------------------------------------
  for (auto& r : tracked) {
    const int slot = est.landmark_slot(r.id);
    if (slot < 0) continue;
    r.acaf_position = est.landmark(slot);
    r.covariance = est.covariance.block<3, 3>(est.layout.idx_landmark(slot),
                                              est.layout.idx_landmark(slot));
  }
  {
    CsvWriter db_log(out_dir + "/landmarks.csv",
                     {"id", "status", "x", "y", "z", "cov_xx", "cov_xy",
                      "cov_xz", "cov_yy", "cov_yz", "cov_zz",
                      "total_correlations"});
    auto write_record = [&](const LandmarkRecord& r, double status) {
      db_log.row({double(r.id), status, r.acaf_position.x(),
                  r.acaf_position.y(), r.acaf_position.z(),
                  r.covariance(0, 0), r.covariance(0, 1), r.covariance(0, 2),
                  r.covariance(1, 1), r.covariance(1, 2), r.covariance(2, 2),
                  double(r.total_correlations)});
    };
    for (const auto& r : tracked) write_record(r, 0.0);
    for (const auto& r : retired_db) write_record(r, 1.0);
  }

  summary.epochs = n_epochs;
  summary.final_tracked_landmarks = static_cast<int>(tracked.size());
  summary.database_landmarks =
      static_cast<int>(tracked.size() + retired_db.size());

  {
    Stopwatch watch;
    std::vector<Vec3> pts;
    std::vector<Mat3> covs;
    for (const auto& r : tracked) {
      pts.push_back(r.acaf_position);
      covs.push_back(r.covariance);
    }
    for (const auto& r : retired_db) {
      pts.push_back(r.acaf_position);
      covs.push_back(r.covariance);
    }
    if (static_cast<int>(pts.size()) >
        ShapeCoefficients::size(config.shape_fit_degree)) {
      const ShapeFitProblem problem = make_fit_problem(
          pts, covs, config.shape_fit_degree, config.shape_fit_alpha);
      const ShapeFitReport rep = fit_shape_gcv(problem);
      save_shape_coefficients(rep.coefficients, config.shape_fit_alpha,
                              rep.gcv.nu, out_dir + "/shape_fit.txt");
      // Evaluate against truth radii on a reference grid.
      std::vector<Vec3> reference;
      for (int i = 0; i < 64; ++i)
        for (int jj = 1; jj < 32; ++jj) {
          const double lon = 2.0 * M_PI * i / 64;
          const double lat = M_PI * jj / 32 - M_PI / 2;
          reference.push_back(body.shape.surface_point(lon, lat));
        }
      summary.shape_rmse = shape_rmse(rep.coefficients, reference);
      summary.shape_rmse_fraction =
          summary.shape_rmse / config.body.avg_radius;
    }
    timing.add("shape_reconstruction", watch.lap());
  }

  // Timing report (wall clock; excluded from determinism comparisons).
  {
    json jt;
    for (const auto& [key, val] : timing.sum_worst) {
      jt[key] = {{"total_s", val.first},
                 {"average_s",
                  n_epochs > 0 ? val.first / n_epochs : val.first},
                 {"worst_s", val.second}};
    }
    std::ofstream out(out_dir + "/timing.json");
    out << jt.dump(2) << "\n";
  }

  return summary;
}

}  // namespace snac
