// Python bindings for the main operations: projection and gating
// primitives, gravity and clock models, triangulation, shape fitting, and
// the scenario runner.

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "snac/body.hpp"
#include "snac/dynamics.hpp"
#include "snac/frames.hpp"
#include "snac/io.hpp"
#include "snac/report.hpp"
#include "snac/scenario.hpp"
#include "snac/shape_recon.hpp"
#include "snac/stereovision.hpp"

namespace py = pybind11;
using namespace snac;

PYBIND11_MODULE(snacpy, m) {
  m.doc() =
      "Swarm navigation and asteroid characterization toolkit (core "
      "operations)";

  // --- frames and gating --------------------------------------------------
  m.def(
      "projection_matrix",
      [](const Mat3& calibration, const Mat3& world_to_cf,
         const Vec3& position) {
        CameraModel cam;
        cam.calibration = calibration;
        cam.position = position;
        cam.orientation = FrameRotation(world_to_cf, Frame::ACI, Frame::CF);
        return Eigen::MatrixXd(projection_matrix(cam));
      },
      py::arg("calibration"), py::arg("world_to_cf"), py::arg("position"),
      "3x4 projective camera matrix K [R | R(-r)]");

  m.def(
      "project",
      [](const Mat3& calibration, const Mat3& world_to_cf,
         const Vec3& position, const Vec3& point) {
        CameraModel cam;
        cam.calibration = calibration;
        cam.width = static_cast<int>(2 * calibration(0, 2));
        cam.height = static_cast<int>(2 * calibration(1, 2));
        cam.position = position;
        cam.orientation = FrameRotation(world_to_cf, Frame::ACI, Frame::CF);
        const PixelPoint p = project(cam, point);
        return std::make_pair(p.u, p.v);
      },
      py::arg("calibration"), py::arg("world_to_cf"), py::arg("position"),
      py::arg("point"), "Euclidean pixel of a world point");

  m.def(
      "mahalanobis",
      [](const VecX& sample, const VecX& mean, const MatX& covariance) {
        return mahalanobis(sample, GaussianBelief{mean, covariance});
      },
      py::arg("sample"), py::arg("mean"), py::arg("covariance"));
  m.def("mahalanobis_threshold", &mahalanobis_threshold, py::arg("p_m"),
        py::arg("dims"));

  // --- dynamics ------------------------------------------------------------
  m.def("sh_normalization", &sh_normalization, py::arg("n"), py::arg("m"));
  m.def(
      "gravity_accel",
      [](double mu, double ref_radius, int degree, const VecX& cbar,
         const VecX& sbar, const Vec3& pos_acaf) {
        GravityField f = GravityField::point_mass(mu, ref_radius, degree);
        f.cbar = cbar;
        f.sbar = sbar;
        RotationState rot;
        rot.delta = M_PI / 2.0;  // ACAF aligned with the evaluation frame
        return Vec3(gravity_accel(f, rot, pos_acaf, 0.0));
      },
      py::arg("mu"), py::arg("ref_radius"), py::arg("degree"),
      py::arg("cbar"), py::arg("sbar"), py::arg("pos"),
      "harmonic gravity acceleration at a body-fixed position");
  m.def(
      "clock_process_noise",
      [](double q1, double q2, double dt) {
        return Eigen::MatrixXd(clock_process_noise(q1, q2, dt));
      },
      py::arg("q1"), py::arg("q2"), py::arg("dt"));
  m.def("allan_variance_fit", &allan_variance_fit, py::arg("samples"),
        "fit (q1, q2) to (tau, avar) samples");

  // --- stereovision ----------------------------------------------------------
  m.def(
      "triangulate",
      [](const std::vector<Mat3>& calibrations,
         const std::vector<Mat3>& rotations,
         const std::vector<Vec3>& positions,
         const std::vector<std::pair<double, double>>& pixels) {
        std::vector<StereoObservation> obs;
        for (size_t i = 0; i < calibrations.size(); ++i) {
          StereoObservation o;
          o.camera.calibration = calibrations[i];
          o.camera.position = positions[i];
          o.camera.orientation =
              FrameRotation(rotations[i], Frame::ACI, Frame::CF);
          o.pixel = {pixels[i].first, pixels[i].second, 1.0};
          obs.push_back(o);
        }
        return Vec3(triangulate_refine(triangulate_linear(obs), obs));
      },
      py::arg("calibrations"), py::arg("rotations"), py::arg("positions"),
      py::arg("pixels"),
      "multi-view triangulation (linear initialization, Gauss-Newton "
      "refinement)");

  // --- shape reconstruction ---------------------------------------------------
  m.def(
      "fit_shape",
      [](const std::vector<Vec3>& landmarks,
         const std::vector<Mat3>& covariances, int degree, double alpha) {
        const ShapeFitProblem p =
            make_fit_problem(landmarks, covariances, degree, alpha);
        const ShapeFitReport rep = fit_shape_gcv(p);
        py::dict out;
        out["coefficients"] = rep.coefficients.s;
        out["degree"] = rep.coefficients.max_degree;
        out["nu"] = rep.gcv.nu;
        out["gcv_value"] = rep.gcv.v;
        out["undersmoothing_warning"] = rep.undersmoothing_warning;
        return out;
      },
      py::arg("landmarks"), py::arg("covariances"), py::arg("degree"),
      py::arg("alpha") = 1.84,
      "power-law-regularized shape fit with GCV weight selection");
  m.def(
      "evaluate_shape",
      [](int degree, const VecX& coefficients, double lon, double lat) {
        return evaluate_shape(ShapeCoefficients{degree, coefficients}, lon,
                              lat);
      },
      py::arg("degree"), py::arg("coefficients"), py::arg("lon"),
      py::arg("lat"));
  m.def(
      "generate_body_shape",
      [](std::uint64_t seed, int degree, double avg_radius, double alpha) {
        BodySynthesisConfig cfg;
        cfg.shape_degree = degree;
        cfg.avg_radius = avg_radius;
        cfg.shape_alpha = alpha;
        const BodyModel body = generate_body(seed, cfg);
        return body.shape.harmonics.s;
      },
      py::arg("seed"), py::arg("degree"), py::arg("avg_radius"),
      py::arg("alpha") = 1.84,
      "synthetic power-law body shape coefficients");

  // --- scenario ---------------------------------------------------------------
  m.def("default_config_json",
        []() { return desk_scenario().to_json_text(); });
  m.def(
      "run_scenario",
      [](const std::string& config_json, const std::string& out_dir) {
        const ScenarioConfig config =
            ScenarioConfig::from_json_text(config_json);
        const RunSummary summary = run_scenario(config, out_dir);
        const RunReport report = write_report(out_dir);
        py::dict out;
        out["epochs"] = summary.epochs;
        out["database_landmarks"] = report.database_landmarks;
        out["position_rmse_m"] = report.parameters.at("position_m").rmse;
        out["shape_rmse_m"] = report.shape_rmse;
        out["f2sc_true_positive_rate"] = report.f2sc_true_positive_rate;
        out["report_json"] = report.to_json_text();
        return out;
      },
      py::arg("config_json"), py::arg("out_dir"),
      "run the full pipeline and return headline metrics");
}
