#include "snac/truth_sim.hpp"

#include <cmath>

namespace snac {

std::vector<KeypointObservation> detect_keypoints(
    const std::vector<SurfaceFeature>& features, const BodyShape& shape,
    const FrameRotation& aci_from_acaf_rot, const CameraModel& camera,
    const Vec3& sun_dir_aci, const DetectionConfig& config, int spacecraft,
    double epoch, Rng& rng) {
  std::vector<KeypointObservation> out;
  const Mat3& rot = aci_from_acaf_rot.matrix;
  const Vec3 cam_acaf = rot.transpose() * camera.position;

  for (const SurfaceFeature& f : features) {
    const Vec3 p_aci = rot * f.acaf_position;
    const auto pixel = try_project(camera, p_aci);
    if (!pixel || !camera.contains(*pixel)) continue;

    const LonLat geo = to_lonlat(f.acaf_position);
    const Vec3 normal_acaf = shape.outward_normal(geo.lon, geo.lat);
    const Vec3 to_cam = (cam_acaf - f.acaf_position).normalized();
    const double cos_view = normal_acaf.dot(to_cam);
    if (cos_view <= 0.0) continue;  // surface faces away

    // Limb proxy: reject grazing viewing geometry.
    const double grazing = std::asin(std::min(1.0, std::max(0.0, cos_view)));
    if (grazing < config.limb_angle) continue;

    // Illumination: reject unlit, decay toward the terminator.
    const Vec3 sun_acaf = (rot.transpose() * sun_dir_aci).normalized();
    const double cos_inc = normal_acaf.dot(sun_acaf);
    if (cos_inc <= 0.0) continue;
    const double illum = std::min(1.0, cos_inc / config.terminator_cos);

    if (!rng.bernoulli(f.detectability * illum)) continue;

    // The ray test is the expensive check; it runs last.
    if (shape.segment_occluded(cam_acaf, f.acaf_position)) continue;

    KeypointObservation obs;
    obs.spacecraft = spacecraft;
    obs.epoch = epoch;
    obs.truth_feature_id = f.id;
    obs.pixel = *pixel;
    if (config.noise_enabled) {
      obs.pixel.u += rng.normal(0.0, config.pixel_sigma);
      obs.pixel.v += rng.normal(0.0, config.pixel_sigma);
    }
    if (!camera.contains(obs.pixel)) continue;  // noise pushed it outside
    obs.descriptor = f.canonical_descriptor;
    if (config.noise_enabled)
      for (int k = 0; k < obs.descriptor.size(); ++k)
        obs.descriptor[k] += rng.normal(0.0, config.descriptor_sigma);
    out.push_back(std::move(obs));
  }
  return out;
}

RfMeasurement measure_rf(const SpacecraftState& state_i,
                         const SpacecraftState& state_j,
                         const ClockState& clock_i, const ClockState& clock_j,
                         int i, int j, double epoch,
                         const RfNoiseConfig& config, Rng& rng) {
  RfMeasurement m;
  m.transmitter = i;
  m.receiver = j;
  m.epoch = epoch;
  const Vec3 rel = state_j.position - state_i.position;
  const Vec3 relv = state_j.velocity - state_i.velocity;
  const double range = rel.norm();
  m.pseudorange =
      range + kSpeedOfLight * (clock_j.offset - clock_i.offset);
  m.doppler = relv.dot(rel) / range +
              kSpeedOfLight * (clock_j.drift - clock_i.drift);
  if (config.noise_enabled) {
    m.pseudorange += rng.normal(0.0, config.range_sigma);
    m.doppler += rng.normal(0.0, config.doppler_sigma);
  }
  return m;
}

FrameRotation measure_attitude(const FrameRotation& truth_aci_to_cf,
                               const AttitudeNoiseConfig& config, Rng& rng) {
  if (!config.noise_enabled) return truth_aci_to_cf;
  const double az = rng.normal(0.0, config.sigma_z);
  const double ax = rng.normal(0.0, config.sigma_xy);
  const double ay = rng.normal(0.0, config.sigma_xy);
  // Stochastic 3-1-2 rotation applied to the truth attitude.
  const Mat3 noise = rot_y(ay) * rot_x(ax) * rot_z(az);
  return FrameRotation(noise * truth_aci_to_cf.matrix,
                       truth_aci_to_cf.from_frame, truth_aci_to_cf.to_frame);
}

double acquisition_time(double nominal, const ClockState& own_clock,
                        double estimated_offset_s) {
  return nominal - own_clock.offset + estimated_offset_s;
}

FrameRotation nadir_attitude(const SpacecraftState& state) {
  const Vec3 z = -state.position.normalized();
  const Vec3 h = state.position.cross(state.velocity).normalized();
  const Vec3 x = h.cross(z).normalized();
  Mat3 m;
  m.row(0) = x;
  m.row(1) = h;
  m.row(2) = z;
  return FrameRotation(m, Frame::ACI, Frame::CF);
}

}  // namespace snac
