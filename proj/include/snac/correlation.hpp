#pragma once

#include <map>
#include <vector>

#include "snac/frames.hpp"
#include "snac/rng.hpp"
#include "snac/truth_sim.hpp"

namespace snac {

struct MatchPair {
  int index_a = -1;
  int index_b = -1;
  double descriptor_dist2 = 0.0;
  double epipolar_distance = 0.0;  // filled by epipolar_reject [px]
  double mahalanobis = 0.0;        // |d| / sqrt(Sigma)
};

struct CorrelationConfig {
  double p_m = 0.001;
  double descriptor_gate = 100.0 * 100.0;  // delta_f,t
  double w_2d = 20.0;
  double w_u = 5.0;
  double w_v = 5.0;
  int retire_steps = 3;             // n_r
  double dedupe_distance = 500.0;   // d_r [m]
  double lowe_ratio = 0.8;
  int ransac_iterations = 500;
  // Sampson gate: ~2.5 sigma at the 2 px pixel noise so true pairs rarely
  // fall outside it; gross outliers sit orders of magnitude beyond.
  double ransac_threshold_px = 5.0;
  double ransac_min_inlier_fraction = 0.5;
};

/// Mutual nearest-neighbor descriptor matching with Lowe's ratio test.
/// A side with a single keypoint has no second neighbor; the ratio test
/// passes by convention.
std::vector<MatchPair> match_descriptors(
    const std::vector<KeypointObservation>& set_a,
    const std::vector<KeypointObservation>& set_b, double lowe_ratio);

struct ConsensusResult {
  std::vector<MatchPair> inliers;
  bool passthrough = false;  // fewer than 5 pairs: no consensus attempted
  Mat3 essential = Mat3::Zero();
};

/// Sample-consensus essential-matrix outlier rejection. Uses only camera
/// intrinsics, never the filter state. Throws ConsensusFailure when no
/// model reaches the minimum inlier fraction.
ConsensusResult consensus_reject(const std::vector<MatchPair>& pairs,
                                 const std::vector<KeypointObservation>& a,
                                 const std::vector<KeypointObservation>& b,
                                 const Mat3& calib_a, const Mat3& calib_b,
                                 const CorrelationConfig& config, Rng& rng);

/// Epipolar-constraint rejection with state-dependent uncertainty: the
/// distance of l2 from the epipolar line of l1 is gated at the 1D
/// Mahalanobis threshold using the joint spacecraft position covariance
/// and both pixel covariances.
std::vector<MatchPair> epipolar_reject(const std::vector<MatchPair>& pairs,
                                       const std::vector<KeypointObservation>& a,
                                       const std::vector<KeypointObservation>& b,
                                       const CameraModel& camera_a,
                                       const CameraModel& camera_b,
                                       const Mat6& joint_position_cov,
                                       const Mat2& pixel_cov_a,
                                       const Mat2& pixel_cov_b, double p_m);

/// Signed epipolar distance and its gate variance for one pair (exposed for
/// the finite-difference tests).
struct EpipolarDistance {
  double d = 0.0;
  double variance = 0.0;
  Eigen::Matrix<double, 1, 6> d_dgamma;
  Eigen::Matrix<double, 1, 2> d_dl1;
  Eigen::Matrix<double, 1, 2> d_dl2;
};
EpipolarDistance epipolar_distance(const CameraModel& camera_a,
                                   const CameraModel& camera_b,
                                   const PixelPoint& l1, const PixelPoint& l2,
                                   const Mat6& joint_position_cov,
                                   const Mat2& pixel_cov_a,
                                   const Mat2& pixel_cov_b);

/// Multi-view correlated keypoint set (indices into the per-spacecraft
/// keypoint lists; -1 when that view is absent).
struct CorrelatedSet {
  int middle = -1;
  int outer1 = -1;
  int outer2 = -1;
  double total_descriptor_dist2 = 0.0;

  int views() const {
    return (middle >= 0) + (outer1 >= 0) + (outer2 >= 0);
  }
};

/// Correlation sharing for a three-spacecraft formation: a middle keypoint
/// matched to both outer spacecraft correlates all three, restoring missed
/// outer-pair matches. Conflicts resolve to the smaller summed descriptor
/// distance.
std::vector<CorrelatedSet> share_correlations(
    const std::vector<MatchPair>& middle_to_outer1,
    const std::vector<MatchPair>& middle_to_outer2,
    const std::vector<MatchPair>& outer1_to_outer2);

/// Landmark database record.
struct LandmarkRecord {
  int id = -1;
  Vec3 acaf_position = Vec3::Zero();
  Mat3 covariance = Mat3::Identity();
  std::map<int, VecX> last_descriptor;  // per spacecraft
  int consecutive_misses = 0;
  int total_correlations = 0;
  bool retired = false;
};

/// Predicted image-plane belief of one filter landmark in one image.
struct LandmarkProjection {
  int landmark_id = -1;
  PixelPoint predicted;
  Mat2 projected_cov = Mat2::Zero();  // P_l,i (no pixel noise)
  VecX descriptor;                    // f_i for this image's spacecraft
  bool valid = false;
};

struct F2scAssignment {
  int landmark_id = -1;
  int keypoint = -1;
  double cost = 0.0;
  double m2d = 0.0;
  double mu = 0.0;
  double mv = 0.0;
  double desc2 = 0.0;
};

/// Filter-to-spacecraft correlation: minimum weighted cost over keypoints
/// subject to the 2D/1D Mahalanobis and descriptor gates; one keypoint per
/// landmark, each keypoint claimed at most once (greedy by ascending cost).
std::vector<F2scAssignment> correlate_filter_to_image(
    const std::vector<LandmarkProjection>& landmarks,
    const std::vector<KeypointObservation>& keypoints,
    const Mat2& pixel_noise_cov, const CorrelationConfig& config);

/// Covariance-overlap statistic of the retirement dedupe rule.
double eigenvalue_overlap(const Mat3& cov_a, const Mat3& cov_b,
                          double distance);

struct RetireResult {
  std::vector<int> retired_ids;
  std::vector<int> deleted_ids;  // never correlated, or deduped away
};

/// Retire landmarks that have missed `retire_steps` consecutive
/// correlations. Never-correlated landmarks are deleted outright; retired
/// ones are deduplicated against nearby retired landmarks by covariance
/// overlap.
RetireResult retire_and_dedupe(std::vector<LandmarkRecord>& tracked,
                               std::vector<LandmarkRecord>& retired_db,
                               const CorrelationConfig& config);

}  // namespace snac
