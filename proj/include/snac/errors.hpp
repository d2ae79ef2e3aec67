#pragma once

#include <stdexcept>
#include <string>

namespace snac {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct BehindCamera : Error {
  BehindCamera() : Error("point at or behind the camera plane") {}
};
struct SingularCovariance : Error {
  explicit SingularCovariance(const std::string& w = "covariance is singular")
      : Error(w) {}
};
struct InvalidProbability : Error {
  InvalidProbability() : Error("probability must lie in (0, 1]") {}
};
struct OriginSingularity : Error {
  OriginSingularity() : Error("field evaluation at the origin") {}
};
struct StepFailure : Error {
  explicit StepFailure(const std::string& w) : Error(w) {}
};
struct DegenerateFit : Error {
  explicit DegenerateFit(const std::string& w) : Error(w) {}
};
struct DegenerateGeometry : Error {
  explicit DegenerateGeometry(const std::string& w) : Error(w) {}
};
struct NonConvergence : Error {
  explicit NonConvergence(const std::string& w) : Error(w) {}
};
struct ConsensusFailure : Error {
  explicit ConsensusFailure(const std::string& w) : Error(w) {}
};
struct RankDeficient : Error {
  explicit RankDeficient(const std::string& w) : Error(w) {}
};
struct NumericalFailure : Error {
  explicit NumericalFailure(const std::string& w) : Error(w) {}
};
struct NoMinimum : Error {
  explicit NoMinimum(const std::string& w) : Error(w) {}
};
struct UnknownId : Error {
  explicit UnknownId(const std::string& w) : Error(w) {}
};
struct ConfigError : Error {
  explicit ConfigError(const std::string& w) : Error(w) {}
};

}  // namespace snac
