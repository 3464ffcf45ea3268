#ifndef CAPMINK_ERRORS_HPP
#define CAPMINK_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace capmink {

// Base class for everything this library throws on purpose.
struct Error : std::runtime_error {
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// ---- geometry ----
struct UnboundedBody : Error {
  explicit UnboundedBody(const std::string& m) : Error(m) {}
};
struct DegenerateBody : Error {
  explicit DegenerateBody(const std::string& m) : Error(m) {}
};
struct LengthMismatch : Error {
  explicit LengthMismatch(const std::string& m) : Error(m) {}
};

// ---- measures ----
struct EmptyMeasure : Error {
  explicit EmptyMeasure(const std::string& m) : Error(m) {}
};
struct InfeasibleProjection : Error {
  explicit InfeasibleProjection(const std::string& m) : Error(m) {}
};
struct NonpositiveDensity : Error {
  explicit NonpositiveDensity(const std::string& m) : Error(m) {}
};

// ---- potential / capacity ----
struct MeshFailure : Error {
  explicit MeshFailure(const std::string& m) : Error(m) {}
};
struct NewtonDivergence : Error {
  explicit NewtonDivergence(const std::string& m) : Error(m) {}
};
struct IllConditioned : Error {
  explicit IllConditioned(const std::string& m) : Error(m) {}
};
struct BackendUnavailable : Error {
  explicit BackendUnavailable(const std::string& m) : Error(m) {}
};
struct InactiveNormal : Error {
  explicit InactiveNormal(const std::string& m) : Error(m) {}
};

// ---- inverse problem ----
struct Inadmissible : Error {
  explicit Inadmissible(const std::string& m) : Error(m) {}
};
// Raised internally when an optimizer iterate loses a facet; the driver
// recovers (support floor, halved step) rather than surfacing this.
struct DegenerateIterate : Error {
  explicit DegenerateIterate(const std::string& m) : Error(m) {}
};

// ---- input files ----
struct BadInput : Error {
  explicit BadInput(const std::string& m) : Error(m) {}
};

}  // namespace capmink

#endif
