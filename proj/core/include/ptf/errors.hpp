#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace ptf {

/// Base class of every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Point and tangent vector belong to different charts, or a point is not on the manifold.
class ChartMismatch : public Error {
 public:
  using Error::Error;
};

class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// Two torus-valued maps carry different homotopy matrices.
class HomotopyMismatch : public Error {
 public:
  using Error::Error;
};

class ConvergenceFailure : public Error {
 public:
  using Error::Error;
};

/// Non-finite coordinates after a flow step.
class BlowupError : public Error {
 public:
  BlowupError(std::size_t node, const std::string& message) : Error(message), node_(node) {}
  std::size_t node() const noexcept { return node_; }

 private:
  std::size_t node_;
};

class CheckpointError : public Error {
 public:
  using Error::Error;
};

/// Configuration problem; `location()` names the offending section/key.
class ConfigError : public Error {
 public:
  ConfigError(std::string location, const std::string& message)
      : Error(location.empty() ? message : location + ": " + message), location_(std::move(location)) {}
  const std::string& location() const noexcept { return location_; }

 private:
  std::string location_;
};

}  // namespace ptf
