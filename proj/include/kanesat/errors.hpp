#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>

namespace kanesat {

/// Base class for every failure raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Pitch angle reached the 3-2-1 kinematic singularity guard.
class GimbalLock : public Error {
 public:
  using Error::Error;
};

/// The system mass matrix L is not positive definite.
class SingularMass : public Error {
 public:
  using Error::Error;
};

/// A partition of L (L3 or its Schur complement) failed to factor.
class SingularBlock : public Error {
 public:
  using Error::Error;
};

/// A 3x3 matrix offered as a rotation is not orthonormal with det +1.
class InvalidRotation : public Error {
 public:
  using Error::Error;
};

/// Point offered as an equilibrium has nonzero rates.
class NotEquilibrium : public Error {
 public:
  using Error::Error;
};

class NotStabilizable : public Error {
 public:
  using Error::Error;
};

/// Pole assignment cannot place `pole_index` (empty allowable subspace).
class Uncontrollable : public Error {
 public:
  Uncontrollable(const std::string& what, std::size_t pole_index)
      : Error(what), pole_index_(pole_index) {}
  std::size_t pole_index() const noexcept { return pole_index_; }

 private:
  std::size_t pole_index_;
};

/// Eigenvector matrix became numerically singular.
class Degenerate : public Error {
 public:
  using Error::Error;
};

/// Closed-loop simulation left the state envelope.
class Diverged : public Error {
 public:
  Diverged(const std::string& what, std::size_t step)
      : Error(what), step_(step) {}
  std::size_t step() const noexcept { return step_; }

 private:
  std::size_t step_;
};

/// Malformed or semantically invalid plant configuration. `key` is the
/// dotted path of the offending entry, e.g. "bodies.boom.mass".
class ConfigError : public Error {
 public:
  ConfigError(const std::string& what, std::string key)
      : Error(what), key_(std::move(key)) {}
  const std::string& key() const noexcept { return key_; }

 private:
  std::string key_;
};

}  // namespace kanesat
