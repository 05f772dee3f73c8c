#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace temper {

/// Argument outside the mathematical domain of an operation.
class DomainError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A quadrature or ODE routine failed to reach its tolerance.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Requested combination exists in principle but has no implementation here
/// (for example a closed form that only exists for Gaussians).
class UnsupportedConfiguration : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// A documented inequality failed when checked numerically.
class InvariantViolation : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Step size exceeded the stability limit of the discrete bound.
class GuardViolation : public std::runtime_error {
 public:
  GuardViolation(std::size_t step, double h, double limit)
      : std::runtime_error("step " + std::to_string(step) + ": h=" + std::to_string(h) +
                           " exceeds guard " + std::to_string(limit)),
        step_(step), h_(h), limit_(limit) {}
  std::size_t step() const { return step_; }
  double h() const { return h_; }
  double limit() const { return limit_; }

 private:
  std::size_t step_;
  double h_, limit_;
};

/// A particle left the finite reals during simulation.
class ExplosionError : public NumericalError {
 public:
  ExplosionError(std::size_t particle, std::uint64_t step, double clock)
      : NumericalError("particle " + std::to_string(particle) + " became non-finite at step " +
                       std::to_string(step) + " (t=" + std::to_string(clock) + ")"),
        particle_(particle), step_(step), clock_(clock) {}
  std::size_t particle() const { return particle_; }
  std::uint64_t step() const { return step_; }
  double clock() const { return clock_; }

 private:
  std::size_t particle_;
  std::uint64_t step_;
  double clock_;
};

/// Bad experiment configuration. `path` is the JSON field path, e.g. `$.schedule.type`.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string path, const std::string& what)
      : std::runtime_error(path + ": " + what), path_(std::move(path)) {}
  const std::string& path() const { return path_; }

 private:
  std::string path_;
};

}  // namespace temper
