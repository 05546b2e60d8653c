#pragma once

#include <stdexcept>
#include <string>

namespace swipt {

/// Invalid distribution, parameter or config value.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& what, int line = 0)
      : std::runtime_error(line > 0 ? "line " + std::to_string(line) + ": " + what : what),
        line_(line) {}
  int line() const noexcept { return line_; }

 private:
  int line_;
};

/// Caller passed inconsistent arguments (e.g. a policy for a different ensemble).
class UsageError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// The energy target cannot be met. Carries the largest achievable value.
class InfeasibleError : public std::runtime_error {
 public:
  InfeasibleError(const std::string& what, double achievable, std::string binding = "energy")
      : std::runtime_error(what), achievable_(achievable), binding_(std::move(binding)) {}
  double achievable() const noexcept { return achievable_; }
  const std::string& binding() const noexcept { return binding_; }

 private:
  double achievable_;
  std::string binding_;
};

class ConvergenceError : public std::runtime_error {
 public:
  ConvergenceError(const std::string& what, int iterations, double gap)
      : std::runtime_error(what), iterations_(iterations), gap_(gap) {}
  int iterations() const noexcept { return iterations_; }
  double gap() const noexcept { return gap_; }

 private:
  int iterations_;
  double gap_;
};

/// A closed-form construction does not apply to the given dual point.
class DegenerateError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

}  // namespace swipt
