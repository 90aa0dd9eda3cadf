#pragma once

#include <stdexcept>
#include <string>

namespace seisfrag {

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kGravity = 9.81;

/// Input outside the domain of an operation (non-positive parameter, bad index...).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// A statistical fit or root-find failed; `what()` carries the diagnostics.
class FitError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Time integration produced a non-finite state.
class SolverError : public std::runtime_error {
 public:
  SolverError(const std::string& msg, double time)
      : std::runtime_error(msg + " (t = " + std::to_string(time) + " s)"), time_(time) {}
  double time() const noexcept { return time_; }

 private:
  double time_;
};

// Standard normal helpers.
double normal_cdf(double x);
double normal_pdf(double x);
double normal_quantile(double p);

}  // namespace seisfrag
