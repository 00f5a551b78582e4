#ifndef HOB_ERROR_HPP
#define HOB_ERROR_HPP

#include <stdexcept>
#include <string>

namespace hob {

// Argument outside the mathematical domain of an operation (negative price,
// bid outside [0, V], nonpositive multiplier).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// Data that admits no finite estimate: all-zero samples for a rate, flat
// value curves, identical abscissae.
class DegenerateError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Invalid configuration or schema mismatch. Maps to CLI exit code 2.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A constraint target that the replay cannot reach inside the bracket.
// Maps to CLI exit code 3.
class InfeasibleError : public std::runtime_error {
 public:
  InfeasibleError(const std::string& what, double lo_metric, double hi_metric)
      : std::runtime_error(what), lo_metric_(lo_metric), hi_metric_(hi_metric) {}

  double lo_metric() const { return lo_metric_; }
  double hi_metric() const { return hi_metric_; }

 private:
  double lo_metric_;
  double hi_metric_;
};

// Non-finite loss or objective during an iterative method. Maps to exit code 4.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace hob

#endif  // HOB_ERROR_HPP
