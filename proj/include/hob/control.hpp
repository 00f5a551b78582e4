#ifndef HOB_CONTROL_HPP
#define HOB_CONTROL_HPP

#include <cmath>
#include <iosfwd>
#include <limits>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "hob/error.hpp"

namespace hob {

enum class Objective { MaxReturn, TargetRoas, TargetCpc };

std::string_view to_string(Objective objective);
Objective parse_objective(std::string_view name);

/// Campaign constraints. MaxReturn carries an infinite ROI band.
struct Campaign {
  Objective objective = Objective::MaxReturn;
  double budget = 0.0;
  double target_roi = 0.0;
  double target_cpc = 0.0;
  double epsilon = std::numeric_limits<double>::infinity();

  static Campaign max_return(double budget);
  static Campaign roas(double budget, double target_roi, double epsilon);
  static Campaign cpc(double budget, double target_cpc);

  void validate() const;
};

struct ControlConfig {
  int periods = 24;  // M, control periods per day
  double period_duration = 1.0;
  double kp = 0.4;
  double ki = 0.1;
  double kd = 0.05;
  double eta_min = 1e-3;
  double eta_max = 1e3;
  double integral_limit = 5.0;  // anti-windup bound on the error integral
  int n_iter = 10;

  void validate() const;
};

struct ControlState {
  double eta = 1.0;
  int period_index = 0;
  double spend_so_far = 0.0;
  double value_so_far = 0.0;
  double error_integral = 0.0;
  double last_error = 0.0;
  bool clamped = false;  // last update hit an eta bound
};

struct PeriodObservation {
  double spend;
  double value;
};

/// Constraint error of the period just completed, relative to its target:
///   MaxReturn   (period spend - planned) / planned, where planned spreads the
///               remaining budget evenly over the remaining periods
///   TargetRoas  (roi - target) / target, cumulative
///   TargetCpc   (target - cpc) / target, cumulative
double control_error(const ControlState& before, PeriodObservation observed, const Campaign& campaign,
                     const ControlConfig& config);

/// One multiplicative PID update, eta <- clamp(eta * exp(+-(kp e + ki sum e + kd de))).
/// Overspend lowers eta under MaxReturn; ROI or CPC shortfalls lower eta under
/// the target objectives.
ControlState pid_step(const ControlState& state, PeriodObservation observed, const Campaign& campaign,
                      const ControlConfig& config);

struct ReplayPoint {
  double value;
  double cost;
};

enum class ConstraintKind { Cost, Roi, Cpc };

struct ConstraintTarget {
  ConstraintKind kind;
  double target;
  double tolerance;  // relative for Cost and Cpc, absolute for Roi

  static ConstraintTarget from_campaign(const Campaign& campaign, double cost_tolerance = 1e-3);
};

struct BisectionResult {
  double eta;
  ReplayPoint point;
  int iterations;
  bool converged;
};

double constraint_metric(ConstraintKind kind, const ReplayPoint& p);

namespace detail {
bool metric_increases_with_eta(ConstraintKind kind);
bool within_tolerance(const ConstraintTarget& t, double metric);
}  // namespace detail

/// Relative slack on the monotonicity check; shaded bids are monotone in eta
/// only to golden-section precision.
inline constexpr double kMonotoneSlack = 1e-6;

/// Bisection on eta inside [lo, hi] until the constraint metric is within
/// tolerance, at most `max_iterations` halvings; otherwise the low end of the
/// final bracket is returned with converged = false. Throws InfeasibleError
/// (with both endpoint metrics) if the bracket does not straddle the target
/// and ConfigError if the sampled metrics contradict monotonicity.
template <typename ReplayFn>
BisectionResult bisect_eta(ReplayFn&& replay, const ConstraintTarget& target, double lo, double hi,
                           int max_iterations = 60) {
  if (!(lo > 0.0) || !(hi > lo)) throw ConfigError("bisect_eta: invalid bracket");
  const bool increasing = detail::metric_increases_with_eta(target.kind);
  const auto metric = [&](const ReplayPoint& p) { return constraint_metric(target.kind, p); };

  ReplayPoint p_lo = replay(lo);
  ReplayPoint p_hi = replay(hi);
  double m_lo = metric(p_lo);
  double m_hi = metric(p_hi);
  if (detail::within_tolerance(target, m_lo)) return {lo, p_lo, 0, true};
  if (detail::within_tolerance(target, m_hi)) return {hi, p_hi, 0, true};
  const double low_side = increasing ? m_lo : m_hi;
  const double high_side = increasing ? m_hi : m_lo;
  if (!(low_side <= target.target && target.target <= high_side))
    throw InfeasibleError("bisect_eta: target " + std::to_string(target.target) +
                              " outside bracket metrics [" + std::to_string(m_lo) + ", " +
                              std::to_string(m_hi) + "]",
                          m_lo, m_hi);

  for (int it = 1; it <= max_iterations; ++it) {
    const double mid = 0.5 * (lo + hi);
    const ReplayPoint p = replay(mid);
    const double m = metric(p);
    const double slack = kMonotoneSlack * std::max(std::abs(m_lo), std::abs(m_hi));
    if (std::isnan(m) || m < std::min(m_lo, m_hi) - slack || m > std::max(m_lo, m_hi) + slack)
      throw ConfigError("bisect_eta: replay metric is not monotone in eta");
    if (detail::within_tolerance(target, m)) return {mid, p, it, true};
    if ((m < target.target) == increasing) {
      lo = mid;
      m_lo = m;
      p_lo = p;
    } else {
      hi = mid;
      m_hi = m;
    }
  }
  // Unconverged (the metric jumps across the target): keep the last point on
  // the satisfied side, i.e. the low-eta end.
  return {lo, p_lo, max_iterations, false};
}

struct TraceRow {
  int period;
  double eta;
  double eta3;
  double spend;
  double value;
  double roi;
  double error;
};

void write_trace_csv(std::ostream& out, std::span<const TraceRow> rows);

}  // namespace hob

#endif  // HOB_CONTROL_HPP
