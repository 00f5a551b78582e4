#include "hob/control.hpp"

#include <algorithm>
#include <iostream>
#include <ostream>

#include "hob/numfmt.hpp"

namespace hob {

std::string_view to_string(Objective objective) {
  switch (objective) {
    case Objective::MaxReturn: return "max_return";
    case Objective::TargetRoas: return "target_roas";
    case Objective::TargetCpc: return "target_cpc";
  }
  return "unknown";
}

Objective parse_objective(std::string_view name) {
  if (name == "max_return" || name == "MaxReturn") return Objective::MaxReturn;
  if (name == "target_roas" || name == "TargetROAS") return Objective::TargetRoas;
  if (name == "target_cpc" || name == "TargetCPC") return Objective::TargetCpc;
  throw ConfigError("unknown objective '" + std::string(name) + "'");
}

Campaign Campaign::max_return(double budget) {
  Campaign c;
  c.objective = Objective::MaxReturn;
  c.budget = budget;
  c.validate();
  return c;
}

Campaign Campaign::roas(double budget, double target_roi, double epsilon) {
  Campaign c;
  c.objective = Objective::TargetRoas;
  c.budget = budget;
  c.target_roi = target_roi;
  c.epsilon = epsilon;
  c.validate();
  return c;
}

Campaign Campaign::cpc(double budget, double cpc_target) {
  Campaign c;
  c.objective = Objective::TargetCpc;
  c.budget = budget;
  c.target_cpc = cpc_target;
  c.validate();
  return c;
}

void Campaign::validate() const {
  if (!(budget > 0.0)) throw ConfigError("campaign: budget must be positive");
  switch (objective) {
    case Objective::MaxReturn:
      if (!std::isinf(epsilon)) throw ConfigError("campaign: MaxReturn requires an infinite ROI band");
      break;
    case Objective::TargetRoas:
      if (!(target_roi > 0.0)) throw ConfigError("campaign: target_roi must be positive");
      if (!(epsilon >= 0.0)) throw ConfigError("campaign: epsilon must be nonnegative");
      break;
    case Objective::TargetCpc:
      if (!(target_cpc > 0.0)) throw ConfigError("campaign: target_cpc must be positive");
      break;
  }
}

void ControlConfig::validate() const {
  if (periods < 1) throw ConfigError("control: periods must be at least 1");
  if (!(eta_min > 0.0) || !(eta_min < eta_max)) throw ConfigError("control: need 0 < eta_min < eta_max");
  if (!std::isfinite(kp) || !std::isfinite(ki) || !std::isfinite(kd)) throw ConfigError("control: gains must be finite");
  if (n_iter < 1) throw ConfigError("control: n_iter must be at least 1");
}

double control_error(const ControlState& before, PeriodObservation observed, const Campaign& campaign,
                     const ControlConfig& config) {
  const double spend = before.spend_so_far + observed.spend;
  const double value = before.value_so_far + observed.value;
  switch (campaign.objective) {
    case Objective::MaxReturn: {
      const int remaining = std::max(1, config.periods - before.period_index);
      const double planned = (campaign.budget - before.spend_so_far) / remaining;
      if (planned <= 0.0) return observed.spend > 0.0 ? 1.0 : 0.0;
      return (observed.spend - planned) / planned;
    }
    case Objective::TargetRoas:
      if (spend <= 0.0) return 0.0;
      return (value / spend - campaign.target_roi) / campaign.target_roi;
    case Objective::TargetCpc:
      if (spend <= 0.0) return 0.0;
      if (value <= 0.0) return -1.0;
      return (campaign.target_cpc - spend / value) / campaign.target_cpc;
  }
  return 0.0;
}

ControlState pid_step(const ControlState& state, PeriodObservation observed, const Campaign& campaign,
                      const ControlConfig& config) {
  ControlState next = state;
  next.period_index += 1;
  next.spend_so_far += observed.spend;
  next.value_so_far += observed.value;

  const double e = control_error(state, observed, campaign, config);
  next.error_integral = std::clamp(state.error_integral + e, -config.integral_limit, config.integral_limit);
  const double u = config.kp * e + config.ki * next.error_integral + config.kd * (e - state.last_error);
  const double sign = campaign.objective == Objective::MaxReturn ? -1.0 : 1.0;
  const double raw = state.eta * std::exp(sign * u);
  next.eta = std::clamp(raw, config.eta_min, config.eta_max);
  next.clamped = next.eta != raw;
  if (next.clamped)
    std::clog << "pid_step: eta " << raw << " clamped to " << next.eta << " at period " << next.period_index << '\n';
  next.last_error = e;
  return next;
}

ConstraintTarget ConstraintTarget::from_campaign(const Campaign& campaign, double cost_tolerance) {
  switch (campaign.objective) {
    case Objective::MaxReturn: return {ConstraintKind::Cost, campaign.budget, cost_tolerance};
    case Objective::TargetRoas: return {ConstraintKind::Roi, campaign.target_roi, campaign.epsilon};
    case Objective::TargetCpc: return {ConstraintKind::Cpc, campaign.target_cpc, cost_tolerance};
  }
  throw ConfigError("unknown objective");
}

double constraint_metric(ConstraintKind kind, const ReplayPoint& p) {
  switch (kind) {
    case ConstraintKind::Cost: return p.cost;
    case ConstraintKind::Roi: return p.cost > 0.0 ? p.value / p.cost : std::numeric_limits<double>::infinity();
    case ConstraintKind::Cpc: return p.value > 0.0 ? p.cost / p.value : 0.0;
  }
  return 0.0;
}

namespace detail {

bool metric_increases_with_eta(ConstraintKind kind) { return kind != ConstraintKind::Roi; }

bool within_tolerance(const ConstraintTarget& t, double metric) {
  const double gap = std::abs(metric - t.target);
  return t.kind == ConstraintKind::Roi ? gap <= t.tolerance : gap <= t.tolerance * t.target;
}

}  // namespace detail

void write_trace_csv(std::ostream& out, std::span<const TraceRow> rows) {
  out << "period,eta,eta3,spend,value,roi,error\n";
  for (const auto& r : rows) {
    out << r.period << ',' << format_double(r.eta) << ',' << format_double(r.eta3) << ','
        << format_double(r.spend) << ',' << format_double(r.value) << ',' << format_double(r.roi) << ','
        << format_double(r.error) << '\n';
  }
}

}  // namespace hob
