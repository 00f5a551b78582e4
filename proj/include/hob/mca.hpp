#ifndef HOB_MCA_HPP
#define HOB_MCA_HPP

#include <cmath>
#include <deque>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "hob/error.hpp"

namespace hob {

/// V(eta) ~= a * eta^b fitted in log-log space over [eta_lo, eta_hi].
struct PowerLawFit {
  double a;
  double b;
  double eta_lo;
  double eta_hi;
  double residual;       // RMS log residual
  bool floored = false;  // b was raised to the configured floor

  double value(double eta) const { return a * std::pow(eta, b); }
};

/// eta drives SPA and shaded FPA; eta3 drives the uniform-bidding FPA channel.
struct ChannelEtas {
  double eta;
  double eta3;
};

enum class McMethod { Analytic, FiniteDifference };

struct MarginalCostEstimate {
  std::string channel;
  double mc;
  McMethod method;
  double delta;  // eta perturbation, zero for analytic estimates
};

template <typename Scalar>
Scalar mc_spa(Scalar eta) {
  if (!(eta > Scalar(0))) throw DomainError("mc_spa: eta must be positive");
  return eta;
}

/// eta + V/V' for a uniform first-price bidder; V/V' = eta/b under a power law.
template <typename Scalar>
Scalar mc_fpa_uniform(Scalar eta, const PowerLawFit& fit) {
  if (!(eta > Scalar(0))) throw DomainError("mc_fpa_uniform: eta must be positive");
  if (!(fit.b > 0.0)) throw DegenerateError("mc_fpa_uniform: power-law exponent must be positive");
  return eta * (Scalar(1) + Scalar(1) / Scalar(fit.b));
}

/// Surplus-maximizing shading makes the marginal cost equal to eta itself.
template <typename Scalar>
Scalar mc_fpa_shaded(Scalar eta) {
  if (!(eta > Scalar(0))) throw DomainError("mc_fpa_shaded: eta must be positive");
  return eta;
}

enum class ExponentPolicy { Reject, Floor };

struct PowerLawOptions {
  double b_floor = 1e-3;
  ExponentPolicy policy = ExponentPolicy::Reject;
};

/// Ordinary least squares of log V on log eta. Nonpositive coordinates and
/// fewer than two distinct etas are errors. An exponent at or below the floor
/// throws DegenerateError under Reject, or is floored (with a warning on
/// stderr and `floored` set) under Floor.
PowerLawFit fit_power_law(std::span<const std::pair<double, double>> points,
                          const PowerLawOptions& options = {});

/// eta3 = eta / (1 + 1/b), so that mc_fpa_uniform(eta3) == eta.
template <typename Scalar>
Scalar align_eta3(Scalar eta, const PowerLawFit& fit) {
  if (!(eta > Scalar(0))) throw DomainError("align_eta3: eta must be positive");
  if (!(fit.b > 0.0)) throw DegenerateError("align_eta3: power-law exponent must be positive");
  return eta / (Scalar(1) + Scalar(1) / Scalar(fit.b));
}

inline ChannelEtas align_channels(double eta, const PowerLawFit& fit) {
  return {eta, align_eta3(eta, fit)};
}

struct ReplayAlignmentOptions {
  int window = 5;             // curve samples per local fit
  double spread = 0.2;        // samples at eta3 * exp(+-spread)
  double floor = 1e-6;        // smallest eta3, relative to eta
  double tolerance = 1e-6;    // relative bracket width on eta3
  int max_iterations = 60;
  PowerLawOptions fit{1e-12, ExponentPolicy::Reject};
};

struct Alignment {
  ChannelEtas etas;
  PowerLawFit fit;
  int iterations;
};

/// Local power-law fit of the value curve from `window` samples spread
/// log-evenly around eta3. Zero-valued samples are dropped; fewer than two
/// usable samples throw DegenerateError.
template <typename ValueFn>
PowerLawFit local_power_law(double eta3, ValueFn&& value_at, const ReplayAlignmentOptions& options) {
  if (options.window < 2) throw ConfigError("local_power_law: window must hold two points");
  std::vector<std::pair<double, double>> points;
  for (int k = 0; k < options.window; ++k) {
    const double t = -options.spread + 2.0 * options.spread * k / (options.window - 1);
    const double e = eta3 * std::exp(t);
    const double v = value_at(e);
    if (v > 0.0) points.emplace_back(e, v);
  }
  if (points.size() < 2) throw DegenerateError("local_power_law: value curve is zero near eta3");
  return fit_power_law(points, options.fit);
}

/// Offline alignment: finds eta3 in [floor * eta, eta] where the uniform
/// channel's marginal cost eta3 (1 + 1/b), with b from a local power-law fit
/// around eta3, equals eta. Candidates are scanned downward on a fixed
/// log-grid of ratio sqrt(2) (independent of eta) until the marginal cost
/// drops below eta, then the grid cell is bisected on log eta3. The grid and
/// bisection path depend on eta only through the comparisons, so eta3 is
/// nondecreasing in eta. If the floor is reached first, the floor is returned.
template <typename ValueFn>
Alignment align_by_replay(double eta, ValueFn&& value_at, const ReplayAlignmentOptions& options = {}) {
  if (!(eta > 0.0)) throw DomainError("align_by_replay: eta must be positive");
  if (!(options.floor > 0.0 && options.floor < 1.0)) throw ConfigError("align_by_replay: floor must lie in (0, 1)");
  // A flat local curve means no value can be bought at any price.
  const auto below = [&](double log_e3) {
    try {
      return mc_fpa_uniform(std::exp(log_e3), local_power_law(std::exp(log_e3), value_at, options)) < eta;
    } catch (const DegenerateError&) {
      return false;
    }
  };
  const auto final_fit = [&](double e3) {
    try {
      return local_power_law(e3, value_at, options);
    } catch (const DegenerateError&) {
      ReplayAlignmentOptions floored = options;
      floored.fit = {1e-3, ExponentPolicy::Floor};
      try {
        return local_power_law(e3, value_at, floored);
      } catch (const DegenerateError&) {
        return PowerLawFit{0.0, floored.fit.b_floor, e3, e3, 0.0, true};
      }
    }
  };
  // MC exceeds eta3 itself, so nothing above eta can qualify.
  const double step = 0.5 * std::log(2.0);
  const double bottom = std::log(options.floor * eta);
  double k = std::ceil(std::log(eta) / step);
  double lo = 0.0, hi = 0.0;
  for (;; k -= 1.0) {
    const double g = k * step;
    if (g < bottom) {
      const double e3 = options.floor * eta;
      return {{eta, e3}, final_fit(e3), 0};
    }
    if (below(g)) {
      lo = g;
      hi = g + step;
      break;
    }
  }
  int it = 0;
  while (it < options.max_iterations && hi - lo > options.tolerance) {
    ++it;
    const double mid = 0.5 * (lo + hi);
    if (below(mid))
      lo = mid;
    else
      hi = mid;
  }
  const double eta3 = std::min(eta, std::exp(0.5 * (lo + hi)));
  return {{eta, eta3}, final_fit(eta3), it};
}

/// Sliding window of the last K (eta3, realized value) observations from the
/// uniform channel's control history.
class PowerLawWindow {
 public:
  explicit PowerLawWindow(std::size_t capacity = 5, PowerLawOptions options = {1e-3, ExponentPolicy::Floor})
      : capacity_(capacity), options_(options) {}

  void observe(double eta3, double value);

  /// Fit over the window, or nullopt until two distinct positive points exist.
  std::optional<PowerLawFit> fit() const;

  std::size_t size() const { return points_.size(); }

 private:
  std::size_t capacity_;
  PowerLawOptions options_;
  std::deque<std::pair<double, double>> points_;
};

}  // namespace hob

#endif  // HOB_MCA_HPP
