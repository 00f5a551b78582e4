#include "hob/testkit.hpp"

#include <cmath>
#include <random>

#include "hob/hash.hpp"

namespace hob::testkit {

GridBid grid_optimal_bid(const ZieParamsd& params, double V, std::size_t points) {
  if (points < 2) throw DomainError("grid_optimal_bid: need at least two grid points");
  if (V < 0.0) throw DomainError("grid_optimal_bid: negative scaled value");
  GridBid best{0.0, V * zie_cdf(params, 0.0)};
  const double step = V / static_cast<double>(points - 1);
  for (std::size_t k = 1; k < points; ++k) {
    const double x = k + 1 == points ? V : step * static_cast<double>(k);
    const double g = (V - x) * zie_cdf(params, x);
    if (g > best.surplus) best = {x, g};
  }
  return best;
}

double foc_root(const ZieParamsd& params, double V, double tolerance) {
  const auto h = [&](double x) {
    return (1.0 - params.pi) * (1.0 + params.lambda * (V - x)) - std::exp(params.lambda * x);
  };
  if (!(h(0.0) > 0.0)) return 0.0;
  double lo = 0.0, hi = V;  // h(V) = (1 - pi) - e^{lambda V} < 0
  while (hi - lo > tolerance) {
    const double mid = 0.5 * (lo + hi);
    if (h(mid) > 0.0)
      lo = mid;
    else
      hi = mid;
    if (mid == lo && mid == hi) break;
  }
  return 0.5 * (lo + hi);
}

bool mckp_feasible(const MckpInstance& instance, double value, double cost) {
  if (cost > instance.budget) return false;
  if (!instance.roi) return true;
  if (cost <= 0.0) return value == 0.0;
  return std::abs(value / cost - instance.roi->target) <= instance.roi->epsilon;
}

namespace {

void check_null_choices(const MckpInstance& instance) {
  for (const auto& item : instance.items)
    if (item.empty() || item[0].value != 0.0 || item[0].cost != 0.0)
      throw ConfigError("mckp: every impression needs the null choice (0, 0) first");
}

struct Search {
  const MckpInstance& inst;
  std::vector<std::size_t> current;
  MckpSolution best;

  void run(std::size_t i, double value, double cost) {
    if (cost > inst.budget) return;  // costs are nonnegative, so no completion recovers
    if (i == inst.items.size()) {
      if (!mckp_feasible(inst, value, cost)) return;
      if (!best.feasible || value > best.value || (value == best.value && cost < best.cost))
        best = {current, value, cost, true};
      return;
    }
    for (std::size_t k = 0; k < inst.items[i].size(); ++k) {
      current[i] = k;
      run(i + 1, value + inst.items[i][k].value, cost + inst.items[i][k].cost);
    }
  }
};

}  // namespace

MckpSolution solve_mckp_exhaustive(const MckpInstance& instance) {
  if (instance.items.size() > 12) throw ConfigError("mckp: more than 12 impressions");
  check_null_choices(instance);
  std::uint64_t combos = 1;
  for (const auto& item : instance.items) {
    if (item.size() > 5) throw ConfigError("mckp: more than 5 choices for an impression");
    combos *= item.size();
  }
  if (combos > kMaxMckpCombinations) throw ConfigError("mckp: instance too large for enumeration");
  for (const auto& item : instance.items)
    for (const auto& c : item)
      if (c.cost < 0.0) throw ConfigError("mckp: negative cost");

  Search s{instance, std::vector<std::size_t>(instance.items.size(), 0), {}};
  s.run(0, 0.0, 0.0);
  if (!s.best.feasible) s.best.assignment.assign(instance.items.size(), 0);
  return s.best;
}

DualSweep sweep_dual_rule(const MckpInstance& instance, std::span<const double> etas) {
  check_null_choices(instance);
  DualSweep out;
  for (double eta : etas) {
    MckpSolution sol;
    for (const auto& item : instance.items) {
      const std::size_t k = dual_decision_rule(item, eta);
      sol.assignment.push_back(k);
      sol.value += item[k].value;
      sol.cost += item[k].cost;
    }
    sol.feasible = mckp_feasible(instance, sol.value, sol.cost);
    if (sol.feasible && (!out.best.feasible || sol.value > out.best.value)) {
      out.best = sol;
      out.eta = eta;
    }
    out.per_eta.push_back(std::move(sol));
  }
  return out;
}

std::vector<double> log_spaced(double lo, double hi, std::size_t count) {
  if (!(lo > 0.0) || !(hi > lo) || count < 2) throw DomainError("log_spaced: need 0 < lo < hi and count >= 2");
  std::vector<double> out(count);
  const double step = std::log(hi / lo) / static_cast<double>(count - 1);
  for (std::size_t k = 0; k < count; ++k) out[k] = lo * std::exp(step * static_cast<double>(k));
  return out;
}

MckpInstance random_mckp(std::uint64_t seed, std::size_t impressions, std::size_t choices, double budget_fraction) {
  if (choices < 2) throw DomainError("random_mckp: need the null choice plus at least one level");
  std::mt19937_64 rng(splitmix64(seed));
  std::uniform_real_distribution<double> unit(0.5, 1.5);
  MckpInstance inst;
  double top_cost = 0.0;
  for (std::size_t i = 0; i < impressions; ++i) {
    const double quality = unit(rng);
    const double scale = unit(rng);
    std::vector<Choice> item{{0.0, 0.0}};
    // First-price bid levels against an exponential landscape.
    for (std::size_t k = 1; k < choices; ++k) {
      const double bid = 2.0 * static_cast<double>(k) / static_cast<double>(choices - 1);
      const double p = 1.0 - std::exp(-bid / scale);
      item.push_back({quality * p, bid * p});
    }
    top_cost += item.back().cost;
    inst.items.push_back(std::move(item));
  }
  inst.budget = budget_fraction * top_cost;
  return inst;
}

double optimal_surplus_baseline(const Dataset& data, double eta) {
  double total = 0.0;
  for (const auto& r : data.rows) total += std::max(0.0, eta * r.value - r.winning_price);
  return total;
}

double finite_difference_mc(const std::function<double(double)>& cost, const std::function<double(double)>& value,
                            double eta, double delta) {
  const double dv = value(eta + delta) - value(eta - delta);
  if (dv == 0.0) throw DegenerateError("finite_difference_mc: flat value curve");
  return (cost(eta + delta) - cost(eta - delta)) / dv;
}

Dataset power_law_dataset(std::size_t n, double x_max, const std::string& channel) {
  if (n == 0 || !(x_max > 0.0)) throw DomainError("power_law_dataset: need n > 0 and x_max > 0");
  Dataset d;
  d.feature_dim = 1;
  d.rows.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    Impression imp;
    imp.id = "p" + std::to_string(i);
    imp.features = Eigen::VectorXd::Zero(1);
    imp.value = 1.0;
    imp.winning_price = x_max * std::sqrt((static_cast<double>(i) + 0.5) / static_cast<double>(n));
    imp.channel = channel;
    d.rows.push_back(std::move(imp));
  }
  return d;
}

}  // namespace hob::testkit
