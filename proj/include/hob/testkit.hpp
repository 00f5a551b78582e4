#ifndef HOB_TESTKIT_HPP
#define HOB_TESTKIT_HPP

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "hob/dataset.hpp"
#include "hob/landscape.hpp"
#include "hob/shading.hpp"

// Brute-force oracles. Deliberately naive; they share no code paths with the
// routines they check beyond the landscape CDF.
namespace hob::testkit {

struct GridBid {
  double bid;
  double surplus;
};

/// Exhaustive argmax of (V - x) F(x) over `points` evenly spaced bids on
/// [0, V], endpoints included. The first maximizer wins ties.
GridBid grid_optimal_bid(const ZieParamsd& params, double V, std::size_t points);

/// Root of the first-order condition h(x) = (1 - pi)(1 + lambda (V - x)) - e^{lambda x}
/// by bisection on [0, V]; 0 when h(0) <= 0.
double foc_root(const ZieParamsd& params, double V, double tolerance = 1e-12);

struct RoiBand {
  double target;
  double epsilon;
};

/// Per impression a list of (value, cost) choices; index 0 must be the null
/// choice (0, 0).
struct MckpInstance {
  std::vector<std::vector<Choice>> items;
  double budget = 0.0;
  std::optional<RoiBand> roi;
};

struct MckpSolution {
  std::vector<std::size_t> assignment;
  double value = 0.0;
  double cost = 0.0;
  bool feasible = false;
};

inline constexpr std::uint64_t kMaxMckpCombinations = 244140625;  // 5^12

bool mckp_feasible(const MckpInstance& instance, double value, double cost);

/// Enumerates every assignment (depth-first, pruning on budget). Refuses
/// instances beyond 12 impressions, 5 choices each, or 5^12 combinations.
MckpSolution solve_mckp_exhaustive(const MckpInstance& instance);

/// Applies the dual rule per impression at each eta and keeps the best
/// feasible result.
struct DualSweep {
  MckpSolution best;
  double eta = 0.0;
  std::vector<MckpSolution> per_eta;
};

DualSweep sweep_dual_rule(const MckpInstance& instance, std::span<const double> etas);

std::vector<double> log_spaced(double lo, double hi, std::size_t count);

/// Random instance with a null choice plus `choices - 1` increasing
/// (value, cost) levels per impression; budget is `budget_fraction` of the
/// cost of taking every top choice.
MckpInstance random_mckp(std::uint64_t seed, std::size_t impressions, std::size_t choices,
                         double budget_fraction = 0.4);

/// Clairvoyant optimum: sum_i max(0, eta v_i - w_i).
double optimal_surplus_baseline(const Dataset& data, double eta);

/// Central difference (C(eta + d) - C(eta - d)) / (V(eta + d) - V(eta - d)).
double finite_difference_mc(const std::function<double(double)>& cost,
                            const std::function<double(double)>& value, double eta, double delta);

/// Unit-value impressions whose winning prices are w_i = x_max sqrt((i + 0.5) / n),
/// all tagged `channel`. A uniform first-price bidder at eta <= x_max wins
/// V(eta) = n (eta / x_max)^2, a power law with b = 2.
Dataset power_law_dataset(std::size_t n, double x_max, const std::string& channel = "FPA+u");

}  // namespace hob::testkit

#endif  // HOB_TESTKIT_HPP
