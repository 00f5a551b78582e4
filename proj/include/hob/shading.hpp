#ifndef HOB_SHADING_HPP
#define HOB_SHADING_HPP

#include <cmath>
#include <cstddef>
#include <span>
#include <utility>

#include "hob/error.hpp"
#include "hob/landscape.hpp"

namespace hob {

inline constexpr int kOfflineIterations = 40;
inline constexpr int kOnlineIterations = 10;

/// Value scaled by the control parameter, V = eta * v.
template <typename Scalar>
struct ScaledValue {
  Scalar v;
  Scalar eta;

  ScaledValue(Scalar v_, Scalar eta_) : v(v_), eta(eta_) {
    if (v < Scalar(0)) throw DomainError("ScaledValue: negative value");
    if (!(eta > Scalar(0))) throw DomainError("ScaledValue: eta must be positive");
  }

  Scalar scaled() const { return eta * v; }
};

template <typename Scalar>
struct BidDecision {
  Scalar bid;
  Scalar win_prob;
  Scalar expected_surplus;
  bool interior;
};

/// Expected surplus g(x) = (V - x) F(x) of bidding x in a first-price auction.
template <typename Scalar>
Scalar surplus(const ZieParams<Scalar>& params, Scalar V, Scalar x) {
  if (x < Scalar(0) || x > V) throw DomainError("surplus: bid outside [0, V]");
  return (V - x) * zie_cdf(params, x);
}

/// True iff (1 - pi)(1 + lambda V) > 1, i.e. the surplus has an interior
/// maximizer. Equality falls on the zero-bid side.
template <typename Scalar>
bool zero_bid_test(const ZieParams<Scalar>& params, Scalar V) {
  return (Scalar(1) - params.pi) * (Scalar(1) + params.lambda * V) > Scalar(1);
}

/// Golden-section maximization of `f` on [a, b] with a fixed number of
/// bracket reductions; returns the midpoint of the final bracket.
template <typename Scalar, typename Fn>
Scalar golden_section_maximize(Fn&& f, Scalar a, Scalar b, int n_iter) {
  const Scalar phi = (Scalar(1) + std::sqrt(Scalar(5))) / Scalar(2);
  Scalar c = b - (b - a) / phi;
  Scalar d = a + (b - a) / phi;
  for (int i = 0; i < n_iter; ++i) {
    if (f(c) < f(d))
      a = c;
    else
      b = d;
    c = b - (b - a) / phi;
    d = a + (b - a) / phi;
  }
  return (a + b) / Scalar(2);
}

/// Surplus-maximizing first-price bid against a ZIE landscape. The zero-bid
/// test decides between the organic-only bid 0 and a golden-section search
/// on [0, V], where the surplus is strictly unimodal.
template <typename Scalar>
BidDecision<Scalar> optimal_bid(const ZieParams<Scalar>& params, Scalar V,
                                int n_iter = kOfflineIterations) {
  if (V < Scalar(0)) throw DomainError("optimal_bid: negative scaled value");
  if (n_iter < 1) throw DomainError("optimal_bid: n_iter must be at least 1");
  const bool interior = V > Scalar(0) && zero_bid_test(params, V);
  Scalar bid(0);
  if (interior) {
    const auto g = [&](Scalar x) { return (V - x) * zie_cdf(params, x); };
    bid = golden_section_maximize(g, Scalar(0), V, n_iter);
  }
  const Scalar p = zie_cdf(params, bid);
  return {bid, p, (V - bid) * p, interior};
}

/// Golden-section shading against an arbitrary fitted distribution. Used for
/// the baseline families, where no closed-form zero-bid test exists; the
/// zero bid is kept when it beats the searched point.
inline BidDecision<double> optimal_bid(const WinModel& model, double V, int n_iter = kOfflineIterations) {
  if (auto zie = model.as_zie()) return optimal_bid(*zie, V, n_iter);
  if (V < 0.0) throw DomainError("optimal_bid: negative scaled value");
  if (n_iter < 1) throw DomainError("optimal_bid: n_iter must be at least 1");
  if (V == 0.0) return {0.0, model.cdf(0.0), 0.0, false};
  const auto g = [&](double x) { return (V - x) * model.cdf(x); };
  double bid = golden_section_maximize(g, 0.0, V, n_iter);
  bool interior = true;
  if (g(bid) <= g(0.0)) {
    bid = 0.0;
    interior = false;
  }
  const double p = model.cdf(bid);
  return {bid, p, (V - bid) * p, interior};
}

struct Choice {
  double value;
  double cost;
};

/// argmax_k (eta * v_k - w_k); ties go to the lower cost, then lower index.
inline std::size_t dual_decision_rule(std::span<const Choice> choices, double eta) {
  if (choices.empty()) throw DomainError("dual_decision_rule: empty choice list");
  std::size_t best = 0;
  double best_score = eta * choices[0].value - choices[0].cost;
  for (std::size_t k = 1; k < choices.size(); ++k) {
    const double score = eta * choices[k].value - choices[k].cost;
    if (score > best_score || (score == best_score && choices[k].cost < choices[best].cost)) {
      best = k;
      best_score = score;
    }
  }
  return best;
}

}  // namespace hob

#endif  // HOB_SHADING_HPP
