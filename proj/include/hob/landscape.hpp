#ifndef HOB_LANDSCAPE_HPP
#define HOB_LANDSCAPE_HPP

#include <Eigen/Dense>

#include <array>
#include <cmath>
#include <concepts>
#include <cstdint>
#include <iosfwd>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "hob/error.hpp"

namespace hob {

/// Zero-inflated exponential winning-price landscape: an atom of mass `pi`
/// at zero (organic wins) and an Exponential(`lambda`) tail.
template <typename Scalar>
struct ZieParams {
  Scalar pi;
  Scalar lambda;

  ZieParams(Scalar pi_, Scalar lambda_) : pi(pi_), lambda(lambda_) {
    if (!(pi >= Scalar(0) && pi < Scalar(1)))
      throw DomainError("ZieParams: pi must lie in [0, 1)");
    if (!(lambda > Scalar(0)) || !std::isfinite(lambda))
      throw DomainError("ZieParams: lambda must be positive and finite");
  }
};

using ZieParamsd = ZieParams<double>;

/// P(w <= x) = pi + (1 - pi)(1 - exp(-lambda x)).
template <typename Scalar>
Scalar zie_cdf(const ZieParams<Scalar>& p, Scalar x) {
  if (x < Scalar(0)) throw DomainError("zie_cdf: negative price");
  return Scalar(1) - (Scalar(1) - p.pi) * std::exp(-p.lambda * x);
}

// Density of the continuous part, x > 0.
template <typename Scalar>
Scalar zie_pdf(const ZieParams<Scalar>& p, Scalar x) {
  return p.lambda * (Scalar(1) - p.pi) * std::exp(-p.lambda * x);
}

/// Per-sample negative log-likelihood. A zero price under pi == 0 has zero
/// likelihood and returns +infinity rather than throwing.
template <typename Scalar>
Scalar zie_nll(const ZieParams<Scalar>& p, Scalar w) {
  if (w < Scalar(0)) throw DomainError("zie_nll: negative price");
  if (w == Scalar(0)) {
    if (p.pi == Scalar(0)) return std::numeric_limits<Scalar>::infinity();
    return -std::log(p.pi);
  }
  return -std::log1p(-p.pi) - std::log(p.lambda) + p.lambda * w;
}

// E[w ; w <= x]: expected second-price payment when bidding x.
template <typename Scalar>
Scalar zie_partial_mean(const ZieParams<Scalar>& p, Scalar x) {
  const Scalar inv = Scalar(1) / p.lambda;
  return (Scalar(1) - p.pi) * (inv - std::exp(-p.lambda * x) * (x + inv));
}

enum class DistKind { Zie, Exponential, LogNormal, Gamma };

std::string_view to_string(DistKind kind);
DistKind parse_dist_kind(std::string_view name);

/// A fitted winning-price distribution of one of the supported families.
///
/// Parameters by kind:
///   Zie         (pi, lambda)
///   Exponential (rate, unused)
///   LogNormal   (mu, sigma)
///   Gamma       (shape, rate)
class WinModel {
 public:
  static WinModel zie(double pi, double lambda);
  static WinModel exponential(double rate);
  static WinModel lognormal(double mu, double sigma);
  static WinModel gamma(double shape, double rate);

  DistKind kind() const { return kind_; }
  const std::array<double, 2>& params() const { return params_; }

  /// P(w <= x), defined for x >= 0.
  double cdf(double x) const;

  /// Expected payment E[w ; w <= x] under a second-price rule.
  double partial_mean(double x) const;

  std::optional<ZieParamsd> as_zie() const;

 private:
  WinModel(DistKind kind, double a, double b) : kind_(kind), params_{a, b} {}

  DistKind kind_;
  std::array<double, 2> params_;
};

struct MleOptions {
  double pi_floor = 1e-6;
  double pi_ceil = 1.0 - 1e-6;
};

/// Closed-form ZIE maximum likelihood: zero fraction and reciprocal mean of
/// the positive part. Throws DegenerateError when no positive sample exists.
ZieParamsd zie_mle_batch(std::span<const double> samples, const MleOptions& options = {});

double zie_mean_nll(const ZieParamsd& params, std::span<const double> samples);

struct BaselineOptions {
  double zero_epsilon = 1e-6;  // price substituted for exact zeros
  double sigma_floor = 1e-6;
  double gamma_tolerance = 1e-9;
  int gamma_max_iterations = 100;
  MleOptions zie;
};

/// Batch MLE of a single distribution for the whole sample.
WinModel fit_baseline(DistKind kind, std::span<const double> samples,
                      const BaselineOptions& options = {});

/// 64 evenly spaced bids from 0 to the 99th percentile of positive prices.
std::vector<double> bce_bid_grid(std::span<const double> winning_prices, int points = 64);

inline constexpr double kBceClamp = 1e-12;

/// Mean binary cross-entropy of predicted win probabilities against the
/// labels [b >= w] over every (sample, grid bid) pair. `cdf(i, b)` returns the
/// predicted P(win) of sample i at bid b.
template <typename CdfFn>
  requires std::invocable<CdfFn&, std::size_t, double>
double eval_bce(CdfFn&& cdf, std::span<const double> winning_prices,
                std::span<const double> bid_grid) {
  if (bid_grid.empty()) throw ConfigError("eval_bce: empty bid grid");
  if (winning_prices.empty()) throw ConfigError("eval_bce: empty evaluation set");
  double total = 0.0;
  for (std::size_t i = 0; i < winning_prices.size(); ++i) {
    double row = 0.0;
    for (double b : bid_grid) {
      double p = cdf(i, b);
      p = std::min(std::max(p, kBceClamp), 1.0 - kBceClamp);
      row += (b >= winning_prices[i]) ? -std::log(p) : -std::log1p(-p);
    }
    total += row / static_cast<double>(bid_grid.size());
  }
  return total / static_cast<double>(winning_prices.size());
}

double eval_bce(std::span<const WinModel> predictions, std::span<const double> winning_prices,
                std::span<const double> bid_grid);

struct TrainConfig {
  double learning_rate = 0.05;
  int epochs = 500;
  std::size_t batch_size = 0;  // 0 selects full-batch descent
  std::uint64_t seed = 0;
  double zero_epsilon = 1e-6;  // baselines only
};

/// Linear map from features to the two raw parameters of a distribution.
///
/// Each head is a weight vector of length dim + 1 (bias last). The raw
/// outputs are linked to valid parameters per kind:
///   Zie         theta -> pi = sigmoid(theta), lambda head -> exp
///   Exponential lambda head -> rate = exp (theta head unused)
///   LogNormal   theta -> mu, lambda head -> sigma = exp
///   Gamma       theta -> shape = exp, lambda head -> rate = exp
class LinearParamModel {
 public:
  LinearParamModel(DistKind kind, Eigen::Index feature_dim);
  LinearParamModel(DistKind kind, Eigen::VectorXd weights_theta, Eigen::VectorXd weights_lambda);

  DistKind kind() const { return kind_; }
  Eigen::Index feature_dim() const { return weights_theta_.size() - 1; }

  const Eigen::VectorXd& weights_theta() const { return weights_theta_; }
  const Eigen::VectorXd& weights_lambda() const { return weights_lambda_; }
  Eigen::VectorXd& weights_theta() { return weights_theta_; }
  Eigen::VectorXd& weights_lambda() { return weights_lambda_; }

  WinModel predict(const Eigen::Ref<const Eigen::VectorXd>& features) const;
  std::vector<WinModel> predict_rows(const Eigen::MatrixXd& features) const;

  /// Training objective: mean NLL over rows of `features`. Written in the
  /// unclamped, numerically stable form; predictions clamp pi afterwards.
  double loss(const Eigen::MatrixXd& features, std::span<const double> winning_prices,
              double zero_epsilon = 1e-6) const;

  /// Analytic gradient of `loss` with respect to (theta head, lambda head).
  std::pair<Eigen::VectorXd, Eigen::VectorXd> gradient(const Eigen::MatrixXd& features,
                                                       std::span<const double> winning_prices,
                                                       double zero_epsilon = 1e-6) const;

  void save(std::ostream& out) const;
  static LinearParamModel load(std::istream& in);

  bool operator==(const LinearParamModel& other) const;

 private:
  DistKind kind_;
  Eigen::VectorXd weights_theta_;
  Eigen::VectorXd weights_lambda_;
};

struct TrainResult {
  LinearParamModel model;
  std::vector<double> epoch_loss;  // full training-set loss after each epoch
};

/// Mini-batch gradient descent on mean NLL (full batch when batch_size is 0).
/// Throws NumericError if the loss becomes non-finite.
TrainResult train_param_model(DistKind kind, const Eigen::MatrixXd& features,
                              std::span<const double> winning_prices, const TrainConfig& config);

}  // namespace hob

#endif  // HOB_LANDSCAPE_HPP
