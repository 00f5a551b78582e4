#include "hob/landscape.hpp"

#include <boost/math/special_functions/digamma.hpp>
#include <boost/math/special_functions/gamma.hpp>
#include <boost/math/special_functions/trigamma.hpp>

#include <algorithm>
#include <cmath>
#include <numeric>

namespace hob {

namespace {

constexpr double kSqrt2 = 1.4142135623730951;

double normal_cdf(double z) { return 0.5 * std::erfc(-z / kSqrt2); }

// Regularized lower incomplete gamma. Boost gives up for extreme shapes
// (overflowing tgamma, divergent series); Wilson-Hilferty covers those.
double gamma_p(double a, double z) {
  try {
    return boost::math::gamma_p(a, z);
  } catch (const std::exception&) {
    const double v = 1.0 / (9.0 * a);
    return normal_cdf((std::cbrt(z / a) - (1.0 - v)) / std::sqrt(v));
  }
}

}  // namespace

std::string_view to_string(DistKind kind) {
  switch (kind) {
    case DistKind::Zie: return "zie";
    case DistKind::Exponential: return "exp";
    case DistKind::LogNormal: return "lognormal";
    case DistKind::Gamma: return "gamma";
  }
  return "unknown";
}

DistKind parse_dist_kind(std::string_view name) {
  if (name == "zie" || name == "Z") return DistKind::Zie;
  if (name == "exp" || name == "exponential" || name == "E") return DistKind::Exponential;
  if (name == "lognormal" || name == "L") return DistKind::LogNormal;
  if (name == "gamma" || name == "G") return DistKind::Gamma;
  throw ConfigError("unknown distribution kind '" + std::string(name) + "'");
}

WinModel WinModel::zie(double pi, double lambda) {
  ZieParamsd check(pi, lambda);
  return WinModel(DistKind::Zie, check.pi, check.lambda);
}

WinModel WinModel::exponential(double rate) {
  if (!(rate > 0.0) || !std::isfinite(rate)) throw DomainError("exponential: rate must be positive");
  return WinModel(DistKind::Exponential, rate, 0.0);
}

WinModel WinModel::lognormal(double mu, double sigma) {
  if (!std::isfinite(mu) || !(sigma > 0.0) || !std::isfinite(sigma))
    throw DomainError("lognormal: sigma must be positive");
  return WinModel(DistKind::LogNormal, mu, sigma);
}

WinModel WinModel::gamma(double shape, double rate) {
  if (!(shape > 0.0) || !(rate > 0.0) || !std::isfinite(shape) || !std::isfinite(rate))
    throw DomainError("gamma: shape and rate must be positive");
  return WinModel(DistKind::Gamma, shape, rate);
}

double WinModel::cdf(double x) const {
  if (x < 0.0) throw DomainError("cdf: negative price");
  switch (kind_) {
    case DistKind::Zie:
      return 1.0 - (1.0 - params_[0]) * std::exp(-params_[1] * x);
    case DistKind::Exponential:
      return -std::expm1(-params_[0] * x);
    case DistKind::LogNormal:
      if (x == 0.0) return 0.0;
      return normal_cdf((std::log(x) - params_[0]) / params_[1]);
    case DistKind::Gamma:
      if (x == 0.0) return 0.0;
      return gamma_p(params_[0], params_[1] * x);
  }
  return 0.0;
}

double WinModel::partial_mean(double x) const {
  if (x < 0.0) throw DomainError("partial_mean: negative price");
  switch (kind_) {
    case DistKind::Zie:
      return zie_partial_mean(ZieParamsd(params_[0], params_[1]), x);
    case DistKind::Exponential:
      return zie_partial_mean(ZieParamsd(0.0, params_[0]), x);
    case DistKind::LogNormal: {
      if (x == 0.0) return 0.0;
      const double mu = params_[0];
      const double s = params_[1];
      return std::exp(mu + 0.5 * s * s) * normal_cdf((std::log(x) - mu - s * s) / s);
    }
    case DistKind::Gamma:
      if (x == 0.0) return 0.0;
      return params_[0] / params_[1] * gamma_p(params_[0] + 1.0, params_[1] * x);
  }
  return 0.0;
}

std::optional<ZieParamsd> WinModel::as_zie() const {
  if (kind_ == DistKind::Zie) return ZieParamsd(params_[0], params_[1]);
  if (kind_ == DistKind::Exponential) return ZieParamsd(0.0, params_[0]);
  return std::nullopt;
}

ZieParamsd zie_mle_batch(std::span<const double> samples, const MleOptions& options) {
  if (samples.empty()) throw DegenerateError("zie_mle_batch: empty sample");
  std::size_t zeros = 0;
  double positive_sum = 0.0;
  for (double w : samples) {
    if (w < 0.0 || !std::isfinite(w)) throw DomainError("zie_mle_batch: invalid price");
    if (w == 0.0)
      ++zeros;
    else
      positive_sum += w;
  }
  const std::size_t positives = samples.size() - zeros;
  if (positives == 0)
    throw DegenerateError("zie_mle_batch: degenerate-positive-part (all samples are zero)");
  double pi = static_cast<double>(zeros) / static_cast<double>(samples.size());
  pi = std::clamp(pi, options.pi_floor, options.pi_ceil);
  const double lambda = static_cast<double>(positives) / positive_sum;
  return ZieParamsd(pi, lambda);
}

double zie_mean_nll(const ZieParamsd& params, std::span<const double> samples) {
  double total = 0.0;
  for (double w : samples) total += zie_nll(params, w);
  return total / static_cast<double>(samples.size());
}

namespace {

std::vector<double> replace_zeros(std::span<const double> samples, double epsilon) {
  std::vector<double> out;
  out.reserve(samples.size());
  bool any_positive = false;
  for (double w : samples) {
    if (w < 0.0 || !std::isfinite(w)) throw DomainError("fit_baseline: invalid price");
    if (w > 0.0) any_positive = true;
    out.push_back(w > 0.0 ? w : epsilon);
  }
  if (!any_positive) throw DegenerateError("fit_baseline: empty positive part");
  return out;
}

// Newton iterations on log k - digamma(k) = s, s = log(mean) - mean(log x),
// started from Minka's closed-form approximation.
double gamma_shape_mle(double s, double tolerance, int max_iterations) {
  if (!(s > 0.0)) throw DegenerateError("fit_baseline: gamma shape undefined for constant sample");
  double k = (3.0 - s + std::sqrt((s - 3.0) * (s - 3.0) + 24.0 * s)) / (12.0 * s);
  for (int it = 0; it < max_iterations; ++it) {
    const double f = std::log(k) - boost::math::digamma(k) - s;
    const double df = 1.0 / k - boost::math::trigamma(k);
    double next = k - f / df;
    if (!(next > 0.0)) next = 0.5 * k;
    const bool done = std::abs(next - k) <= tolerance * k;
    k = next;
    if (done) break;
  }
  return k;
}

}  // namespace

WinModel fit_baseline(DistKind kind, std::span<const double> samples,
                      const BaselineOptions& options) {
  if (samples.empty()) throw DegenerateError("fit_baseline: empty sample");
  if (kind == DistKind::Zie) {
    const auto p = zie_mle_batch(samples, options.zie);
    return WinModel::zie(p.pi, p.lambda);
  }
  const std::vector<double> x = replace_zeros(samples, options.zero_epsilon);
  const double n = static_cast<double>(x.size());
  const double mean = std::accumulate(x.begin(), x.end(), 0.0) / n;
  switch (kind) {
    case DistKind::Exponential:
      return WinModel::exponential(1.0 / mean);
    case DistKind::LogNormal: {
      double mu = 0.0;
      for (double v : x) mu += std::log(v);
      mu /= n;
      double var = 0.0;
      for (double v : x) var += (std::log(v) - mu) * (std::log(v) - mu);
      var /= n;
      return WinModel::lognormal(mu, std::max(std::sqrt(var), options.sigma_floor));
    }
    case DistKind::Gamma: {
      double mean_log = 0.0;
      for (double v : x) mean_log += std::log(v);
      mean_log /= n;
      const double k = gamma_shape_mle(std::log(mean) - mean_log, options.gamma_tolerance,
                                       options.gamma_max_iterations);
      return WinModel::gamma(k, k / mean);
    }
    case DistKind::Zie:
      break;
  }
  throw ConfigError("fit_baseline: unsupported kind");
}

std::vector<double> bce_bid_grid(std::span<const double> winning_prices, int points) {
  if (points < 2) throw ConfigError("bce_bid_grid: need at least two points");
  std::vector<double> positive;
  for (double w : winning_prices)
    if (w > 0.0) positive.push_back(w);
  if (positive.empty()) throw DegenerateError("bce_bid_grid: no positive winning prices");
  std::sort(positive.begin(), positive.end());
  const double pos = 0.99 * static_cast<double>(positive.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, positive.size() - 1);
  const double upper = positive[lo] + (pos - static_cast<double>(lo)) * (positive[hi] - positive[lo]);
  std::vector<double> grid(static_cast<std::size_t>(points));
  for (int i = 0; i < points; ++i) grid[static_cast<std::size_t>(i)] = upper * i / (points - 1);
  return grid;
}

double eval_bce(std::span<const WinModel> predictions, std::span<const double> winning_prices,
                std::span<const double> bid_grid) {
  if (predictions.size() != winning_prices.size())
    throw ConfigError("eval_bce: prediction count does not match evaluation set");
  return eval_bce([&](std::size_t i, double b) { return predictions[i].cdf(b); }, winning_prices,
                  bid_grid);
}

}  // namespace hob
