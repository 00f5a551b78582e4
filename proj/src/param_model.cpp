#include <boost/math/special_functions/digamma.hpp>

#include <algorithm>
#include <cmath>
#include <istream>
#include <numeric>
#include <ostream>
#include <random>
#include <sstream>

#include "hob/landscape.hpp"
#include "hob/numfmt.hpp"

namespace hob {

namespace {

constexpr double kHalfLog2Pi = 0.91893853320467274178;
constexpr double kRawClamp = 30.0;  // |log-parameter| bound applied at prediction time

double softplus(double z) { return std::max(z, 0.0) + std::log1p(std::exp(-std::abs(z))); }

double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

double clamp_raw(double z) { return std::clamp(z, -kRawClamp, kRawClamp); }

// Per-sample NLL and its partial derivatives with respect to the two raw
// outputs (a = theta head, b = lambda head).
struct SampleLoss {
  double value;
  double d_a;
  double d_b;
};

SampleLoss sample_loss(DistKind kind, double a, double b, double w, double eps) {
  switch (kind) {
    case DistKind::Zie: {
      const double pi = sigmoid(a);
      if (w == 0.0) return {softplus(-a), pi - 1.0, 0.0};
      const double lambda = std::exp(b);
      return {softplus(a) - b + lambda * w, pi, lambda * w - 1.0};
    }
    case DistKind::Exponential: {
      const double x = std::max(w, eps);
      const double rate = std::exp(b);
      return {-b + rate * x, 0.0, rate * x - 1.0};
    }
    case DistKind::LogNormal: {
      const double y = std::log(std::max(w, eps));
      const double inv_var = std::exp(-2.0 * b);
      const double r = y - a;
      return {y + b + kHalfLog2Pi + 0.5 * r * r * inv_var, -r * inv_var, 1.0 - r * r * inv_var};
    }
    case DistKind::Gamma: {
      const double x = std::max(w, eps);
      const double y = std::log(x);
      const double k = std::exp(a);
      const double rate = std::exp(b);
      const double value = -k * b + std::lgamma(k) - (k - 1.0) * y + rate * x;
      return {value, k * (boost::math::digamma(k) - b - y), rate * x - k};
    }
  }
  return {0.0, 0.0, 0.0};
}

Eigen::VectorXd raw_outputs(const Eigen::MatrixXd& features, const Eigen::VectorXd& weights) {
  const Eigen::Index d = features.cols();
  return (features * weights.head(d)).array() + weights(d);
}

std::string_view next_token(std::string_view& line) {
  while (!line.empty() && line.front() == ' ') line.remove_prefix(1);
  const auto end = line.find(' ');
  std::string_view tok = line.substr(0, end);
  line.remove_prefix(end == std::string_view::npos ? line.size() : end);
  return tok;
}

Eigen::VectorXd parse_weights(const std::string& line, Eigen::Index expected) {
  std::vector<double> values;
  std::string_view rest(line);
  for (auto tok = next_token(rest); !tok.empty(); tok = next_token(rest))
    values.push_back(parse_double(tok));
  if (static_cast<Eigen::Index>(values.size()) != expected)
    throw ConfigError("param model: weight vector has " + std::to_string(values.size()) +
                      " entries, expected " + std::to_string(expected));
  return Eigen::Map<Eigen::VectorXd>(values.data(), expected);
}

}  // namespace

LinearParamModel::LinearParamModel(DistKind kind, Eigen::Index feature_dim)
    : kind_(kind),
      weights_theta_(Eigen::VectorXd::Zero(feature_dim + 1)),
      weights_lambda_(Eigen::VectorXd::Zero(feature_dim + 1)) {
  if (feature_dim < 0) throw ConfigError("LinearParamModel: negative feature dimension");
}

LinearParamModel::LinearParamModel(DistKind kind, Eigen::VectorXd weights_theta,
                                   Eigen::VectorXd weights_lambda)
    : kind_(kind), weights_theta_(std::move(weights_theta)), weights_lambda_(std::move(weights_lambda)) {
  if (weights_theta_.size() != weights_lambda_.size() || weights_theta_.size() < 1)
    throw ConfigError("LinearParamModel: head sizes differ");
}

WinModel LinearParamModel::predict(const Eigen::Ref<const Eigen::VectorXd>& features) const {
  const Eigen::Index d = feature_dim();
  if (features.size() != d) throw ConfigError("LinearParamModel: feature dimension mismatch");
  const double a = weights_theta_.head(d).dot(features) + weights_theta_(d);
  const double b = weights_lambda_.head(d).dot(features) + weights_lambda_(d);
  const MleOptions clamp;
  switch (kind_) {
    case DistKind::Zie:
      return WinModel::zie(std::clamp(sigmoid(a), clamp.pi_floor, clamp.pi_ceil),
                           std::exp(clamp_raw(b)));
    case DistKind::Exponential:
      return WinModel::exponential(std::exp(clamp_raw(b)));
    case DistKind::LogNormal:
      return WinModel::lognormal(a, std::exp(clamp_raw(b)));
    case DistKind::Gamma:
      return WinModel::gamma(std::exp(clamp_raw(a)), std::exp(clamp_raw(b)));
  }
  throw ConfigError("LinearParamModel: unsupported kind");
}

std::vector<WinModel> LinearParamModel::predict_rows(const Eigen::MatrixXd& features) const {
  std::vector<WinModel> out;
  out.reserve(static_cast<std::size_t>(features.rows()));
  for (Eigen::Index i = 0; i < features.rows(); ++i) out.push_back(predict(features.row(i).transpose()));
  return out;
}

double LinearParamModel::loss(const Eigen::MatrixXd& features, std::span<const double> winning_prices,
                              double zero_epsilon) const {
  if (features.cols() != feature_dim()) throw ConfigError("loss: feature dimension mismatch");
  const Eigen::VectorXd a = raw_outputs(features, weights_theta_);
  const Eigen::VectorXd b = raw_outputs(features, weights_lambda_);
  double total = 0.0;
  for (Eigen::Index i = 0; i < features.rows(); ++i)
    total += sample_loss(kind_, a(i), b(i), winning_prices[static_cast<std::size_t>(i)], zero_epsilon).value;
  return total / static_cast<double>(features.rows());
}

std::pair<Eigen::VectorXd, Eigen::VectorXd> LinearParamModel::gradient(
    const Eigen::MatrixXd& features, std::span<const double> winning_prices, double zero_epsilon) const {
  const Eigen::Index n = features.rows();
  const Eigen::Index d = feature_dim();
  const Eigen::VectorXd a = raw_outputs(features, weights_theta_);
  const Eigen::VectorXd b = raw_outputs(features, weights_lambda_);
  Eigen::VectorXd ga(n), gb(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto s = sample_loss(kind_, a(i), b(i), winning_prices[static_cast<std::size_t>(i)], zero_epsilon);
    ga(i) = s.d_a;
    gb(i) = s.d_b;
  }
  const double inv_n = 1.0 / static_cast<double>(n);
  Eigen::VectorXd grad_theta(d + 1), grad_lambda(d + 1);
  grad_theta.head(d).noalias() = features.transpose() * ga * inv_n;
  grad_theta(d) = ga.sum() * inv_n;
  grad_lambda.head(d).noalias() = features.transpose() * gb * inv_n;
  grad_lambda(d) = gb.sum() * inv_n;
  return {std::move(grad_theta), std::move(grad_lambda)};
}

void LinearParamModel::save(std::ostream& out) const {
  out << "hob-param-model v1 dim=" << feature_dim() << " kind=" << to_string(kind_) << '\n';
  for (const Eigen::VectorXd* head : {&weights_theta_, &weights_lambda_}) {
    for (Eigen::Index i = 0; i < head->size(); ++i) {
      if (i) out << ' ';
      out << format_double((*head)(i));
    }
    out << '\n';
  }
}

LinearParamModel LinearParamModel::load(std::istream& in) {
  std::string header;
  if (!std::getline(in, header)) throw ConfigError("param model: missing header");
  std::istringstream hs(header);
  std::string magic, version, dim_tok, kind_tok;
  hs >> magic >> version >> dim_tok >> kind_tok;
  if (magic != "hob-param-model" || version != "v1" || dim_tok.rfind("dim=", 0) != 0 ||
      kind_tok.rfind("kind=", 0) != 0)
    throw ConfigError("param model: bad header '" + header + "'");
  const Eigen::Index dim = static_cast<Eigen::Index>(parse_double(dim_tok.substr(4)));
  const DistKind kind = parse_dist_kind(kind_tok.substr(5));
  std::string theta_line, lambda_line;
  if (!std::getline(in, theta_line) || !std::getline(in, lambda_line))
    throw ConfigError("param model: truncated file");
  return LinearParamModel(kind, parse_weights(theta_line, dim + 1), parse_weights(lambda_line, dim + 1));
}

bool LinearParamModel::operator==(const LinearParamModel& other) const {
  return kind_ == other.kind_ && weights_theta_.size() == other.weights_theta_.size() &&
         weights_theta_ == other.weights_theta_ && weights_lambda_ == other.weights_lambda_;
}

TrainResult train_param_model(DistKind kind, const Eigen::MatrixXd& features,
                              std::span<const double> winning_prices, const TrainConfig& config) {
  const Eigen::Index n = features.rows();
  if (n == 0) throw ConfigError("train_param_model: empty dataset");
  if (static_cast<std::size_t>(n) != winning_prices.size())
    throw ConfigError("train_param_model: feature rows and prices differ in length");
  if (config.epochs < 0 || !(config.learning_rate > 0.0))
    throw ConfigError("train_param_model: invalid epochs or learning rate");

  TrainResult result{LinearParamModel(kind, features.cols()), {}};
  LinearParamModel& model = result.model;
  const double lr = config.learning_rate;
  const auto batch = static_cast<Eigen::Index>(config.batch_size);
  const bool full_batch = batch == 0 || batch >= n;

  std::mt19937_64 rng(config.seed);
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::vector<double> batch_prices;

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    if (full_batch) {
      auto [gt, gl] = model.gradient(features, winning_prices, config.zero_epsilon);
      model.weights_theta() -= lr * gt;
      model.weights_lambda() -= lr * gl;
    } else {
      std::shuffle(order.begin(), order.end(), rng);
      for (Eigen::Index start = 0; start < n; start += batch) {
        const Eigen::Index len = std::min(batch, n - start);
        std::vector<Eigen::Index> rows(order.begin() + start, order.begin() + start + len);
        const Eigen::MatrixXd x = features(rows, Eigen::all);
        batch_prices.clear();
        for (auto r : rows) batch_prices.push_back(winning_prices[static_cast<std::size_t>(r)]);
        auto [gt, gl] = model.gradient(x, batch_prices, config.zero_epsilon);
        model.weights_theta() -= lr * gt;
        model.weights_lambda() -= lr * gl;
      }
    }
    const double l = model.loss(features, winning_prices, config.zero_epsilon);
    if (!std::isfinite(l) || !model.weights_theta().allFinite() || !model.weights_lambda().allFinite()) {
      std::ostringstream msg;
      msg << "train_param_model: non-finite loss at epoch " << epoch + 1 << " (kind "
          << to_string(kind) << ", learning rate " << lr << "); lower the learning rate";
      throw NumericError(msg.str());
    }
    result.epoch_loss.push_back(l);
  }
  return result;
}

}  // namespace hob
