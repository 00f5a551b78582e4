#include "hob/datagen.hpp"

#include <json.hpp>

#include <cmath>
#include <random>
#include <sstream>

#include "hob/hash.hpp"
#include "hob/numfmt.hpp"

namespace hob {

namespace {

constexpr std::uint64_t kProjectionTag = 1;
constexpr std::uint64_t kSampleTag = 2;
constexpr std::uint64_t kOrganicTag = 3;

double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }
double softplus(double z) { return std::max(z, 0.0) + std::log1p(std::exp(-std::abs(z))); }

std::string hex64(std::uint64_t h) {
  std::ostringstream s;
  s << std::hex;
  s.width(16);
  s.fill('0');
  s << h;
  return s.str();
}

}  // namespace

Eigen::MatrixXd projection_matrix(const GeneratorConfig& config) {
  if (config.feature_dim < 1) throw ConfigError("generator: feature_dim must be at least 1");
  if (config.projection) {
    if (config.projection->rows() != config.feature_dim || config.projection->cols() != 2)
      throw ConfigError("generator: projection must be feature_dim x 2");
    return *config.projection;
  }
  std::mt19937_64 rng(stream_seed(config.seed, 0, kProjectionTag));
  std::normal_distribution<double> normal(0.0, 1.0 / std::sqrt(static_cast<double>(config.feature_dim)));
  Eigen::MatrixXd w(config.feature_dim, 2);
  for (Eigen::Index j = 0; j < w.rows(); ++j)
    for (Eigen::Index k = 0; k < 2; ++k) w(j, k) = normal(rng);
  return w;
}

Dataset generate(const GeneratorConfig& config) {
  if (config.noise_theta < 0.0 || config.noise_lambda < 0.0)
    throw ConfigError("generator: noise scales must be nonnegative");
  const Eigen::MatrixXd w_star = projection_matrix(config);
  const Eigen::Index d = config.feature_dim;

  Dataset data;
  data.feature_dim = d;
  data.rows.resize(config.n_samples);
  for (std::size_t i = 0; i < config.n_samples; ++i) {
    std::mt19937_64 rng(stream_seed(config.seed, i, kSampleTag));
    std::normal_distribution<double> normal(0.0, 1.0);
    std::uniform_real_distribution<double> unit(0.0, 1.0);

    Impression& imp = data.rows[i];
    imp.id = "i" + std::to_string(i);
    imp.features.resize(d);
    for (Eigen::Index j = 0; j < d; ++j) imp.features(j) = normal(rng);
    const double v = normal(rng);
    imp.value = config.value_scale * (config.value_mode == ValueMode::Abs ? std::abs(v) : std::max(v, 0.0));

    const Eigen::Vector2d raw = w_star.transpose() * imp.features;
    const double theta = raw(0) + config.noise_theta * normal(rng);
    const double lambda_raw = raw(1) + config.noise_lambda * normal(rng);
    const double pi = sigmoid(theta);
    const double lambda = softplus(lambda_raw);
    imp.truth = ZieParamsd(std::min(pi, 1.0 - 1e-12), lambda);

    if (unit(rng) < pi) {
      imp.winning_price = 0.0;
    } else {
      std::exponential_distribution<double> tail(lambda);
      imp.winning_price = tail(rng);
    }
  }
  return data;
}

Dataset organicize(const Dataset& data, const NoiseTransformConfig& config) {
  if (config.relative_sigma < 0.0) throw ConfigError("organicize: relative_sigma must be nonnegative");
  Dataset out = data;
  for (std::size_t i = 0; i < out.rows.size(); ++i) {
    double& w = out.rows[i].winning_price;
    if (w < 0.0) throw DomainError("organicize: negative winning price");
    if (w == 0.0 || config.relative_sigma == 0.0) continue;
    std::mt19937_64 rng(stream_seed(config.seed, i, kOrganicTag));
    std::normal_distribution<double> normal(0.0, 1.0);
    w = std::max(0.0, w + config.relative_sigma * w * normal(rng));
  }
  return out;
}

double zero_fraction(const Dataset& data) {
  if (data.rows.empty()) return 0.0;
  std::size_t zeros = 0;
  for (const auto& r : data.rows) zeros += r.winning_price == 0.0 ? 1 : 0;
  return static_cast<double>(zeros) / static_cast<double>(data.rows.size());
}

GeneratorManifest make_manifest(const GeneratorConfig& config, const Dataset& data) {
  std::ostringstream canon;
  canon << "n=" << config.n_samples << ";dim=" << config.feature_dim << ";seed=" << config.seed
        << ";noise_theta=" << format_double(config.noise_theta)
        << ";noise_lambda=" << format_double(config.noise_lambda)
        << ";value_mode=" << (config.value_mode == ValueMode::Abs ? "abs" : "clamp")
        << ";value_scale=" << format_double(config.value_scale);
  const Eigen::MatrixXd w = projection_matrix(config);
  std::uint64_t wsum = fnv1a64("");
  for (Eigen::Index j = 0; j < w.rows(); ++j)
    for (Eigen::Index k = 0; k < w.cols(); ++k) wsum = fnv1a64(format_double(w(j, k)) + ";", wsum);

  double pi_sum = 0.0;
  for (const auto& r : data.rows) pi_sum += r.truth ? r.truth->pi : 0.0;
  return {config.seed,
          config.n_samples,
          config.feature_dim,
          hex64(fnv1a64(canon.str())),
          hex64(wsum),
          zero_fraction(data),
          data.rows.empty() ? 0.0 : pi_sum / static_cast<double>(data.rows.size())};
}

std::string manifest_json(const GeneratorManifest& m) {
  nlohmann::ordered_json j;
  j["generator"] = "hob-datagen v1";
  j["seed"] = m.seed;
  j["n_samples"] = m.n_samples;
  j["feature_dim"] = m.feature_dim;
  j["config_hash"] = m.config_hash;
  j["projection_checksum"] = m.projection_checksum;
  j["zero_fraction"] = m.zero_fraction;
  j["mean_pi"] = m.mean_pi;
  return j.dump(2) + "\n";
}

}  // namespace hob
