#ifndef HOB_DATAGEN_HPP
#define HOB_DATAGEN_HPP

#include <Eigen/Dense>

#include <cstdint>
#include <optional>
#include <string>

#include "hob/dataset.hpp"

namespace hob {

enum class ValueMode { Clamp, Abs };

struct GeneratorConfig {
  std::size_t n_samples = 100000;
  Eigen::Index feature_dim = 20;
  std::uint64_t seed = 0;
  double noise_theta = 0.3;
  double noise_lambda = 0.3;
  ValueMode value_mode = ValueMode::Clamp;
  double value_scale = 1.0;
  // Overrides the seeded projection W* (feature_dim x 2) when set.
  std::optional<Eigen::MatrixXd> projection;
};

/// The fixed random projection for a config: entries N(0, 1/feature_dim),
/// regenerated deterministically from the seed.
Eigen::MatrixXd projection_matrix(const GeneratorConfig& config);

/// Three-stage synthetic generator: x ~ N(0, I); (theta_raw, lambda_raw) =
/// x^T W* plus Gaussian noise; pi = sigmoid(theta), lambda = softplus(.);
/// w = 0 with probability pi, else Exponential(lambda). Values v ~ N(0, 1),
/// made nonnegative per `value_mode`. Each row stores its generating (pi,
/// lambda). Sample i draws only from stream (seed, i).
Dataset generate(const GeneratorConfig& config);

struct NoiseTransformConfig {
  double relative_sigma = 0.7;
  std::uint64_t seed = 0;
};

/// w' = max(0, w + N(0, (relative_sigma * w)^2)); zero prices stay zero.
Dataset organicize(const Dataset& data, const NoiseTransformConfig& config);

struct GeneratorManifest {
  std::uint64_t seed;
  std::size_t n_samples;
  Eigen::Index feature_dim;
  std::string config_hash;
  std::string projection_checksum;
  double zero_fraction;
  double mean_pi;
};

GeneratorManifest make_manifest(const GeneratorConfig& config, const Dataset& data);
std::string manifest_json(const GeneratorManifest& manifest);

double zero_fraction(const Dataset& data);

}  // namespace hob

#endif  // HOB_DATAGEN_HPP
