#ifndef HOB_TESTS_SUPPORT_HPP
#define HOB_TESTS_SUPPORT_HPP

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "hob/datagen.hpp"
#include "hob/landscape.hpp"

namespace hob::test {

// Independent ZIE sampler: atom at zero with probability pi, else inverse-CDF
// exponential. Shares nothing with the generator.
inline std::vector<double> zie_samples(double pi, double lambda, std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> out(n);
  for (auto& w : out) {
    const double a = u(rng);
    w = a < pi ? 0.0 : -std::log1p(-u(rng)) / lambda;
  }
  return out;
}

inline Dataset small_dataset(std::size_t n, std::uint64_t seed, Eigen::Index dim = 5) {
  GeneratorConfig config;
  config.n_samples = n;
  config.feature_dim = dim;
  config.seed = seed;
  return generate(config);
}

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() / ("hob-" + tag + "-" + std::to_string(rd()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::string file(const std::string& name) const { return (path_ / name).string(); }

 private:
  std::filesystem::path path_;
};

inline double rel_err(double a, double b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); }

}  // namespace hob::test

#endif  // HOB_TESTS_SUPPORT_HPP
