#ifndef HOB_DATASET_HPP
#define HOB_DATASET_HPP

#include <Eigen/Dense>

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "hob/landscape.hpp"

namespace hob {

/// One auction opportunity replayed from a log.
struct Impression {
  std::string id;
  Eigen::VectorXd features;
  double value = 0.0;          // v_i, currency
  double winning_price = 0.0;  // w_i, ground truth
  std::string channel;         // empty when untagged
  std::optional<ZieParamsd> truth;  // generating landscape, synthetic data only
};

struct Dataset {
  Eigen::Index feature_dim = 0;
  std::vector<Impression> rows;

  std::size_t size() const { return rows.size(); }
  bool has_truth() const;

  Eigen::MatrixXd feature_matrix() const;
  std::vector<double> winning_prices() const;

  /// Rows [begin, end) as a new dataset.
  Dataset slice(std::size_t begin, std::size_t end) const;

  /// Throws ConfigError on negative values or a feature dimension mismatch.
  void validate() const;
};

enum class DatasetFormat { Jsonl, Csv };

DatasetFormat format_for_path(const std::filesystem::path& path);

void write_jsonl(std::ostream& out, const Dataset& data);
Dataset read_jsonl(std::istream& in);

/// CSV with header `id,channel,value,winning_price,f0..f{D-1}` plus optional
/// trailing `pi,lambda` ground-truth columns.
void write_csv(std::ostream& out, const Dataset& data);
Dataset read_csv(std::istream& in);

Dataset load_dataset(const std::filesystem::path& path);
void save_dataset(const std::filesystem::path& path, const Dataset& data);

/// Writes through a sibling temporary file and renames it into place.
void write_file_atomic(const std::filesystem::path& path, const std::string& contents);

}  // namespace hob

#endif  // HOB_DATASET_HPP
