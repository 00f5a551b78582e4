#include "hob/dataset.hpp"

#include <json.hpp>

#include <fstream>
#include <sstream>

#include "hob/numfmt.hpp"

namespace hob {

using nlohmann::json;

bool Dataset::has_truth() const {
  if (rows.empty()) return false;
  for (const auto& r : rows)
    if (!r.truth) return false;
  return true;
}

Eigen::MatrixXd Dataset::feature_matrix() const {
  Eigen::MatrixXd x(static_cast<Eigen::Index>(rows.size()), feature_dim);
  for (std::size_t i = 0; i < rows.size(); ++i) x.row(static_cast<Eigen::Index>(i)) = rows[i].features.transpose();
  return x;
}

std::vector<double> Dataset::winning_prices() const {
  std::vector<double> w;
  w.reserve(rows.size());
  for (const auto& r : rows) w.push_back(r.winning_price);
  return w;
}

Dataset Dataset::slice(std::size_t begin, std::size_t end) const {
  if (begin > end || end > rows.size()) throw ConfigError("Dataset::slice: range out of bounds");
  Dataset out;
  out.feature_dim = feature_dim;
  out.rows.assign(rows.begin() + static_cast<std::ptrdiff_t>(begin), rows.begin() + static_cast<std::ptrdiff_t>(end));
  return out;
}

void Dataset::validate() const {
  for (const auto& r : rows) {
    if (r.features.size() != feature_dim)
      throw ConfigError("dataset: impression '" + r.id + "' has feature dimension " +
                        std::to_string(r.features.size()) + ", header declares " + std::to_string(feature_dim));
    if (!(r.value >= 0.0) || !std::isfinite(r.value)) throw ConfigError("dataset: negative value in '" + r.id + "'");
    if (!(r.winning_price >= 0.0) || !std::isfinite(r.winning_price))
      throw ConfigError("dataset: negative winning price in '" + r.id + "'");
  }
}

DatasetFormat format_for_path(const std::filesystem::path& path) {
  const auto ext = path.extension().string();
  if (ext == ".csv") return DatasetFormat::Csv;
  if (ext == ".jsonl" || ext == ".json" || ext == ".ndjson") return DatasetFormat::Jsonl;
  throw ConfigError("unrecognized dataset extension '" + ext + "' (expected .jsonl or .csv)");
}

void write_jsonl(std::ostream& out, const Dataset& data) {
  for (const auto& r : data.rows) {
    json row;
    row["id"] = r.id;
    row["channel"] = r.channel;
    row["value"] = r.value;
    row["winning_price"] = r.winning_price;
    row["features"] = std::vector<double>(r.features.data(), r.features.data() + r.features.size());
    if (r.truth) {
      row["pi"] = r.truth->pi;
      row["lambda"] = r.truth->lambda;
    }
    out << row.dump() << '\n';
  }
}

Dataset read_jsonl(std::istream& in) {
  Dataset data;
  std::string line;
  std::size_t line_no = 0;
  bool first = true;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    try {
      const json row = json::parse(line);
      Impression imp;
      imp.id = row.at("id").get<std::string>();
      imp.channel = row.contains("channel") ? row.at("channel").get<std::string>() : std::string();
      imp.value = row.at("value").get<double>();
      imp.winning_price = row.at("winning_price").get<double>();
      const auto f = row.at("features").get<std::vector<double>>();
      imp.features = Eigen::Map<const Eigen::VectorXd>(f.data(), static_cast<Eigen::Index>(f.size()));
      if (row.contains("pi") && row.contains("lambda"))
        imp.truth = ZieParamsd(row.at("pi").get<double>(), row.at("lambda").get<double>());
      if (first) {
        data.feature_dim = imp.features.size();
        first = false;
      }
      data.rows.push_back(std::move(imp));
    } catch (const json::exception& e) {
      throw ConfigError("dataset line " + std::to_string(line_no) + ": " + e.what());
    } catch (const DomainError& e) {
      throw ConfigError("dataset line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  data.validate();
  return data;
}

void write_csv(std::ostream& out, const Dataset& data) {
  const bool truth = data.has_truth();
  out << "id,channel,value,winning_price";
  for (Eigen::Index j = 0; j < data.feature_dim; ++j) out << ",f" << j;
  if (truth) out << ",pi,lambda";
  out << '\n';
  for (const auto& r : data.rows) {
    out << r.id << ',' << r.channel << ',' << format_double(r.value) << ',' << format_double(r.winning_price);
    for (Eigen::Index j = 0; j < r.features.size(); ++j) out << ',' << format_double(r.features(j));
    if (truth) out << ',' << format_double(r.truth->pi) << ',' << format_double(r.truth->lambda);
    out << '\n';
  }
}

namespace {

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, ',')) cells.push_back(cell);
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  if (!cells.empty() && !cells.back().empty() && cells.back().back() == '\r') cells.back().pop_back();
  return cells;
}

}  // namespace

Dataset read_csv(std::istream& in) {
  std::string header_line;
  if (!std::getline(in, header_line)) throw ConfigError("csv dataset: missing header");
  const auto header = split_csv(header_line);
  if (header.size() < 4 || header[0] != "id" || header[1] != "channel" || header[2] != "value" ||
      header[3] != "winning_price")
    throw ConfigError("csv dataset: header must start with id,channel,value,winning_price");
  const bool truth = header.size() >= 6 && header[header.size() - 2] == "pi" && header.back() == "lambda";
  const std::size_t dim = header.size() - 4 - (truth ? 2 : 0);
  for (std::size_t j = 0; j < dim; ++j)
    if (header[4 + j] != "f" + std::to_string(j)) throw ConfigError("csv dataset: unexpected column " + header[4 + j]);

  Dataset data;
  data.feature_dim = static_cast<Eigen::Index>(dim);
  std::string line;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    const auto cells = split_csv(line);
    if (cells.size() != header.size())
      throw ConfigError("csv dataset line " + std::to_string(line_no) + ": expected " +
                        std::to_string(header.size()) + " columns");
    Impression imp;
    imp.id = cells[0];
    imp.channel = cells[1];
    imp.value = parse_double(cells[2]);
    imp.winning_price = parse_double(cells[3]);
    imp.features.resize(static_cast<Eigen::Index>(dim));
    for (std::size_t j = 0; j < dim; ++j) imp.features(static_cast<Eigen::Index>(j)) = parse_double(cells[4 + j]);
    if (truth) imp.truth = ZieParamsd(parse_double(cells[4 + dim]), parse_double(cells[5 + dim]));
    data.rows.push_back(std::move(imp));
  }
  data.validate();
  return data;
}

Dataset load_dataset(const std::filesystem::path& path) {
  const auto fmt = format_for_path(path);
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open dataset '" + path.string() + "'");
  return fmt == DatasetFormat::Csv ? read_csv(in) : read_jsonl(in);
}

void save_dataset(const std::filesystem::path& path, const Dataset& data) {
  std::ostringstream out;
  if (format_for_path(path) == DatasetFormat::Csv)
    write_csv(out, data);
  else
    write_jsonl(out, data);
  write_file_atomic(path, out.str());
}

void write_file_atomic(const std::filesystem::path& path, const std::string& contents) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw ConfigError("cannot write '" + path.string() + "'");
    out << contents;
    out.flush();
    if (!out) throw ConfigError("write failed for '" + path.string() + "'");
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw ConfigError("cannot move '" + tmp.string() + "' into place: " + ec.message());
}

}  // namespace hob
