#ifndef HOB_SIMULATE_HPP
#define HOB_SIMULATE_HPP

#include <cmath>
#include <functional>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "hob/control.hpp"
#include "hob/dataset.hpp"
#include "hob/landscape.hpp"
#include "hob/mca.hpp"
#include "hob/shading.hpp"

namespace hob {

enum class Mechanism { Spa, Fpa };
enum class BiddingMode { Uniform, NonUniform };

struct ChannelSpec {
  std::string id;
  Mechanism mechanism = Mechanism::Spa;
  BiddingMode mode = BiddingMode::Uniform;
  double traffic_share = 0.0;

  bool uniform_fpa() const { return mechanism == Mechanism::Fpa && mode == BiddingMode::Uniform; }
  bool shaded_fpa() const { return mechanism == Mechanism::Fpa && mode == BiddingMode::NonUniform; }
};

/// SPA, FPA+u and FPA+nu with the given traffic shares.
std::vector<ChannelSpec> three_channels(double spa_share, double fpa_u_share, double fpa_nu_share);

/// Vary one channel's share, split the remainder evenly over the other two.
std::vector<ChannelSpec> three_channels_varying(std::string_view channel, double share);

/// "spa:0.33,fpa_u:0.33,fpa_nu:0.34" style specification.
std::vector<ChannelSpec> parse_channels(std::string_view spec);
std::string format_channels(std::span<const ChannelSpec> channels);

void validate_channels(std::span<const ChannelSpec> channels);

/// Deterministic partition: FNV-1a of the impression id mapped to [0, 1) and
/// bucketed by cumulative traffic share.
std::size_t assign_channel(std::string_view impression_id, std::span<const ChannelSpec> channels);

/// Sets each row's channel tag by hash partition.
void tag_channels(Dataset& data, std::span<const ChannelSpec> channels);

struct AuctionOutcome {
  bool won;
  double cost;
  double value_realized;
  double bid;
};

/// Bids at or above the winning price win (ties included). SPA pays the
/// winning price, FPA pays the bid.
AuctionOutcome resolve_auction(Mechanism mechanism, double bid, const Impression& impression);

enum class Strategy { UeUb, UeNub, McaeNub };

std::string_view to_string(Strategy s);

/// A strategy plus, for the shading strategies, the landscape family used in
/// FPA+nu. Labels follow "UE&UB", "UE&NUB-Z", "MCAE&NUB-G".
struct Method {
  Strategy strategy = Strategy::UeUb;
  DistKind dist = DistKind::Zie;

  std::string label() const;
  bool shades() const { return strategy != Strategy::UeUb; }
  static Method parse(std::string_view label);
};

enum class AssignmentMode { Partition, Duplicate, Tagged };
enum class OutcomeMode { Realized, Expected };

std::string_view to_string(AssignmentMode m);
AssignmentMode parse_assignment(std::string_view name);
std::string_view to_string(OutcomeMode m);
OutcomeMode parse_outcome_mode(std::string_view name);

/// Channel sums are reduced in fixed chunks of this many rows (in channel row
/// order): each chunk is summed sequentially, then chunk sums in order, then
/// channels in order. Reports are bit-identical for any thread count.
inline constexpr std::size_t kReductionChunk = 4096;

struct ReplayOptions {
  AssignmentMode assignment = AssignmentMode::Partition;
  OutcomeMode outcomes = OutcomeMode::Realized;
  int n_iter = kOfflineIterations;
  double value_per_click = 1.0;
  unsigned threads = 0;  // 0: HOB_THREADS or hardware concurrency
  ReplayAlignmentOptions alignment{};
};

struct ChannelReport {
  std::string channel;
  double eta = 0.0;  // multiplier applied in this channel
  double value = 0.0;
  double cost = 0.0;
  double mc = std::nan("");  // finite-difference marginal cost, NaN if not estimated
  double roi = 0.0;
  double surplus = 0.0;
  double optimum_surplus = 0.0;
  double surplus_rate = 0.0;
  std::size_t impressions = 0;
  double wins = 0.0;
  double zero_bid_wins = 0.0;
};

struct ReplayReport {
  std::string method;
  std::string outcomes;
  double eta = 0.0;
  double eta3 = 0.0;
  std::optional<PowerLawFit> fit;
  std::vector<ChannelReport> channels;
  ChannelReport total;
  bool constraint_matched = false;
  bool converged = true;
  int bisection_iterations = 0;
};

struct OutcomeRow {
  std::string id;
  std::string channel;
  double bid;
  bool won;
  double cost;
  double value_realized;
};

/// Shading landscapes per impression, aligned with dataset rows.
using Landscape = std::vector<WinModel>;

Landscape predict_landscape(const LinearParamModel& model, const Dataset& data);
Landscape truth_landscape(const Dataset& data);

/// Replays a fixed impression log through a set of channels. The dataset
/// must outlive the replay.
class Replay {
 public:
  Replay(const Dataset& data, std::vector<ChannelSpec> channels, ReplayOptions options = {});

  const std::vector<ChannelSpec>& channels() const { return channels_; }
  const ReplayOptions& options() const { return options_; }
  const Dataset& data() const { return *data_; }

  void set_landscape(DistKind kind, Landscape landscape);
  bool has_landscape(DistKind kind) const { return landscapes_.count(kind) != 0; }

  /// Multipliers per strategy: UE* use eta everywhere; MCAE&NUB aligns the
  /// uniform-FPA channel by replaying its value curve.
  ChannelEtas etas_for(const Method& method, double eta) const;
  Alignment align(double eta) const;
  // Alignment fitted on dataset rows [begin, end) only.
  Alignment align(double eta, std::size_t begin, std::size_t end) const;

  /// Value and cost of each channel (in channel order).
  std::vector<ReplayPoint> channel_points(const Method& method, const ChannelEtas& etas) const;
  std::vector<ReplayPoint> channel_points(const Method& method, const ChannelEtas& etas, OutcomeMode mode) const;
  ReplayPoint total_point(const Method& method, const ChannelEtas& etas) const;

  /// Value of the uniform-FPA channels when bidding eta3 * v there.
  double uniform_fpa_value(double eta3) const;
  double uniform_fpa_value(double eta3, std::size_t begin, std::size_t end) const;

  ReplayReport run(const Method& method, const ChannelEtas& etas, std::vector<OutcomeRow>* log = nullptr) const;

  /// Outcomes for dataset rows [begin, end) in row order, one entry per
  /// channel a row is replayed in. `row_index` receives the dataset row of
  /// each entry when given.
  std::vector<OutcomeRow> outcomes(const Method& method, const ChannelEtas& etas, std::size_t begin,
                                   std::size_t end, std::vector<std::size_t>* row_index = nullptr) const;

  double scaled_value(std::size_t row) const { return values_[row]; }

 private:
  struct Accum;
  Accum replay_channel(std::size_t channel, const Method& method, double channel_eta, double surplus_eta,
                       OutcomeMode mode, std::vector<OutcomeRow>* log, std::size_t first = 0,
                       std::size_t last = static_cast<std::size_t>(-1)) const;
  const Landscape& landscape_for(const Method& method) const;

  const Dataset* data_;
  std::vector<ChannelSpec> channels_;
  ReplayOptions options_;
  std::vector<std::vector<std::size_t>> rows_;  // per channel
  std::vector<double> values_;                  // value * value_per_click
  std::map<DistKind, Landscape> landscapes_;
  std::vector<ZieParamsd> truth_;
};

ReplayReport run_strategy(const Replay& replay, const Method& method, const ChannelEtas& etas);

/// Central finite-difference marginal cost per channel,
/// (C(eta + d) - C(eta - d)) / (V(eta + d) - V(eta - d)). Throws
/// DegenerateError naming the channel when |dV| < 1e-12.
std::vector<MarginalCostEstimate> estimate_mc(
    const std::function<std::vector<ReplayPoint>(double)>& replay_fn,
    std::span<const std::string> channel_names, double eta, double delta);

/// Same, with the uniform-FPA alignment frozen at `fit` so every channel moves
/// with eta; NaN for channels with a flat value curve.
std::vector<double> replay_mc(const Replay& replay, const Method& method, double eta, double delta,
                              const std::optional<PowerLawFit>& fit, OutcomeMode mode);

struct MatchOptions {
  double eta_lo = 1e-3;
  double eta_hi = 1e3;
  double tolerance = 1e-3;
  int max_iterations = 60;
  bool estimate_mc = true;
  double mc_relative_delta = 1e-3;
  std::optional<OutcomeMode> mc_outcomes;  // defaults to Expected when truth exists
};

/// Bisects eta to meet the campaign constraint on total replay cost/value,
/// then produces the full report (with per-channel finite-difference MCs).
ReplayReport run_matched(const Replay& replay, const Method& method, const Campaign& campaign,
                         const MatchOptions& options = {});

/// Percent change of total value against a baseline report.
double value_delta_percent(const ReplayReport& report, const ReplayReport& baseline);

std::string report_json(const ReplayReport& report);
std::string reports_json(std::span<const ReplayReport> reports);
void write_outcome_csv(std::ostream& out, std::span<const OutcomeRow> rows);

enum class SweepExperiment { BudgetLevels, ChannelProportions, OrganicShare };

std::string_view to_string(SweepExperiment e);
SweepExperiment parse_sweep_experiment(std::string_view name);

struct SweepBase {
  const Dataset* data = nullptr;
  std::vector<ChannelSpec> channels;
  ReplayOptions replay{};
  Campaign campaign;
  std::vector<Method> methods;
  std::map<DistKind, const LinearParamModel*> models;  // landscape source per family
  bool use_truth_landscape = false;
  MatchOptions match{};
  std::string varied_channel = "FPA+nu";  // ChannelProportions
  std::uint64_t seed = 0;                 // OrganicShare noise seed
};

struct SweepPoint {
  double x;
  std::vector<ReplayReport> reports;  // one per method, in method order
};

/// One constraint-matched replay per grid point per method. Grid entries are
/// budgets (BudgetLevels), the varied channel's share (ChannelProportions) or
/// the organic-noise relative sigma (OrganicShare).
std::vector<SweepPoint> sweep(SweepExperiment experiment, std::span<const double> grid, const SweepBase& base);

double spearman(std::span<const double> x, std::span<const double> y);

struct StreamResult {
  std::vector<TraceRow> trace;
  ReplayReport report;
  ControlState final_state;
};

/// Streaming replay: rows are split in order into `config.periods` periods,
/// each bid with an immutable eta snapshot, and eta is updated by pid_step
/// after every period. Spend never exceeds the campaign budget.
StreamResult run_streaming(const Replay& replay, const Method& method, const Campaign& campaign,
                           const ControlConfig& config, double initial_eta);

}  // namespace hob

#endif  // HOB_SIMULATE_HPP
