#include <algorithm>
#include <numeric>

#include "hob/datagen.hpp"
#include "hob/simulate.hpp"

namespace hob {

std::string_view to_string(SweepExperiment e) {
  switch (e) {
    case SweepExperiment::BudgetLevels: return "budget_levels";
    case SweepExperiment::ChannelProportions: return "channel_proportions";
    case SweepExperiment::OrganicShare: return "organic_share";
  }
  return "unknown";
}

SweepExperiment parse_sweep_experiment(std::string_view name) {
  if (name == "budget_levels") return SweepExperiment::BudgetLevels;
  if (name == "channel_proportions") return SweepExperiment::ChannelProportions;
  if (name == "organic_share") return SweepExperiment::OrganicShare;
  throw ConfigError("unknown sweep experiment '" + std::string(name) + "'");
}

std::vector<SweepPoint> sweep(SweepExperiment experiment, std::span<const double> grid, const SweepBase& base) {
  if (grid.empty()) throw ConfigError("sweep: empty grid");
  if (!base.data) throw ConfigError("sweep: no dataset");
  if (base.methods.empty()) throw ConfigError("sweep: no methods");

  std::vector<SweepPoint> out;
  for (double x : grid) {
    Dataset noised;
    const Dataset* data = base.data;
    std::vector<ChannelSpec> channels = base.channels;
    Campaign campaign = base.campaign;
    switch (experiment) {
      case SweepExperiment::BudgetLevels:
        campaign.budget = x;
        campaign.validate();
        break;
      case SweepExperiment::ChannelProportions:
        channels = three_channels_varying(base.varied_channel, x);
        break;
      case SweepExperiment::OrganicShare:
        noised = organicize(*base.data, {x, base.seed});
        // The generating landscape no longer describes the noised prices.
        for (auto& r : noised.rows) r.truth.reset();
        data = &noised;
        break;
    }

    Replay replay(*data, channels, base.replay);
    for (const Method& m : base.methods) {
      if (!m.shades() || replay.has_landscape(m.dist)) continue;
      if (base.use_truth_landscape) {
        replay.set_landscape(m.dist, truth_landscape(*base.data));
        continue;
      }
      const auto it = base.models.find(m.dist);
      if (it == base.models.end() || !it->second)
        throw ConfigError("sweep: method " + m.label() + " has no landscape model");
      replay.set_landscape(m.dist, predict_landscape(*it->second, *data));
    }

    SweepPoint point{x, {}};
    for (const Method& m : base.methods) point.reports.push_back(run_matched(replay, m, campaign, base.match));
    out.push_back(std::move(point));
  }
  return out;
}

namespace {

std::vector<double> average_ranks(std::span<const double> x) {
  std::vector<std::size_t> order(x.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return x[a] < x[b]; });
  std::vector<double> rank(x.size());
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j + 1 < order.size() && x[order[j + 1]] == x[order[i]]) ++j;
    const double r = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) rank[order[k]] = r;
    i = j + 1;
  }
  return rank;
}

}  // namespace

double spearman(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw ConfigError("spearman: length mismatch");
  if (x.size() < 2) return std::nan("");
  for (std::size_t i = 0; i < x.size(); ++i)
    if (std::isnan(x[i]) || std::isnan(y[i])) return std::nan("");
  const auto rx = average_ranks(x);
  const auto ry = average_ranks(y);
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(rx.begin(), rx.end(), 0.0) / n;
  const double my = std::accumulate(ry.begin(), ry.end(), 0.0) / n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < rx.size(); ++i) {
    sxy += (rx[i] - mx) * (ry[i] - my);
    sxx += (rx[i] - mx) * (rx[i] - mx);
    syy += (ry[i] - my) * (ry[i] - my);
  }
  if (sxx == 0.0 || syy == 0.0) return std::nan("");
  return sxy / std::sqrt(sxx * syy);
}

StreamResult run_streaming(const Replay& replay, const Method& method, const Campaign& campaign,
                           const ControlConfig& config, double initial_eta) {
  campaign.validate();
  config.validate();
  if (!(initial_eta >= config.eta_min && initial_eta <= config.eta_max))
    throw ConfigError("run_streaming: initial eta outside the configured bounds");

  const Dataset& data = replay.data();
  const auto& channels = replay.channels();
  const std::size_t n = data.size();
  const bool mcae = method.strategy == Strategy::McaeNub;

  StreamResult result;
  ReplayReport& report = result.report;
  report.method = method.label();
  report.outcomes = std::string(to_string(replay.options().outcomes));
  report.channels.resize(channels.size());
  for (std::size_t c = 0; c < channels.size(); ++c) report.channels[c].channel = channels[c].id;
  report.total.channel = "All";
  std::vector<double> optimum(channels.size(), 0.0);

  ControlState state;
  state.eta = initial_eta;
  double spend = 0.0;
  std::vector<std::size_t> rows;

  for (int p = 0; p < config.periods; ++p) {
    const std::size_t begin = n * static_cast<std::size_t>(p) / static_cast<std::size_t>(config.periods);
    const std::size_t end = n * static_cast<std::size_t>(p + 1) / static_cast<std::size_t>(config.periods);
    // Immutable snapshot for the whole period.
    ChannelEtas etas{state.eta, state.eta};
    // MCAE aligns on the periods already completed; the first period has no
    // history and starts from b = 1.
    if (mcae) etas.eta3 = begin > 0 ? replay.align(etas.eta, 0, begin).etas.eta3 : 0.5 * etas.eta;
    const auto log = replay.outcomes(method, etas, begin, end, &rows);

    double period_spend = 0.0, period_value = 0.0;
    for (std::size_t k = 0; k < log.size(); ++k) {
      const OutcomeRow& o = log[k];
      const std::size_t c = static_cast<std::size_t>(
          std::find_if(channels.begin(), channels.end(), [&](const ChannelSpec& s) { return s.id == o.channel; }) -
          channels.begin());
      const double vs = etas.eta * replay.scaled_value(rows[k]);
      optimum[c] += std::max(0.0, vs - data.rows[rows[k]].winning_price);
      report.channels[c].impressions += 1;
      if (o.value_realized <= 0.0 && o.cost <= 0.0 && !o.won) continue;
      if (spend + o.cost > campaign.budget) continue;  // budget exhausted for this auction
      spend += o.cost;
      period_spend += o.cost;
      period_value += o.value_realized;
      ChannelReport& r = report.channels[c];
      r.value += o.value_realized;
      r.cost += o.cost;
      const double win_weight = o.value_realized > 0.0 ? o.value_realized / replay.scaled_value(rows[k]) : (o.won ? 1.0 : 0.0);
      r.surplus += etas.eta * o.value_realized - o.cost;
      r.wins += win_weight;
      if (o.bid == 0.0) r.zero_bid_wins += win_weight;
    }

    const ControlState next = pid_step(state, {period_spend, period_value}, campaign, config);
    result.trace.push_back({p + 1, etas.eta, etas.eta3, period_spend, period_value,
                            period_spend > 0.0 ? period_value / period_spend : std::nan(""), next.last_error});
    report.eta = etas.eta;
    report.eta3 = etas.eta3;
    state = next;
  }

  double total_optimum = 0.0;
  for (std::size_t c = 0; c < channels.size(); ++c) {
    ChannelReport& r = report.channels[c];
    r.eta = channels[c].uniform_fpa() && mcae ? report.eta3 : report.eta;
    r.optimum_surplus = optimum[c];
    r.roi = r.cost > 0.0 ? r.value / r.cost : std::nan("");
    r.surplus_rate = optimum[c] > 0.0 ? r.surplus / optimum[c] : std::nan("");
    report.total.value += r.value;
    report.total.cost += r.cost;
    report.total.surplus += r.surplus;
    report.total.impressions += r.impressions;
    report.total.wins += r.wins;
    report.total.zero_bid_wins += r.zero_bid_wins;
    total_optimum += optimum[c];
  }
  report.total.eta = report.eta;
  report.total.optimum_surplus = total_optimum;
  report.total.roi = report.total.cost > 0.0 ? report.total.value / report.total.cost : std::nan("");
  report.total.surplus_rate = total_optimum > 0.0 ? report.total.surplus / total_optimum : std::nan("");
  result.final_state = state;
  return result;
}

}  // namespace hob
