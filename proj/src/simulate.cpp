#include "hob/simulate.hpp"

#include <algorithm>
#include <cstdlib>
#include <ostream>
#include <sstream>
#include <thread>

#include "hob/hash.hpp"
#include "hob/numfmt.hpp"

namespace hob {

namespace {

constexpr std::size_t kChunk = kReductionChunk;

unsigned resolve_threads(unsigned requested) {
  if (requested > 0) return requested;
  if (const char* env = std::getenv("HOB_THREADS")) {
    const long n = std::strtol(env, nullptr, 10);
    if (n > 0) return static_cast<unsigned>(n);
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

// Runs fn(chunk, begin, end) over fixed-size chunks. Chunk boundaries do not
// depend on the thread count, so per-chunk partial sums reduced in chunk
// order are bit-identical for any schedule.
template <typename Fn>
void for_chunks(std::size_t n, unsigned threads, Fn&& fn) {
  const std::size_t chunks = (n + kChunk - 1) / kChunk;
  const auto body = [&](std::size_t c) { fn(c, c * kChunk, std::min(n, (c + 1) * kChunk)); };
  if (threads <= 1 || chunks <= 1) {
    for (std::size_t c = 0; c < chunks; ++c) body(c);
    return;
  }
  std::vector<std::thread> pool;
  const unsigned t = std::min<unsigned>(threads, static_cast<unsigned>(chunks));
  for (unsigned k = 0; k < t; ++k)
    pool.emplace_back([&, k] {
      for (std::size_t c = k; c < chunks; c += t) body(c);
    });
  for (auto& th : pool) th.join();
}

ChannelSpec make_channel(std::string_view key, double share) {
  if (key == "spa" || key == "SPA") return {"SPA", Mechanism::Spa, BiddingMode::Uniform, share};
  if (key == "fpa_u" || key == "FPA+u") return {"FPA+u", Mechanism::Fpa, BiddingMode::Uniform, share};
  if (key == "fpa_nu" || key == "FPA+nu") return {"FPA+nu", Mechanism::Fpa, BiddingMode::NonUniform, share};
  throw ConfigError("unknown channel '" + std::string(key) + "' (expected spa, fpa_u or fpa_nu)");
}

}  // namespace

std::vector<ChannelSpec> three_channels(double spa_share, double fpa_u_share, double fpa_nu_share) {
  std::vector<ChannelSpec> c{make_channel("spa", spa_share), make_channel("fpa_u", fpa_u_share),
                             make_channel("fpa_nu", fpa_nu_share)};
  validate_channels(c);
  return c;
}

std::vector<ChannelSpec> three_channels_varying(std::string_view channel, double share) {
  if (!(share >= 0.0 && share <= 1.0)) throw ConfigError("channel share must lie in [0, 1]");
  const ChannelSpec varied = make_channel(channel, share);
  const double rest = 0.5 * (1.0 - share);
  std::vector<ChannelSpec> c;
  for (const char* key : {"spa", "fpa_u", "fpa_nu"}) {
    ChannelSpec s = make_channel(key, rest);
    if (s.id == varied.id) s.traffic_share = share;
    c.push_back(s);
  }
  validate_channels(c);
  return c;
}

std::vector<ChannelSpec> parse_channels(std::string_view spec) {
  std::vector<ChannelSpec> out;
  while (!spec.empty()) {
    const auto comma = spec.find(',');
    std::string_view item = spec.substr(0, comma);
    spec.remove_prefix(comma == std::string_view::npos ? spec.size() : comma + 1);
    const auto colon = item.find(':');
    if (colon == std::string_view::npos) throw ConfigError("channel spec '" + std::string(item) + "' lacks ':share'");
    out.push_back(make_channel(item.substr(0, colon), parse_double(item.substr(colon + 1))));
  }
  validate_channels(out);
  return out;
}

std::string format_channels(std::span<const ChannelSpec> channels) {
  std::string s;
  for (const auto& c : channels) {
    if (!s.empty()) s += ',';
    s += c.shaded_fpa() ? "fpa_nu" : c.uniform_fpa() ? "fpa_u" : "spa";
    s += ':' + format_double(c.traffic_share);
  }
  return s;
}

void validate_channels(std::span<const ChannelSpec> channels) {
  if (channels.empty()) throw ConfigError("no channels configured");
  double sum = 0.0;
  for (std::size_t i = 0; i < channels.size(); ++i) {
    const auto& c = channels[i];
    if (!(c.traffic_share >= 0.0 && c.traffic_share <= 1.0))
      throw ConfigError("channel " + c.id + ": share outside [0, 1]");
    if (c.mode == BiddingMode::NonUniform && c.mechanism != Mechanism::Fpa)
      throw ConfigError("channel " + c.id + ": non-uniform bidding requires a first-price auction");
    for (std::size_t j = 0; j < i; ++j)
      if (channels[j].id == c.id) throw ConfigError("duplicate channel id " + c.id);
    sum += c.traffic_share;
  }
  if (std::abs(sum - 1.0) > 1e-9) throw ConfigError("channel shares must sum to 1");
}

std::size_t assign_channel(std::string_view impression_id, std::span<const ChannelSpec> channels) {
  const double u = static_cast<double>(fnv1a64(impression_id) >> 11) * 0x1.0p-53;
  double cum = 0.0;
  for (std::size_t i = 0; i < channels.size(); ++i) {
    cum += channels[i].traffic_share;
    if (u < cum) return i;
  }
  for (std::size_t i = channels.size(); i-- > 0;)
    if (channels[i].traffic_share > 0.0) return i;
  return channels.size() - 1;
}

void tag_channels(Dataset& data, std::span<const ChannelSpec> channels) {
  for (auto& r : data.rows) r.channel = channels[assign_channel(r.id, channels)].id;
}

AuctionOutcome resolve_auction(Mechanism mechanism, double bid, const Impression& impression) {
  if (bid < 0.0) throw DomainError("resolve_auction: negative bid");
  const bool won = bid >= impression.winning_price;
  if (!won) return {false, 0.0, 0.0, bid};
  const double cost = mechanism == Mechanism::Spa ? impression.winning_price : bid;
  return {true, cost, impression.value, bid};
}

std::string_view to_string(Strategy s) {
  switch (s) {
    case Strategy::UeUb: return "UE&UB";
    case Strategy::UeNub: return "UE&NUB";
    case Strategy::McaeNub: return "MCAE&NUB";
  }
  return "unknown";
}

std::string Method::label() const {
  std::string l(to_string(strategy));
  if (!shades()) return l;
  switch (dist) {
    case DistKind::Zie: return l + "-Z";
    case DistKind::Gamma: return l + "-G";
    case DistKind::LogNormal: return l + "-L";
    case DistKind::Exponential: return l + "-E";
  }
  return l;
}

Method Method::parse(std::string_view label) {
  if (label == "UE&UB") return {Strategy::UeUb, DistKind::Zie};
  if (label == "HOB") return {Strategy::McaeNub, DistKind::Zie};
  const auto dash = label.rfind('-');
  if (dash == std::string_view::npos) throw ConfigError("unknown method '" + std::string(label) + "'");
  const auto head = label.substr(0, dash);
  const DistKind kind = parse_dist_kind(label.substr(dash + 1));
  if (head == "UE&NUB") return {Strategy::UeNub, kind};
  if (head == "MCAE&NUB") return {Strategy::McaeNub, kind};
  throw ConfigError("unknown method '" + std::string(label) + "'");
}

std::string_view to_string(AssignmentMode m) {
  switch (m) {
    case AssignmentMode::Partition: return "partition";
    case AssignmentMode::Duplicate: return "duplicate";
    case AssignmentMode::Tagged: return "tagged";
  }
  return "unknown";
}

AssignmentMode parse_assignment(std::string_view name) {
  if (name == "partition") return AssignmentMode::Partition;
  if (name == "duplicate") return AssignmentMode::Duplicate;
  if (name == "tagged") return AssignmentMode::Tagged;
  throw ConfigError("unknown assignment mode '" + std::string(name) + "'");
}

std::string_view to_string(OutcomeMode m) { return m == OutcomeMode::Expected ? "expected" : "realized"; }

OutcomeMode parse_outcome_mode(std::string_view name) {
  if (name == "realized") return OutcomeMode::Realized;
  if (name == "expected") return OutcomeMode::Expected;
  throw ConfigError("unknown outcome mode '" + std::string(name) + "'");
}

Landscape predict_landscape(const LinearParamModel& model, const Dataset& data) {
  if (model.feature_dim() != data.feature_dim)
    throw ConfigError("landscape model expects " + std::to_string(model.feature_dim()) +
                      " features, dataset has " + std::to_string(data.feature_dim));
  Landscape out;
  out.reserve(data.size());
  for (const auto& r : data.rows) out.push_back(model.predict(r.features));
  return out;
}

Landscape truth_landscape(const Dataset& data) {
  if (!data.has_truth()) throw ConfigError("dataset carries no generating landscape");
  Landscape out;
  out.reserve(data.size());
  for (const auto& r : data.rows) out.push_back(WinModel::zie(r.truth->pi, r.truth->lambda));
  return out;
}

struct Replay::Accum {
  double value = 0.0;
  double cost = 0.0;
  double surplus = 0.0;
  double optimum = 0.0;
  double wins = 0.0;
  double zero_wins = 0.0;
  std::size_t n = 0;

  void add(const Accum& o) {
    value += o.value;
    cost += o.cost;
    surplus += o.surplus;
    optimum += o.optimum;
    wins += o.wins;
    zero_wins += o.zero_wins;
    n += o.n;
  }
};

Replay::Replay(const Dataset& data, std::vector<ChannelSpec> channels, ReplayOptions options)
    : data_(&data), channels_(std::move(channels)), options_(options) {
  validate_channels(channels_);
  if (options_.n_iter < 1) throw ConfigError("replay: n_iter must be at least 1");
  if (!(options_.value_per_click > 0.0)) throw ConfigError("replay: value_per_click must be positive");
  data.validate();
  options_.threads = resolve_threads(options_.threads);

  rows_.assign(channels_.size(), {});
  values_.reserve(data.size());
  for (std::size_t i = 0; i < data.size(); ++i) {
    const Impression& imp = data.rows[i];
    values_.push_back(imp.value * options_.value_per_click);
    switch (options_.assignment) {
      case AssignmentMode::Partition:
        rows_[assign_channel(imp.id, channels_)].push_back(i);
        break;
      case AssignmentMode::Duplicate:
        for (auto& r : rows_) r.push_back(i);
        break;
      case AssignmentMode::Tagged: {
        const auto it = std::find_if(channels_.begin(), channels_.end(),
                                     [&](const ChannelSpec& c) { return c.id == imp.channel; });
        if (it == channels_.end())
          throw ConfigError("impression '" + imp.id + "' tagged with unknown channel '" + imp.channel + "'");
        rows_[static_cast<std::size_t>(it - channels_.begin())].push_back(i);
        break;
      }
    }
  }
  if (data.has_truth()) {
    truth_.reserve(data.size());
    for (const auto& r : data.rows) truth_.push_back(*r.truth);
  } else if (options_.outcomes == OutcomeMode::Expected) {
    throw ConfigError("expected outcomes require the generating landscape in the dataset");
  }
}

void Replay::set_landscape(DistKind kind, Landscape landscape) {
  if (landscape.size() != data_->size()) throw ConfigError("landscape size does not match dataset");
  landscapes_[kind] = std::move(landscape);
}

const Landscape& Replay::landscape_for(const Method& method) const {
  const auto it = landscapes_.find(method.dist);
  if (it == landscapes_.end())
    throw ConfigError("method " + method.label() + " needs a " + std::string(to_string(method.dist)) +
                      " landscape model");
  return it->second;
}

Replay::Accum Replay::replay_channel(std::size_t channel, const Method& method, double channel_eta,
                                     double surplus_eta, OutcomeMode mode, std::vector<OutcomeRow>* log,
                                     std::size_t first, std::size_t last) const {
  const ChannelSpec& spec = channels_[channel];
  const std::vector<std::size_t>& all = rows_[channel];
  last = std::min(last, all.size());
  first = std::min(first, last);
  const std::span<const std::size_t> rows(all.data() + first, last - first);
  const bool shade = spec.shaded_fpa() && method.shades();
  const Landscape* landscape = shade ? &landscape_for(method) : nullptr;
  if (mode == OutcomeMode::Expected && truth_.empty())
    throw ConfigError("expected outcomes require the generating landscape in the dataset");

  const auto bid_for = [&](std::size_t i) {
    const double V = channel_eta * values_[i];
    return shade ? optimal_bid((*landscape)[i], V, options_.n_iter).bid : V;
  };

  const auto one = [&](std::size_t i, Accum& acc, OutcomeRow* row) {
    const Impression& imp = data_->rows[i];
    const double bid = bid_for(i);
    const double v = values_[i];
    const double vs = surplus_eta * v;
    acc.n += 1;
    acc.optimum += std::max(0.0, vs - imp.winning_price);
    if (mode == OutcomeMode::Realized) {
      const bool won = bid >= imp.winning_price;
      const double cost = won ? (spec.mechanism == Mechanism::Spa ? imp.winning_price : bid) : 0.0;
      if (won) {
        acc.value += v;
        acc.cost += cost;
        acc.surplus += vs - cost;
        acc.wins += 1.0;
        if (bid == 0.0) acc.zero_wins += 1.0;
      }
      if (row) *row = {imp.id, spec.id, bid, won, cost, won ? v : 0.0};
    } else {
      const ZieParamsd& t = truth_[i];
      const double p = zie_cdf(t, bid);
      const double cost = spec.mechanism == Mechanism::Spa ? zie_partial_mean(t, bid) : bid * p;
      acc.value += v * p;
      acc.cost += cost;
      acc.surplus += vs * p - cost;
      acc.wins += p;
      if (bid == 0.0) acc.zero_wins += p;
      if (row) *row = {imp.id, spec.id, bid, p > 0.5, cost, v * p};
    }
  };

  Accum total;
  if (log) {
    Accum chunk;
    for (std::size_t k = 0; k < rows.size(); ++k) {
      OutcomeRow row;
      one(rows[k], chunk, &row);
      log->push_back(std::move(row));
      if ((k + 1) % kChunk == 0 || k + 1 == rows.size()) {
        total.add(chunk);
        chunk = Accum{};
      }
    }
    return total;
  }
  std::vector<Accum> partial((rows.size() + kChunk - 1) / kChunk);
  for_chunks(rows.size(), options_.threads, [&](std::size_t c, std::size_t begin, std::size_t end) {
    Accum acc;
    for (std::size_t k = begin; k < end; ++k) one(rows[k], acc, nullptr);
    partial[c] = acc;
  });
  for (const auto& p : partial) total.add(p);
  return total;
}

ChannelEtas Replay::etas_for(const Method& method, double eta) const {
  if (method.strategy != Strategy::McaeNub) return {eta, eta};
  return align(eta).etas;
}

Alignment Replay::align(double eta) const { return align(eta, 0, data_->size()); }

Alignment Replay::align(double eta, std::size_t begin, std::size_t end) const {
  const bool any_uniform = std::any_of(channels_.begin(), channels_.end(), [](const ChannelSpec& c) {
    return c.uniform_fpa() && c.traffic_share > 0.0;
  });
  const PowerLawFit unit{1.0, 1.0, eta, eta, 0.0, false};
  if (!any_uniform) return {{eta, eta}, unit, 0};
  try {
    return align_by_replay(eta, [&](double e3) { return uniform_fpa_value(e3, begin, end); }, options_.alignment);
  } catch (const DegenerateError&) {
    return {{eta, align_eta3(eta, unit)}, unit, 0};
  }
}

double Replay::uniform_fpa_value(double eta3) const { return uniform_fpa_value(eta3, 0, data_->size()); }

double Replay::uniform_fpa_value(double eta3, std::size_t begin, std::size_t end) const {
  double value = 0.0;
  const Method plain{Strategy::UeUb, DistKind::Zie};
  for (std::size_t c = 0; c < channels_.size(); ++c) {
    if (!channels_[c].uniform_fpa()) continue;
    const auto& rows = rows_[c];
    const auto first = static_cast<std::size_t>(std::lower_bound(rows.begin(), rows.end(), begin) - rows.begin());
    const auto last = static_cast<std::size_t>(std::lower_bound(rows.begin(), rows.end(), end) - rows.begin());
    if (first == last) continue;
    value += replay_channel(c, plain, eta3, eta3, options_.outcomes, nullptr, first, last).value;
  }
  return value;
}

std::vector<ReplayPoint> Replay::channel_points(const Method& method, const ChannelEtas& etas) const {
  return channel_points(method, etas, options_.outcomes);
}

std::vector<ReplayPoint> Replay::channel_points(const Method& method, const ChannelEtas& etas,
                                                OutcomeMode mode) const {
  std::vector<ReplayPoint> out;
  for (std::size_t c = 0; c < channels_.size(); ++c) {
    const double e = channels_[c].uniform_fpa() && method.strategy == Strategy::McaeNub ? etas.eta3 : etas.eta;
    const Accum a = replay_channel(c, method, e, etas.eta, mode, nullptr);
    out.push_back({a.value, a.cost});
  }
  return out;
}

ReplayPoint Replay::total_point(const Method& method, const ChannelEtas& etas) const {
  ReplayPoint total{0.0, 0.0};
  for (const auto& p : channel_points(method, etas)) {
    total.value += p.value;
    total.cost += p.cost;
  }
  return total;
}

namespace {

void finish(ChannelReport& r, double optimum) {
  r.optimum_surplus = optimum;
  r.roi = r.cost > 0.0 ? r.value / r.cost : std::nan("");
  r.surplus_rate = optimum > 0.0 ? r.surplus / optimum : std::nan("");
}

}  // namespace

ReplayReport Replay::run(const Method& method, const ChannelEtas& etas, std::vector<OutcomeRow>* log) const {
  if (method.shades()) (void)landscape_for(method);
  ReplayReport report;
  report.method = method.label();
  report.outcomes = std::string(to_string(options_.outcomes));
  report.eta = etas.eta;
  report.eta3 = method.strategy == Strategy::McaeNub ? etas.eta3 : etas.eta;
  report.total.channel = "All";
  report.total.eta = etas.eta;
  double total_optimum = 0.0;
  for (std::size_t c = 0; c < channels_.size(); ++c) {
    const double e = channels_[c].uniform_fpa() && method.strategy == Strategy::McaeNub ? etas.eta3 : etas.eta;
    const Accum a = replay_channel(c, method, e, etas.eta, options_.outcomes, log);
    ChannelReport r;
    r.channel = channels_[c].id;
    r.eta = e;
    r.value = a.value;
    r.cost = a.cost;
    r.surplus = a.surplus;
    r.impressions = a.n;
    r.wins = a.wins;
    r.zero_bid_wins = a.zero_wins;
    finish(r, a.optimum);
    report.channels.push_back(r);

    report.total.value += a.value;
    report.total.cost += a.cost;
    report.total.surplus += a.surplus;
    report.total.impressions += a.n;
    report.total.wins += a.wins;
    report.total.zero_bid_wins += a.zero_wins;
    total_optimum += a.optimum;
  }
  finish(report.total, total_optimum);
  return report;
}

std::vector<OutcomeRow> Replay::outcomes(const Method& method, const ChannelEtas& etas, std::size_t begin,
                                         std::size_t end, std::vector<std::size_t>* row_index) const {
  std::vector<std::pair<std::size_t, OutcomeRow>> tagged;
  for (std::size_t c = 0; c < channels_.size(); ++c) {
    const auto& rows = rows_[c];
    const auto first = static_cast<std::size_t>(std::lower_bound(rows.begin(), rows.end(), begin) - rows.begin());
    const auto last = static_cast<std::size_t>(std::lower_bound(rows.begin(), rows.end(), end) - rows.begin());
    if (first == last) continue;
    const double e = channels_[c].uniform_fpa() && method.strategy == Strategy::McaeNub ? etas.eta3 : etas.eta;
    std::vector<OutcomeRow> log;
    replay_channel(c, method, e, etas.eta, options_.outcomes, &log, first, last);
    for (std::size_t k = 0; k < log.size(); ++k) tagged.emplace_back(rows[first + k], std::move(log[k]));
  }
  std::stable_sort(tagged.begin(), tagged.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
  std::vector<OutcomeRow> out;
  out.reserve(tagged.size());
  if (row_index) row_index->clear();
  for (auto& [i, row] : tagged) {
    out.push_back(std::move(row));
    if (row_index) row_index->push_back(i);
  }
  return out;
}

ReplayReport run_strategy(const Replay& replay, const Method& method, const ChannelEtas& etas) {
  return replay.run(method, etas);
}

std::vector<MarginalCostEstimate> estimate_mc(const std::function<std::vector<ReplayPoint>(double)>& replay_fn,
                                              std::span<const std::string> channel_names, double eta,
                                              double delta) {
  if (!(delta > 0.0) || !(eta - delta > 0.0)) throw DomainError("estimate_mc: need 0 < delta < eta");
  const auto up = replay_fn(eta + delta);
  const auto down = replay_fn(eta - delta);
  if (up.size() != channel_names.size() || down.size() != channel_names.size())
    throw ConfigError("estimate_mc: replay returned the wrong number of channels");
  std::vector<MarginalCostEstimate> out;
  for (std::size_t c = 0; c < up.size(); ++c) {
    const double dv = up[c].value - down[c].value;
    if (std::abs(dv) < 1e-12)
      throw DegenerateError("estimate_mc: undefined-MC for channel " + channel_names[c] + " (flat value curve)");
    out.push_back({channel_names[c], (up[c].cost - down[c].cost) / dv, McMethod::FiniteDifference, delta});
  }
  return out;
}

std::vector<double> replay_mc(const Replay& replay, const Method& method, double eta, double delta,
                              const std::optional<PowerLawFit>& fit, OutcomeMode mode) {
  const auto points = [&](double e) {
    ChannelEtas etas{e, e};
    if (method.strategy == Strategy::McaeNub && fit) etas.eta3 = align_eta3(e, *fit);
    auto p = replay.channel_points(method, etas, mode);
    ReplayPoint total{0.0, 0.0};
    for (const auto& q : p) {
      total.value += q.value;
      total.cost += q.cost;
    }
    p.push_back(total);
    return p;
  };
  const auto up = points(eta + delta);
  const auto down = points(eta - delta);
  std::vector<double> out;
  for (std::size_t c = 0; c < up.size(); ++c) {
    const double dv = up[c].value - down[c].value;
    out.push_back(std::abs(dv) < 1e-12 ? std::nan("") : (up[c].cost - down[c].cost) / dv);
  }
  return out;
}

ReplayReport run_matched(const Replay& replay, const Method& method, const Campaign& campaign,
                         const MatchOptions& options) {
  campaign.validate();
  const ConstraintTarget target = ConstraintTarget::from_campaign(campaign, options.tolerance);
  const auto fn = [&](double eta) { return replay.total_point(method, replay.etas_for(method, eta)); };
  const BisectionResult res = bisect_eta(fn, target, options.eta_lo, options.eta_hi, options.max_iterations);

  std::optional<PowerLawFit> fit;
  ChannelEtas etas{res.eta, res.eta};
  if (method.strategy == Strategy::McaeNub) {
    const Alignment a = replay.align(res.eta);
    etas = a.etas;
    fit = a.fit;
  }
  ReplayReport report = replay.run(method, etas);
  report.fit = fit;
  report.constraint_matched =
      detail::within_tolerance(target, constraint_metric(target.kind, {report.total.value, report.total.cost}));
  report.converged = res.converged;
  report.bisection_iterations = res.iterations;

  if (options.estimate_mc) {
    const OutcomeMode mode = options.mc_outcomes.value_or(
        replay.data().has_truth() ? OutcomeMode::Expected : replay.options().outcomes);
    const auto mc = replay_mc(replay, method, res.eta, options.mc_relative_delta * res.eta, fit, mode);
    for (std::size_t c = 0; c < report.channels.size(); ++c) report.channels[c].mc = mc[c];
    report.total.mc = mc.back();
  }
  return report;
}

double value_delta_percent(const ReplayReport& report, const ReplayReport& baseline) {
  if (!(baseline.total.value > 0.0)) return std::nan("");
  return 100.0 * (report.total.value - baseline.total.value) / baseline.total.value;
}

}  // namespace hob
