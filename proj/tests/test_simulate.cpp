#include <doctest.h>

#include <json.hpp>

#include <cmath>
#include <sstream>

#include "hob/report.hpp"
#include "hob/simulate.hpp"
#include "hob/testkit.hpp"
#include "support.hpp"

using namespace hob;

namespace {

const Dataset& shared_data() {
  static const Dataset d = test::small_dataset(30000, 21, 5);
  return d;
}

Replay truth_replay(const Dataset& d, std::vector<ChannelSpec> channels, ReplayOptions o = {}) {
  Replay r(d, std::move(channels), o);
  r.set_landscape(DistKind::Zie, truth_landscape(d));
  return r;
}

bool same_numbers(const ChannelReport& a, const ChannelReport& b) {
  return a.value == b.value && a.cost == b.cost && a.surplus == b.surplus && a.wins == b.wins &&
         a.zero_bid_wins == b.zero_bid_wins && a.impressions == b.impressions && a.eta == b.eta;
}

}  // namespace

TEST_SUITE("simulate") {

TEST_CASE("resolve_auction cost rules") {
  Impression organic;
  organic.winning_price = 0.0;
  organic.value = 2.0;
  auto o = resolve_auction(Mechanism::Fpa, 0.0, organic);
  CHECK(o.won);
  CHECK(o.cost == 0.0);
  CHECK(o.value_realized == 2.0);
  o = resolve_auction(Mechanism::Fpa, 1.0, organic);
  CHECK(o.cost == 1.0);
  o = resolve_auction(Mechanism::Spa, 0.0, organic);
  CHECK(o.won);
  CHECK(o.cost == 0.0);

  Impression paid;
  paid.winning_price = 0.4;
  paid.value = 1.0;
  o = resolve_auction(Mechanism::Spa, 1.0, paid);
  CHECK(o.won);
  CHECK(o.cost == 0.4);
  o = resolve_auction(Mechanism::Spa, 0.4, paid);
  CHECK(o.won);  // ties win
  o = resolve_auction(Mechanism::Fpa, 0.3, paid);
  CHECK_FALSE(o.won);
  CHECK(o.cost == 0.0);
  CHECK(o.value_realized == 0.0);
  CHECK_THROWS_AS(resolve_auction(Mechanism::Spa, -1.0, paid), DomainError);
}

TEST_CASE("property: auction outcomes respect the cost rules") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.0, 2.0);
  for (int t = 0; t < 2000; ++t) {
    Impression imp;
    imp.winning_price = t % 5 == 0 ? 0.0 : u(rng);
    imp.value = u(rng);
    const double bid = t % 7 == 0 ? 0.0 : u(rng);
    const auto s = resolve_auction(Mechanism::Spa, bid, imp);
    const auto f = resolve_auction(Mechanism::Fpa, bid, imp);
    CHECK(s.won == (bid >= imp.winning_price));
    CHECK(s.won == f.won);
    CHECK(s.cost <= bid);
    CHECK(s.cost <= f.cost);
    CHECK(s.cost == (s.won ? imp.winning_price : 0.0));
    CHECK(f.cost == (f.won ? bid : 0.0));
    CHECK(s.value_realized == (s.won ? imp.value : 0.0));
  }
}

TEST_CASE("channel specs") {
  const auto c = parse_channels("spa:0.5,fpa_u:0.25,fpa_nu:0.25");
  REQUIRE(c.size() == 3);
  CHECK(c[0].id == "SPA");
  CHECK(c[1].uniform_fpa());
  CHECK(c[2].shaded_fpa());
  CHECK(format_channels(c) == "spa:0.5,fpa_u:0.25,fpa_nu:0.25");
  CHECK_THROWS_AS(parse_channels("spa:0.5,fpa_u:0.4"), ConfigError);
  CHECK_THROWS_AS(parse_channels("spa:0.5,spa:0.5"), ConfigError);
  CHECK_THROWS_AS(parse_channels("vickrey:1"), ConfigError);
  std::vector<ChannelSpec> bad{{"X", Mechanism::Spa, BiddingMode::NonUniform, 1.0}};
  CHECK_THROWS_AS(validate_channels(bad), ConfigError);
  const auto v = three_channels_varying("fpa_nu", 0.6);
  CHECK(v[2].traffic_share == 0.6);
  CHECK(v[0].traffic_share == doctest::Approx(0.2));
}

TEST_CASE("hash assignment is deterministic and follows the shares") {
  const auto c = three_channels(0.5, 0.3, 0.2);
  std::vector<int> counts(3, 0);
  for (int i = 0; i < 100000; ++i) {
    const std::string id = "imp" + std::to_string(i);
    const auto k = assign_channel(id, c);
    CHECK(k == assign_channel(id, c));
    ++counts[k];
  }
  CHECK(counts[0] / 1e5 == doctest::Approx(0.5).epsilon(0.02));
  CHECK(counts[1] / 1e5 == doctest::Approx(0.3).epsilon(0.03));
  CHECK(counts[2] / 1e5 == doctest::Approx(0.2).epsilon(0.04));
}

TEST_CASE("method labels round-trip") {
  for (const char* l : {"UE&UB", "UE&NUB-Z", "UE&NUB-G", "MCAE&NUB-L", "MCAE&NUB-E"})
    CHECK(Method::parse(l).label() == l);
  CHECK(Method::parse("HOB").label() == "MCAE&NUB-Z");
  CHECK_THROWS_AS(Method::parse("UE&NUB"), ConfigError);
  CHECK_THROWS_AS(Method::parse("XX-Z"), ConfigError);
}

TEST_CASE("shading without a landscape is a configuration error") {
  Replay r(shared_data(), three_channels(0.34, 0.33, 0.33));
  CHECK_THROWS_AS(r.run({Strategy::UeNub, DistKind::Zie}, {1.0, 1.0}), ConfigError);
  CHECK_NOTHROW(r.run({Strategy::UeUb, DistKind::Zie}, {1.0, 1.0}));
}

TEST_CASE("report totals equal channel sums and surplus stays below the clairvoyant optimum") {
  const Replay r = truth_replay(shared_data(), three_channels(0.34, 0.33, 0.33));
  for (const char* m : {"UE&UB", "UE&NUB-Z", "MCAE&NUB-Z"}) {
    const Method method = Method::parse(m);
    const auto rep = r.run(method, r.etas_for(method, 1.3));
    double value = 0.0, cost = 0.0, optimum = 0.0;
    std::size_t n = 0;
    for (const auto& c : rep.channels) {
      value += c.value;
      cost += c.cost;
      optimum += c.optimum_surplus;
      n += c.impressions;
      CHECK(c.surplus <= c.optimum_surplus);
      CHECK(c.roi > 0.0);
    }
    CHECK(rep.total.value == value);
    CHECK(rep.total.cost == cost);
    CHECK(rep.total.optimum_surplus == optimum);
    CHECK(n == shared_data().size());
    CHECK(rep.total.surplus_rate <= 1.0);
    CHECK(rep.total.optimum_surplus ==
          doctest::Approx(testkit::optimal_surplus_baseline(shared_data(), 1.3)).epsilon(1e-12));
  }
}

TEST_CASE("totals are recomputable bit-exactly from the outcome log") {
  ReplayOptions o;
  o.threads = 4;
  const Replay r = truth_replay(shared_data(), three_channels(0.34, 0.33, 0.33), o);
  const Method method = Method::parse("UE&NUB-Z");
  std::vector<OutcomeRow> log;
  const auto logged = r.run(method, {1.1, 1.1}, &log);
  const auto plain = r.run(method, {1.1, 1.1});
  CHECK(report_json(logged) == report_json(plain));

  // Documented order: chunks within a channel, then channels.
  double total_value = 0.0, total_cost = 0.0;
  std::size_t k = 0;
  for (const auto& ch : plain.channels) {
    double cv = 0.0, cc = 0.0, chunk_v = 0.0, chunk_c = 0.0;
    std::size_t in_chunk = 0;
    for (; k < log.size() && log[k].channel == ch.channel; ++k) {
      chunk_v += log[k].value_realized;
      chunk_c += log[k].cost;
      if (++in_chunk == kReductionChunk) {
        cv += chunk_v;
        cc += chunk_c;
        chunk_v = chunk_c = 0.0;
        in_chunk = 0;
      }
    }
    if (in_chunk > 0) {
      cv += chunk_v;
      cc += chunk_c;
    }
    CHECK(cv == ch.value);
    CHECK(cc == ch.cost);
    total_value += cv;
    total_cost += cc;
  }
  CHECK(k == log.size());
  CHECK(total_value == plain.total.value);
  CHECK(total_cost == plain.total.cost);
}

TEST_CASE("reports are identical for any thread count") {
  std::string first;
  for (unsigned t : {1u, 2u, 5u}) {
    ReplayOptions o;
    o.threads = t;
    const Replay r = truth_replay(shared_data(), three_channels(0.34, 0.33, 0.33), o);
    const auto json = report_json(r.run(Method::parse("MCAE&NUB-Z"), r.etas_for(Method::parse("MCAE&NUB-Z"), 0.9)));
    if (first.empty())
      first = json;
    else
      CHECK(json == first);
  }
}

TEST_CASE("second price never costs more than first price on the same bids") {
  ReplayOptions o;
  o.assignment = AssignmentMode::Duplicate;
  Replay r(shared_data(), parse_channels("spa:0.5,fpa_u:0.5"), o);
  for (double eta : {0.2, 1.0, 4.0}) {
    const auto rep = r.run(Method::parse("UE&UB"), {eta, eta});
    CHECK(rep.channels[0].impressions == shared_data().size());
    CHECK(rep.channels[0].value == rep.channels[1].value);
    CHECK(rep.channels[0].cost <= rep.channels[1].cost);
  }
}

TEST_CASE("zero-bid wins are exactly the organic impressions bid at zero") {
  const Replay r = truth_replay(shared_data(), three_channels(0.34, 0.33, 0.33));
  std::vector<OutcomeRow> log;
  std::vector<std::size_t> rows;
  const auto rep = r.run(Method::parse("UE&NUB-Z"), {0.8, 0.8}, &log);
  const auto ordered = r.outcomes(Method::parse("UE&NUB-Z"), {0.8, 0.8}, 0, shared_data().size(), &rows);
  double zero_wins = 0.0;
  for (std::size_t k = 0; k < ordered.size(); ++k)
    if (ordered[k].bid == 0.0 && shared_data().rows[rows[k]].winning_price == 0.0) {
      CHECK(ordered[k].won);
      zero_wins += 1.0;
    }
  CHECK(rep.total.zero_bid_wins == zero_wins);
  CHECK(zero_wins > 0.0);
}

TEST_CASE("a single SPA channel makes the alignment inert") {
  const Replay r = truth_replay(shared_data(), parse_channels("spa:1"));
  const auto a = r.run(Method::parse("UE&UB"), r.etas_for(Method::parse("UE&UB"), 1.4));
  const auto b = r.run(Method::parse("MCAE&NUB-Z"), r.etas_for(Method::parse("MCAE&NUB-Z"), 1.4));
  REQUIRE(a.channels.size() == 1);
  CHECK(same_numbers(a.channels[0], b.channels[0]));
  CHECK(same_numbers(a.total, b.total));
}

TEST_CASE("all-organic traffic is won for free by the shading bidder") {
  Dataset d = test::small_dataset(2000, 5, 3);
  double total_v = 0.0;
  for (auto& row : d.rows) {
    row.winning_price = 0.0;
    row.truth = ZieParamsd(1.0 - 1e-6, 1.0);
    total_v += 1.5 * row.value;
  }
  const Replay r = truth_replay(d, parse_channels("fpa_nu:1"));
  std::vector<OutcomeRow> log;
  const auto rep = r.run(Method::parse("UE&NUB-Z"), {1.5, 1.5}, &log);
  CHECK(rep.total.cost == 0.0);
  CHECK(rep.total.wins == static_cast<double>(d.size()));
  for (const auto& o : log) CHECK(o.bid == 0.0);
  CHECK(rep.total.surplus == doctest::Approx(total_v));
  CHECK(rep.total.optimum_surplus == doctest::Approx(total_v));
}

TEST_CASE("tagged assignment follows the row tags") {
  Dataset d = shared_data();
  const auto channels = three_channels(0.34, 0.33, 0.33);
  tag_channels(d, channels);
  ReplayOptions tagged;
  tagged.assignment = AssignmentMode::Tagged;
  const Replay a(d, channels, tagged);
  const Replay b(d, channels, {});
  CHECK(report_json(a.run(Method::parse("UE&UB"), {1.0, 1.0})) ==
        report_json(b.run(Method::parse("UE&UB"), {1.0, 1.0})));
  d.rows[3].channel = "nowhere";
  CHECK_THROWS_AS(Replay(d, channels, tagged), ConfigError);
}

TEST_CASE("estimate_mc on known curves") {
  const std::vector<std::string> names{"A", "B"};
  const auto fn = [](double eta) {
    return std::vector<ReplayPoint>{{2.0 * eta, 3.0 * eta}, {eta * eta, eta * eta * eta}};
  };
  const auto mc = estimate_mc(fn, names, 1.0, 1e-3);
  CHECK(mc[0].mc == doctest::Approx(1.5));
  CHECK(mc[1].mc == doctest::Approx(1.5).epsilon(1e-5));  // 3 eta^2 / 2 eta
  CHECK(mc[0].method == McMethod::FiniteDifference);
  const auto flat = [](double) { return std::vector<ReplayPoint>{{1.0, 1.0}, {2.0, 2.0}}; };
  CHECK_THROWS_WITH_AS(estimate_mc(flat, names, 1.0, 1e-3), doctest::Contains("A"), DegenerateError);
}

TEST_CASE("replay marginal costs per mechanism") {
  SUBCASE("SPA at eta 0.8") {
    ReplayOptions o;
    o.outcomes = OutcomeMode::Expected;
    const Replay r = truth_replay(shared_data(), parse_channels("spa:1"), o);
    const auto mc = replay_mc(r, Method::parse("UE&UB"), 0.8, 0.8e-3, std::nullopt, OutcomeMode::Expected);
    CHECK(mc[0] == doctest::Approx(0.8).epsilon(0.05));
  }
  SUBCASE("shaded FPA at eta 1") {
    const Replay r = truth_replay(shared_data(), parse_channels("fpa_nu:1"));
    const auto mc = replay_mc(r, Method::parse("UE&NUB-Z"), 1.0, 1e-3, std::nullopt, OutcomeMode::Expected);
    CHECK(mc[0] == doctest::Approx(1.0).epsilon(0.05));
  }
  SUBCASE("uniform FPA on a quadratic value curve") {
    const Dataset d = testkit::power_law_dataset(200000, 2.0);
    const Replay r(d, parse_channels("fpa_u:1"));
    const auto mc = replay_mc(r, Method::parse("UE&UB"), 1.0, 1e-3, std::nullopt, OutcomeMode::Realized);
    CHECK(mc[0] == doctest::Approx(1.5).epsilon(0.05));
  }
}

TEST_CASE("constraint-matched runs meet the cost target") {
  const Replay r = truth_replay(shared_data(), three_channels(0.34, 0.33, 0.33));
  MatchOptions m;
  m.estimate_mc = false;
  for (const char* label : {"UE&UB", "UE&NUB-Z", "MCAE&NUB-Z"}) {
    const auto rep = run_matched(r, Method::parse(label), Campaign::max_return(3000.0), m);
    CHECK(rep.constraint_matched);
    CHECK(rep.converged);
    CHECK(std::abs(rep.total.cost - 3000.0) <= 3.0);
  }
  CHECK_THROWS_AS(run_matched(r, Method::parse("UE&UB"), Campaign::max_return(1e9), m), InfeasibleError);

  const auto roas = run_matched(r, Method::parse("UE&UB"), Campaign::roas(1e9, 3.0, 0.05), m);
  CHECK(std::abs(roas.total.value / roas.total.cost - 3.0) <= 0.05);
}

TEST_CASE("run_strategy is the plain replay") {
  const Replay r = truth_replay(shared_data(), three_channels(0.34, 0.33, 0.33));
  const Method m = Method::parse("UE&NUB-Z");
  CHECK(report_json(run_strategy(r, m, {0.7, 0.7})) == report_json(r.run(m, {0.7, 0.7})));
}

TEST_CASE("spearman with ties") {
  const std::vector<double> x{1, 2, 3, 4};
  CHECK(spearman(x, std::vector<double>{10, 20, 30, 40}) == doctest::Approx(1.0));
  CHECK(spearman(x, std::vector<double>{4, 3, 2, 1}) == doctest::Approx(-1.0));
  CHECK(spearman(x, std::vector<double>{1, 1, 2, 2}) == doctest::Approx(2.0 / std::sqrt(5.0)));
}

TEST_CASE("sweeps") {
  SweepBase base;
  base.data = &shared_data();
  base.channels = three_channels(0.34, 0.33, 0.33);
  base.campaign = Campaign::max_return(3000.0);
  base.methods = {Method::parse("UE&UB"), Method::parse("MCAE&NUB-Z")};
  base.use_truth_landscape = true;
  base.match.estimate_mc = false;

  SUBCASE("a single budget point equals the matched replay") {
    const std::vector<double> grid{3000.0};
    const auto pts = sweep(SweepExperiment::BudgetLevels, grid, base);
    REQUIRE(pts.size() == 1);
    const Replay r = truth_replay(shared_data(), base.channels);
    for (std::size_t k = 0; k < base.methods.size(); ++k)
      CHECK(report_json(pts[0].reports[k]) ==
            report_json(run_matched(r, base.methods[k], base.campaign, base.match)));
  }
  SUBCASE("MCA keeps a higher ROI at every budget tier") {
    const std::vector<double> grid{1500.0, 3000.0, 4500.0};
    for (const auto& p : sweep(SweepExperiment::BudgetLevels, grid, base)) {
      const auto& ue = p.reports[0].total;
      const auto& mca = p.reports[1].total;
      CAPTURE(p.x);
      CHECK(mca.value / mca.cost >= ue.value / ue.cost);
    }
  }
  SUBCASE("alignment gains over shading alone at every FPA+nu share") {
    base.methods = {Method::parse("UE&NUB-Z"), Method::parse("MCAE&NUB-Z")};
    const std::vector<double> grid{0.1, 0.5, 0.9};
    int compared = 0;
    for (const auto& p : sweep(SweepExperiment::ChannelProportions, grid, base)) {
      CAPTURE(p.x);
      if (!p.reports[0].constraint_matched || !p.reports[1].constraint_matched) continue;
      ++compared;
      CHECK(value_delta_percent(p.reports[1], p.reports[0]) > 0.0);
    }
    CHECK(compared >= 2);
  }
  SUBCASE("organic share sweep strips ground truth only when noise is added") {
    base.use_truth_landscape = false;
    base.methods = {Method::parse("UE&UB")};
    const std::vector<double> grid{0.0, 0.7};
    const auto pts = sweep(SweepExperiment::OrganicShare, grid, base);
    CHECK(pts.size() == 2);
    CHECK(pts[1].reports[0].total.cost == doctest::Approx(3000.0).epsilon(2e-3));
  }
  CHECK_THROWS(sweep(SweepExperiment::BudgetLevels, std::vector<double>{}, base));
}

TEST_CASE("streaming replay respects the budget and paces it") {
  const Replay r = truth_replay(shared_data(), three_channels(0.34, 0.33, 0.33));
  const ControlConfig cfg;
  for (const char* label : {"UE&UB", "UE&NUB-Z", "MCAE&NUB-Z"}) {
    const auto s = run_streaming(r, Method::parse(label), Campaign::max_return(3000.0), cfg, 1.0);
    const std::string name = label;
    CAPTURE(name);
    CHECK(s.trace.size() == 24);
    CHECK(s.report.total.cost <= 3000.0);
    CHECK(s.report.total.cost >= 0.95 * 3000.0);  // 1250 rows per period: noisy
    double spend = 0.0;
    for (const auto& t : s.trace) spend += t.spend;
    CHECK(spend == doctest::Approx(s.report.total.cost));
  }
  CHECK_THROWS_AS(run_streaming(r, Method::parse("UE&UB"), Campaign::max_return(3000.0), cfg, 1e6), ConfigError);
}

TEST_CASE("report JSON layout") {
  ReplayReport rep;
  rep.method = "UE&UB";
  rep.channels.push_back({});
  rep.channels[0].channel = "SPA";
  rep.total.channel = "All";
  const auto j = nlohmann::json::parse(report_json(rep));
  CHECK(j["method"] == "UE&UB");
  CHECK(j["total"]["mc"].is_null());
  CHECK(j["channels"][0]["channel"] == "SPA");
  const auto doc = report_document(std::vector<ReplayReport>{rep});
  CHECK(doc["format"] == kReportFormat);

  std::ostringstream csv;
  write_outcome_csv(csv, std::vector<OutcomeRow>{{"a", "SPA", 0.5, true, 0.25, 1.0}});
  CHECK(csv.str().rfind("id,channel,bid,won,cost,value\n", 0) == 0);
}

}  // TEST_SUITE
