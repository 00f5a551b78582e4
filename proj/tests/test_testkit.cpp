#include <doctest.h>

#include <cmath>
#include <random>

#include "hob/testkit.hpp"

using namespace hob;
using namespace hob::testkit;

TEST_SUITE("testkit") {

TEST_CASE("grid_optimal_bid examples") {
  const ZieParamsd p(0.5, 1.0);
  const auto two = grid_optimal_bid(p, 4.0, 2);
  CHECK(two.bid == 0.0);
  CHECK(two.surplus == doctest::Approx(2.0));
  const auto g = grid_optimal_bid(ZieParamsd(0.1, 0.5), 10.0, 10001);
  CHECK(std::abs(g.bid - 2.834) <= 2e-3);
  CHECK(grid_optimal_bid(p, 0.0, 5).surplus == 0.0);
  CHECK_THROWS_AS(grid_optimal_bid(p, 1.0, 1), DomainError);
  CHECK_THROWS_AS(grid_optimal_bid(p, -1.0, 5), DomainError);
}

TEST_CASE("foc_root solves the first-order condition") {
  const ZieParamsd q(0.1, 0.5);
  const double x = foc_root(q, 10.0);
  CHECK((0.9 * (1.0 + 0.5 * (10.0 - x)) - std::exp(0.5 * x)) == doctest::Approx(0.0).scale(1.0).epsilon(1e-9));
  CHECK(foc_root(ZieParamsd(0.5, 1.0), 1.0) == 0.0);
}

TEST_CASE("exhaustive MCKP examples") {
  MckpInstance inst;
  inst.items = {{{0, 0}, {1.0, 1.0}, {3.0, 4.0}}, {{0, 0}, {2.0, 1.0}}};
  inst.budget = 0.0;
  auto s = solve_mckp_exhaustive(inst);
  CHECK(s.feasible);
  CHECK(s.value == 0.0);
  CHECK(s.assignment == std::vector<std::size_t>{0, 0});

  inst.budget = 2.0;
  s = solve_mckp_exhaustive(inst);
  CHECK(s.value == 3.0);
  CHECK(s.assignment == std::vector<std::size_t>{1, 1});
  inst.budget = 5.0;
  CHECK(solve_mckp_exhaustive(inst).value == 5.0);

  // ROI band excludes the high-value option.
  inst.roi = RoiBand{1.5, 0.6};
  s = solve_mckp_exhaustive(inst);
  CHECK(s.feasible);
  CHECK(s.value / s.cost >= 0.9);
  CHECK(s.value / s.cost <= 2.1);
  CHECK(mckp_feasible(inst, 0.0, 0.0));
  CHECK_FALSE(mckp_feasible(inst, 1.0, 0.0));
  CHECK_FALSE(mckp_feasible(inst, 5.0, 1.0));
}

TEST_CASE("exhaustive MCKP refuses what it cannot handle") {
  MckpInstance big = random_mckp(1, 13, 3);
  CHECK_THROWS_AS(solve_mckp_exhaustive(big), ConfigError);
  MckpInstance wide = random_mckp(1, 3, 6);
  CHECK_THROWS_AS(solve_mckp_exhaustive(wide), ConfigError);
  MckpInstance no_null;
  no_null.items = {{{1.0, 1.0}}};
  no_null.budget = 5.0;
  CHECK_THROWS_AS(solve_mckp_exhaustive(no_null), ConfigError);
  CHECK_THROWS_AS(sweep_dual_rule(no_null, log_spaced(0.1, 1.0, 3)), ConfigError);
}

TEST_CASE("exhaustive solver beats every random feasible assignment") {
  std::mt19937_64 rng(3);
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const MckpInstance inst = random_mckp(seed, 8, 4);
    const auto opt = solve_mckp_exhaustive(inst);
    REQUIRE(opt.feasible);
    for (int t = 0; t < 200; ++t) {
      double v = 0.0, c = 0.0;
      for (const auto& item : inst.items) {
        const auto& ch = item[rng() % item.size()];
        v += ch.value;
        c += ch.cost;
      }
      if (mckp_feasible(inst, v, c)) CHECK(v <= opt.value + 1e-12);
    }
  }
}

TEST_CASE("property: weak duality and a small gap for the swept dual rule") {
  const auto etas = log_spaced(0.01, 100.0, 200);
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const MckpInstance inst = random_mckp(seed, 10, 4);
    const auto opt = solve_mckp_exhaustive(inst);
    const auto dual = sweep_dual_rule(inst, etas);
    REQUIRE(dual.best.feasible);
    CHECK(dual.best.value <= opt.value);
    CHECK(dual.best.value >= 0.95 * opt.value);
    CHECK(dual.per_eta.size() == etas.size());
    // Lagrangian bound: opt <= sum_i max_k (v - w / eta) + budget / eta.
    for (double eta : {0.3, 1.0, 3.0}) {
      double bound = inst.budget / eta;
      for (const auto& item : inst.items) {
        double best = 0.0;
        for (const auto& c : item) best = std::max(best, c.value - c.cost / eta);
        bound += best;
      }
      CHECK(opt.value <= bound + 1e-12);
    }
  }
}

TEST_CASE("random_mckp shape") {
  const auto inst = random_mckp(9, 10, 4, 0.4);
  CHECK(inst.items.size() == 10);
  double top = 0.0;
  for (const auto& item : inst.items) {
    REQUIRE(item.size() == 4);
    CHECK(item[0].value == 0.0);
    CHECK(item[0].cost == 0.0);
    for (std::size_t k = 1; k < 4; ++k) {
      CHECK(item[k].value > item[k - 1].value);
      CHECK(item[k].cost > item[k - 1].cost);
    }
    top += item.back().cost;
  }
  CHECK(inst.budget == doctest::Approx(0.4 * top));
  CHECK(random_mckp(9, 10, 4).budget == inst.budget);
}

TEST_CASE("optimal_surplus_baseline against a direct sum") {
  Dataset d;
  d.feature_dim = 1;
  const double values[] = {1.0, 2.0, 0.5, 0.0};
  const double prices[] = {0.5, 3.0, 0.0, 1.0};
  for (int i = 0; i < 4; ++i) {
    Impression r;
    r.id = std::to_string(i);
    r.features = Eigen::VectorXd::Zero(1);
    r.value = values[i];
    r.winning_price = prices[i];
    d.rows.push_back(r);
  }
  CHECK(optimal_surplus_baseline(d, 1.0) == doctest::Approx(0.5 + 0.0 + 0.5 + 0.0));
  CHECK(optimal_surplus_baseline(d, 2.0) == doctest::Approx(1.5 + 1.0 + 1.0));
  CHECK(optimal_surplus_baseline(d, 0.0) == 0.0);
}

TEST_CASE("finite_difference_mc") {
  const auto cost = [](double e) { return e * e; };
  const auto value = [](double e) { return 2.0 * e; };
  CHECK(finite_difference_mc(cost, value, 3.0, 1e-3) == doctest::Approx(3.0));
  CHECK_THROWS_AS(finite_difference_mc(cost, [](double) { return 1.0; }, 1.0, 1e-3), DegenerateError);
}

TEST_CASE("power_law_dataset counts follow eta^2") {
  const auto d = power_law_dataset(10000, 2.0);
  CHECK(d.size() == 10000);
  for (double eta : {0.5, 1.0, 1.5}) {
    std::size_t won = 0;
    for (const auto& r : d.rows) won += r.winning_price <= eta ? 1 : 0;
    CHECK(static_cast<double>(won) == doctest::Approx(10000.0 * eta * eta / 4.0).epsilon(1e-3));
  }
  CHECK(d.rows[0].channel == "FPA+u");
  CHECK_THROWS_AS(power_law_dataset(0, 1.0), DomainError);
}

TEST_CASE("log_spaced") {
  const auto v = log_spaced(0.01, 100.0, 5);
  REQUIRE(v.size() == 5);
  CHECK(v.front() == doctest::Approx(0.01));
  CHECK(v[2] == doctest::Approx(1.0));
  CHECK(v.back() == doctest::Approx(100.0));
  CHECK_THROWS_AS(log_spaced(0.0, 1.0, 5), DomainError);
  CHECK_THROWS_AS(log_spaced(1.0, 2.0, 1), DomainError);
}

}  // TEST_SUITE
