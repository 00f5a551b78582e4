#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

#include "hob/mca.hpp"

using namespace hob;

namespace {

PowerLawFit with_b(double b) { return {1.0, b, 0.5, 2.0, 0.0, false}; }

}  // namespace

TEST_SUITE("mca") {

TEST_CASE("analytic marginal costs") {
  CHECK(mc_spa(1.0) == 1.0);
  CHECK(mc_spa(0.639) == 0.639);
  CHECK(mc_fpa_shaded(0.953) == 0.953);
  CHECK(mc_fpa_shaded(1.0) == 1.0);
  CHECK(mc_fpa_uniform(1.0, with_b(1.0)) == doctest::Approx(2.0));
  CHECK(mc_fpa_uniform(2.0, with_b(4.0)) == doctest::Approx(2.5));
  CHECK_THROWS_AS(mc_spa(0.0), DomainError);
  CHECK_THROWS_AS(mc_fpa_shaded(-1.0), DomainError);
  CHECK_THROWS_AS(mc_fpa_uniform(0.0, with_b(1.0)), DomainError);
  CHECK_THROWS_AS(mc_fpa_uniform(1.0, with_b(0.0)), DegenerateError);
}

TEST_CASE("fit_power_law exact two-point fit") {
  const std::vector<std::pair<double, double>> pts{{1.0, 2.0}, {4.0, 16.0}};
  const auto f = fit_power_law(pts);
  CHECK(f.a == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(f.b == doctest::Approx(1.5).epsilon(1e-12));
  CHECK(f.eta_lo == 1.0);
  CHECK(f.eta_hi == 4.0);
  CHECK(f.residual <= 1e-12);
}

TEST_CASE("flat curve: rejected, or floored with a flag") {
  const std::vector<std::pair<double, double>> flat{{1.0, 3.0}, {2.0, 3.0}, {4.0, 3.0}};
  CHECK_THROWS_AS(fit_power_law(flat, {1e-3, ExponentPolicy::Reject}), DegenerateError);
  const auto f = fit_power_law(flat, {1e-3, ExponentPolicy::Floor});
  CHECK(f.b == 1e-3);
  CHECK(f.floored);
}

TEST_CASE("fit_power_law input errors") {
  const std::vector<std::pair<double, double>> neg{{1.0, -1.0}, {2.0, 3.0}};
  CHECK_THROWS_AS(fit_power_law(neg), DomainError);
  const std::vector<std::pair<double, double>> same{{2.0, 1.0}, {2.0, 3.0}};
  CHECK_THROWS_AS(fit_power_law(same), DegenerateError);
  const std::vector<std::pair<double, double>> one{{2.0, 1.0}};
  CHECK_THROWS_AS(fit_power_law(one), DegenerateError);
}

TEST_CASE("fit_power_law recovers a noisy exponent") {
  std::mt19937_64 rng(13);
  std::normal_distribution<double> noise(0.0, 0.01);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<std::pair<double, double>> pts;
    for (double eta : {0.5, 0.75, 1.0, 1.5, 2.0}) pts.emplace_back(eta, 2.0 * std::pow(eta, 1.5) * (1.0 + noise(rng)));
    CHECK(std::abs(fit_power_law(pts).b - 1.5) <= 0.1);
  }
}

TEST_CASE("property: noiseless power laws fit with zero residual") {
  std::mt19937_64 rng(14);
  std::uniform_real_distribution<double> u(0.1, 5.0);
  for (int trial = 0; trial < 100; ++trial) {
    const double a = u(rng), b = u(rng);
    std::vector<std::pair<double, double>> pts;
    for (int k = 0; k < 6; ++k) {
      const double eta = 0.2 + 0.7 * k * u(rng);
      pts.emplace_back(eta, a * std::pow(eta, b));
    }
    const auto f = fit_power_law(pts);
    CHECK(f.residual <= 1e-10);
    CHECK(f.b == doctest::Approx(b).epsilon(1e-9));
    CHECK(f.value(1.7) == doctest::Approx(a * std::pow(1.7, b)).epsilon(1e-9));
  }
}

TEST_CASE("align_eta3 examples") {
  CHECK(align_eta3(1.0, with_b(1.0)) == doctest::Approx(0.5));
  CHECK(align_eta3(1.0, with_b(1e6)) == doctest::Approx(1.0).epsilon(1e-5));
  CHECK(align_eta3(0.9, with_b(2.0)) == doctest::Approx(0.6));
  CHECK(mc_fpa_uniform(0.6, with_b(2.0)) == doctest::Approx(0.9));
  const auto e = align_channels(0.9, with_b(2.0));
  CHECK(e.eta == 0.9);
  CHECK(e.eta3 == doctest::Approx(0.6));
}

TEST_CASE("property: alignment round-trip and eta3 below eta") {
  std::mt19937_64 rng(15);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 1000; ++trial) {
    const double eta = std::exp(6.0 * u(rng) - 3.0);
    const double b = std::exp(8.0 * u(rng) - 4.0);
    const auto fit = with_b(b);
    const double eta3 = align_eta3(eta, fit);
    CHECK(eta3 < eta);
    CHECK(eta3 > 0.0);
    CHECK(std::abs(mc_fpa_uniform(eta3, fit) - eta) <= 1e-12 * eta);
  }
}

TEST_CASE("align_by_replay on an exact power-law curve") {
  for (double b : {0.5, 1.0, 2.0, 3.0})
    for (double eta : {0.3, 1.0, 4.0}) {
      const auto curve = [&](double e) { return 7.0 * std::pow(e, b); };
      const Alignment a = align_by_replay(eta, curve);
      CHECK(a.etas.eta == eta);
      CHECK(a.etas.eta3 == doctest::Approx(eta / (1.0 + 1.0 / b)).epsilon(1e-5));
      CHECK(a.fit.b == doctest::Approx(b).epsilon(1e-9));
    }
}

TEST_CASE("align_by_replay with a saturating curve still equalizes MC") {
  // V = 1 - exp(-e): the local exponent falls as e grows.
  const auto curve = [](double e) { return 1.0 - std::exp(-e); };
  const double eta = 1.2;
  const Alignment a = align_by_replay(eta, curve);
  const double e3 = a.etas.eta3;
  const double dv = std::exp(-e3);  // V'
  const double mc = e3 + curve(e3) / dv;
  CHECK(mc == doctest::Approx(eta).epsilon(0.02));
}

TEST_CASE("align_by_replay returns the floor for a curve with no value") {
  ReplayAlignmentOptions o;
  const Alignment a = align_by_replay(2.0, [](double e) { return e > 100.0 ? 1.0 : 0.0; }, o);
  CHECK(a.etas.eta3 == doctest::Approx(o.floor * 2.0));
  CHECK_THROWS_AS(align_by_replay(0.0, [](double e) { return e; }), DomainError);
}

TEST_CASE("PowerLawWindow keeps the last K observations") {
  PowerLawWindow w(3);
  CHECK_FALSE(w.fit().has_value());
  w.observe(1.0, 2.0);
  w.observe(1.0, 2.5);
  CHECK_FALSE(w.fit().has_value());
  w.observe(100.0, 1.0);
  w.observe(2.0, 8.0);
  w.observe(4.0, 32.0);
  CHECK(w.size() == 3);
  // Holds (100, 1), (2, 8), (4, 32).
  const auto f = w.fit();
  REQUIRE(f.has_value());
  CHECK(f->eta_hi == 100.0);
  w.observe(8.0, 128.0);
  const auto g = w.fit();
  REQUIRE(g.has_value());
  CHECK(g->b == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(g->a == doctest::Approx(2.0).epsilon(1e-12));
}

}  // TEST_SUITE
