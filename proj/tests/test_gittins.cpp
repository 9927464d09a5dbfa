#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <stdexcept>

#include "mg1/gittins.hpp"
#include "test_util.hpp"

using mg1::build_table;
using mg1::efficiency;
using mg1::gittins_index;
using mg1::GittinsConfig;
using mg1::kInf;
using mg1::ServiceDistribution;
using testutil::rel_err;

TEST_CASE("exponential index is the constant rate", "[gittins]") {
  auto d = ServiceDistribution::exponential(1.0);
  for (double a : {0.0, 0.3, 1.0, 4.0, 9.0}) {
    for (double delta : {0.01, 0.5, 2.0, 20.0})
      CHECK(rel_err(efficiency(d, a, delta), 1.0) < 1e-12);
    CHECK(rel_err(gittins_index(d, a), 1.0) < 1e-9);
  }
  auto d2 = ServiceDistribution::exponential(3.5);
  auto tab = build_table(d2);
  for (std::size_t i = 0; i < tab.size(); ++i)
    CHECK(rel_err(tab.value_at(i), 3.5) < 1e-9);
}

TEST_CASE("DHR pareto index tracks the hazard rate", "[gittins]") {
  auto d = ServiceDistribution::shifted_pareto(3.0);
  double prev = kInf;
  for (double a : {0.0, 0.5, 1.0, 2.5, 5.0, 10.0}) {
    const double g = gittins_index(d, a);
    CHECK(rel_err(g, 3.0 / (1.0 + a)) < 0.01);
    CHECK(g < prev);  // decreasing hazard => foreground-background behaviour
    prev = g;
  }
  auto tab = build_table(d);
  for (double a : {0.1, 0.7, 1.9, 4.2, 8.8})
    CHECK(rel_err(tab(a), 3.0 / (1.0 + a)) < 0.01);
}

TEST_CASE("deterministic index rewards proximity to completion", "[gittins]") {
  auto d = ServiceDistribution::deterministic(2.0);
  for (double a : {0.0, 0.5, 1.0, 1.9})
    CHECK(rel_err(gittins_index(d, a), 1.0 / (2.0 - a)) < 1e-9);
}

TEST_CASE("type-A truncation blows the index up near the atom", "[gittins]") {
  auto base = ServiceDistribution::shifted_pareto(3.0);
  auto d = ServiceDistribution::truncated_a(base, 4.0);

  const double a = 3.99;
  const double g_trunc = gittins_index(d, a);
  const double g_base = gittins_index(base, a);
  CHECK(g_trunc >= 10.0 * g_base);
  // atom-reaching quantum: eff = S(a) / int_a^s S, here ~ 1/(s-a)
  CHECK(rel_err(g_trunc, 1.0 / 0.01) < 0.02);

  CHECK(gittins_index(d, 4.0) == kInf);   // only the atom remains
  CHECK(gittins_index(d, 4.5) == kInf);

  auto tab = build_table(d);
  CHECK(tab.a_max() == 4.0);
  CHECK(tab.value_at(tab.size() - 1) == kInf);
  CHECK(tab(3.999999) == kInf);  // interpolation against the sentinel
  CHECK(std::isfinite(tab(2.0)));
  CHECK(tab(3.9) > tab(2.0));  // pull toward the atom beats the DHR decay
}

TEST_CASE("type-B truncation: index grows toward the threshold", "[gittins]") {
  auto d = ServiceDistribution::truncated_b(
      ServiceDistribution::shifted_pareto(3.0), 4.0);
  auto tab = build_table(d);
  CHECK(tab.a_max() == 4.0);
  CHECK(tab(3.99) > tab(3.0));
  CHECK(std::isfinite(tab(3.0)));
  CHECK(std::isinf(tab.value_at(tab.size() - 1)));
}

TEST_CASE("index and efficiency are covariant under time rescaling",
          "[gittins]") {
  // exp: rate r at (a, delta) vs rate 2r at (a/2, delta/2)
  auto e1 = ServiceDistribution::exponential(1.0);
  auto e2 = ServiceDistribution::exponential(2.0);
  for (double a : {0.0, 0.8, 2.0})
    for (double delta : {0.1, 1.0, 5.0})
      CHECK(rel_err(efficiency(e2, a / 2, delta / 2),
                    2.0 * efficiency(e1, a, delta)) < 1e-12);
  // unif stretched by 2: the sup is attained at the edge-reaching quantum,
  // which both candidate grids contain exactly
  auto u1 = ServiceDistribution::uniform(0.0, 1.0);
  auto u2 = ServiceDistribution::uniform(0.0, 2.0);
  for (double a : {0.1, 0.4, 0.9})
    CHECK(rel_err(gittins_index(u2, 2.0 * a), 0.5 * gittins_index(u1, a)) <
          1e-12);
}

TEST_CASE("grid refinement barely moves the table", "[gittins]") {
  auto d = ServiceDistribution::shifted_pareto(3.0);
  auto coarse = build_table(d);
  GittinsConfig fine_cfg;
  fine_cfg.grid_step = coarse.step() / 2.0;
  fine_cfg.n_delta = 128;
  auto fine = build_table(d, fine_cfg);
  for (double a = 0.1; a < 10.0; a += 0.4)
    CHECK(rel_err(coarse(a), fine(a)) < 0.005);
}

TEST_CASE("table construction guards", "[gittins]") {
  auto u = ServiceDistribution::uniform(0.0, 1.0);
  GittinsConfig cfg;
  cfg.a_max = 2.0;  // beyond the support edge
  CHECK_THROWS_AS(build_table(u, cfg), std::invalid_argument);

  auto tab = build_table(u);
  CHECK(tab(-1.0) == tab.value_at(0));                    // clamped low
  CHECK(tab(99.0) == tab.value_at(tab.size() - 1));       // clamped high

  auto d = ServiceDistribution::exponential(1.0);
  CHECK_THROWS_AS(efficiency(d, 1.0, 0.0), std::domain_error);
  CHECK_THROWS_AS(efficiency(d, 1.0, -0.5), std::domain_error);
  CHECK_THROWS_AS(efficiency(u, 1.0, 0.1), std::domain_error);  // S(a) = 0
  CHECK(gittins_index(u, 1.0) == kInf);
}
