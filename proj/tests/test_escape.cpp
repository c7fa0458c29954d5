#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "quasipot/escape.hpp"
#include "quasipot/landscape.hpp"

using namespace quasipot;

TEST_CASE("domain spec defaults and validation") {
  const DomainSpec d = DomainSpec::ball({0.0, 0.0}, 2.0);
  CHECK(d.gamma_radius == Catch::Approx(0.2));
  CHECK(d.Gamma_radius == Catch::Approx(0.4));
  CHECK_NOTHROW(d.validate());
  DomainSpec bad = d;
  bad.gamma_radius = 0.5;
  CHECK_THROWS_AS(bad.validate(), ParameterError);
}

TEST_CASE("first_exit: deterministic GD never exits; exit point is interpolated") {
  const LossLandscape lc = make_quadratic_bowl();
  const DiffusionField df = make_diag_diffusion(1.0);
  const DomainSpec dom = DomainSpec::ball({0.0, 0.0}, 1.0);
  SimParams p;
  p.eps = 0.0;
  p.max_steps = 1000;
  const ExitRecord frozen = first_exit(lc, df, {0.5, 0.0}, p, dom);
  CHECK_FALSE(frozen.exited);
  CHECK(frozen.exit_step == 1000);

  p.eps = 0.8;
  p.max_steps = 200000;
  p.seed = 7;
  const ExitRecord hot = first_exit(lc, df, {0.0, 0.0}, p, dom);
  REQUIRE(hot.exited);
  CHECK_THAT(norm(hot.exit_point), Catch::Matchers::WithinAbs(1.0, 1e-9));
  CHECK(hot.exit_time <= static_cast<double>(hot.exit_step) * p.h);
  CHECK(hot.exit_time > static_cast<double>(hot.exit_step - 1) * p.h);

  CHECK_THROWS_AS(first_exit(lc, df, {2.0, 0.0}, p, dom), ParameterError);
}

TEST_CASE("exit ensemble is deterministic and thread-count independent") {
  const LossLandscape lc = make_quadratic_bowl();
  const DiffusionField df = make_diag_diffusion(1.5);
  const DomainSpec dom = DomainSpec::ball({0.0, 0.0}, 1.0);
  SimParams p;
  p.eps = 0.5;
  p.max_steps = 100000;
  const ExitSummary one = exit_ensemble(lc, df, {0.0, 0.0}, p, dom, 40, 1);
  const ExitSummary four = exit_ensemble(lc, df, {0.0, 0.0}, p, dom, 40, 4);
  REQUIRE(one.exited == four.exited);
  REQUIRE(one.mean_time == four.mean_time);
  REQUIRE(one.median_time == four.median_time);
  for (std::size_t i = 0; i < one.records.size(); ++i) {
    REQUIRE(one.records[i].exit_step == four.records[i].exit_step);
    REQUIRE(one.records[i].exit_point == four.records[i].exit_point);
  }
  CHECK(one.censor_fraction < 0.05);
  CHECK(one.exponent_available);

  CHECK_THROWS_AS(exit_ensemble(lc, df, {0.0, 0.0}, p, dom, 9), ParameterError);
}

TEST_CASE("anisotropic exits are faster and axis-concentrated") {
  const LossLandscape lc = make_quadratic_bowl();
  const DomainSpec dom = DomainSpec::ball({0.0, 0.0}, 1.0);
  SimParams p;
  p.eps = 0.5;
  p.max_steps = 200000;
  const ExitSummary iso = exit_ensemble(lc, make_diag_diffusion(1.0), {0.0, 0.0}, p, dom, 200, 4);
  const ExitSummary ani = exit_ensemble(lc, make_diag_diffusion(1.9), {0.0, 0.0}, p, dom, 200, 4);
  REQUIRE(iso.exited > 0);
  REQUIRE(ani.exited > 0);
  CHECK(ani.mean_time < iso.mean_time);
  int axis_concentrated = 0;
  for (const ExitRecord& r : ani.records)
    if (r.exited && std::abs(r.exit_point[1]) < 0.3) ++axis_concentrated;
  CHECK(static_cast<double>(axis_concentrated) / ani.exited > 0.8);
}

TEST_CASE("exit exponent recovers the boundary quasi-potential minimum") {
  const LossLandscape lc = make_quadratic_bowl();
  const DiffusionField df = make_diag_diffusion(1.0);
  const DomainSpec dom = DomainSpec::ball({0.0, 0.0}, 1.0);
  const ExponentResult r = exit_exponent(lc, df, {0.0, 0.0}, dom, {0.5, 0.6, 0.8}, 0.01, 1000000,
                                         60, 0xC0FFEE, 4);
  REQUIRE(r.points_used == 3);
  CHECK_THAT(r.slope, Catch::Matchers::WithinRel(2.0, 0.35));
  CHECK_THROWS_AS(exit_exponent(lc, df, {0.0, 0.0}, dom, {0.5, 0.6}, 0.01, 1000, 60),
                  ParameterError);
}

TEST_CASE("exit exponent censoring exclusion") {
  const LossLandscape lc = make_quadratic_bowl();
  const DiffusionField df = make_diag_diffusion(1.0);
  const DomainSpec dom = DomainSpec::ball({0.0, 0.0}, 1.0);
  // max_steps too small for the smallest eps: that point must be excluded
  const ExponentResult r =
      exit_exponent(lc, df, {0.0, 0.0}, dom, {0.05, 0.6, 0.8}, 0.01, 20000, 20, 0xC0FFEE, 4);
  CHECK_FALSE(r.per_eps[0].included);
  CHECK(r.per_eps[0].censor_fraction > 0.2);
  CHECK(r.points_used == 2);
}

TEST_CASE("bootstrap slope interval brackets the point estimate") {
  const LossLandscape lc = make_quadratic_bowl();
  const DiffusionField df = make_diag_diffusion(1.0);
  const DomainSpec dom = DomainSpec::ball({0.0, 0.0}, 1.0);
  const ExponentResult r =
      exit_exponent(lc, df, {0.0, 0.0}, dom, {0.5, 0.6, 0.8}, 0.01, 1000000, 40, 0xC0FFEE, 4);
  const auto [lo, hi] = bootstrap_slope_interval(r, 200, 0.8);
  CHECK(lo <= hi);
  CHECK(lo <= r.slope);
  CHECK(hi >= r.slope);
}

TEST_CASE("cycle chain: frozen dynamics never exit; noise exits with sane probability") {
  const LossLandscape lc = make_quadratic_bowl();
  const DiffusionField df = make_diag_diffusion(1.0);
  const DomainSpec dom = DomainSpec::ball({0.0, 0.0}, 1.0);

  SimParams frozen;
  frozen.eps = 0.0;
  frozen.max_steps = 5000;
  const CycleChainRecord cold = cycle_chain(lc, df, {0.15, 0.0}, frozen, dom, 3);
  CHECK(cold.exits == 0);
  CHECK(cold.p_hat == 0.0);
  // with eps = 0 the state falls to gamma and stays: no further cycles start
  CHECK(cold.partial);

  SimParams p;
  p.eps = 0.5;
  p.max_steps = 4000000;
  const CycleChainRecord hot = cycle_chain(lc, df, {0.0, 0.0}, p, dom, 2000);
  CHECK_FALSE(hot.partial);
  CHECK(hot.cycles == 2000);
  REQUIRE(hot.exits > 0);
  CHECK(hot.p_hat > 0.0);
  CHECK(hot.p_hat < 1.0);
  // reproducibility
  const CycleChainRecord again = cycle_chain(lc, df, {0.0, 0.0}, p, dom, 2000);
  CHECK(again.exits == hot.exits);
  CHECK(again.total_steps == hot.total_steps);
}

TEST_CASE("cycle chain escape probability is monotone in eps") {
  const LossLandscape lc = make_quadratic_bowl();
  const DiffusionField df = make_diag_diffusion(1.0);
  const DomainSpec dom = DomainSpec::ball({0.0, 0.0}, 1.0);
  double prev = -1.0;
  for (const double eps : {0.3, 0.5, 0.8}) {
    SimParams p;
    p.eps = eps;
    p.max_steps = 8000000;
    const CycleChainRecord rec = cycle_chain(lc, df, {0.0, 0.0}, p, dom, 1500);
    REQUIRE_FALSE(rec.partial);
    CHECK(rec.p_hat > prev);
    prev = rec.p_hat;
  }
}
