#include <doctest.h>

#include <cmath>

#include "fsuc/bench.hpp"
#include "support/fixtures.hpp"

using namespace fsuc;

namespace {

SweepCell cell(double phi, double delay, double cost) {
  SweepCell c;
  c.flex_share = phi;
  c.delay_s = delay;
  c.status = UcStatus::kOptimal;
  c.total_cost = cost;
  return c;
}

LinearSafetyRegion small_region() {
  LinearSafetyRegion r;
  r.features = {"r_gen_mw", "r_dc_mw", "h_sys"};
  r.halfspaces = {{{1, 1, 0}, -30}, {{0, 0, 1}, -12}};
  r.box_lo = {0, 0, 0};
  r.box_hi = {100, 100, 100};
  return r;
}

SweepSpec small_spec() {
  SweepSpec s;
  s.flex_shares = {0.0, 1.0};
  s.delays = {1.0, 5.0};
  s.regions[1.0] = small_region();
  s.regions[5.0] = small_region();
  s.node_limit = 100000;
  return s;
}

}  // namespace

TEST_CASE("marginal flexibility value arithmetic") {
  SweepResult r;
  r.cells = {cell(0.0, 2, 100e6), cell(0.1, 2, 90e6), cell(0.5, 2, 90e6), cell(0.75, 2, 80e6)};
  // $10M over 10 percentage points: $1M per %.
  CHECK(compute_mfv(r, 0.0, 0.1, 2) == doctest::Approx(1e6));
  CHECK(compute_mfv(r, 0.1, 0.5, 2) == 0.0);
  // Uneven bracket: normalised per 1% of capacity.
  CHECK(compute_mfv(r, 0.5, 0.75, 2) == doctest::Approx(10e6 / 25));
  CHECK_THROWS_AS(compute_mfv(r, 0.1, 0.1, 2), ValidationError);
  CHECK_THROWS_AS(compute_mfv(r, 0.5, 0.1, 2), ValidationError);
  CHECK_THROWS_AS(compute_mfv(r, 0.0, 0.1, 5), Error);
  r.cells[1].status = UcStatus::kInfeasible;
  CHECK_THROWS_AS(compute_mfv(r, 0.0, 0.1, 2), Error);
}

TEST_CASE("scaling the data-center fleet") {
  const SystemCase c = fixtures::benchmark();
  CHECK(scale_scenario(c, 1.0) == c);
  const SystemCase s = scale_scenario(c, 2.0);
  CHECK(s.dc_peak() == doctest::Approx(2000.0));
  CHECK(s.base_load_mw == c.base_load_mw);
  CHECK(s.name == c.name + "-dc2");
  CHECK(s.dP_L_max == c.dP_L_max);
  // Wind keeps its ratio to peak load; the fleet grows with it.
  CHECK(s.wind_capacity_mw / s.peak_demand() == doctest::Approx(c.wind_capacity_mw / c.peak_demand()).epsilon(1e-9));
  const double k = s.peak_demand() / c.peak_demand();
  CHECK(s.conventional_capacity() == doctest::Approx(k * c.conventional_capacity()));
  CHECK(s.fleet_scale == doctest::Approx(k));
  for (size_t i = 0; i < c.generators.size(); ++i) {
    const auto& a = c.generators[i];
    const auto& b = s.generators[i];
    CHECK(b.inertia_const == a.inertia_const);
    // Merged copies: the aggregate at k P costs k times one copy at P.
    const double p = 0.7 * a.p_max;
    const double one = a.cost_quad * p * p + a.cost_lin * p + a.cost_fix;
    const double agg = b.cost_quad * (k * p) * (k * p) + b.cost_lin * k * p + b.cost_fix;
    CHECK(agg == doctest::Approx(k * one));
  }
  CHECK_THROWS_AS(scale_scenario(c, 0.0), ValidationError);
}

TEST_CASE("wind share of a schedule") {
  SystemCase c = fixtures::small_case(3);
  c.wind_capacity_mw = 0;
  const UcModel m = build_uc(c, fixtures::flat_profiles(3, 0.5, 0.5, 0.5), nullptr);
  const auto r = solve_milp(m.milp);
  REQUIRE(r.status == MilpStatus::kOptimal);
  CHECK(wind_share(m, extract_solution(m, r)) == 0.0);

  const SystemCase w = fixtures::small_case(3);
  const Profiles p = fixtures::flat_profiles(3, 0.5, 0.5, 0.5);
  const UcModel mw = build_uc(w, p, nullptr);
  const auto s = extract_solution(mw, solve_milp(mw.milp));
  double wind = 0.0, load = 0.0;
  for (int t = 0; t < 3; ++t) {
    wind += wind_available_at(w, p, t) - s.curtailment[t];
    load += dc_load_at(w, p, t) + other_load_at(w, p, t);
  }
  CHECK(wind_share(mw, s) == doctest::Approx(wind / load));
  CHECK(wind_share(mw, s) > 0.0);
}

TEST_CASE("a single-cell sweep") {
  const SystemCase c = fixtures::small_case(4);
  SweepSpec s;
  s.flex_shares = {0.5};
  s.delays = {2.0};
  s.regions[2.0] = small_region();
  const SweepResult r = run_sweep(c, s);
  REQUIRE(r.cells.size() == 1);
  const SweepCell& x = r.cells[0];
  CHECK(x.feasible());
  CHECK(x.flex_share == 0.5);
  CHECK(x.delay_s == 2.0);
  CHECK(x.periods == 4);
  CHECK(x.periods_secure <= x.periods);
  CHECK(x.quadratic_cost <= x.total_cost + 1e-6);
  CHECK(r.scenario == "benchmark");
}

TEST_CASE("sweep ordering, monotonicity and csv round-trip") {
  const SystemCase c = fixtures::small_case(4);
  const SweepResult r = run_sweep(c, small_spec());
  REQUIRE(r.cells.size() == 4);
  CHECK(r.cells[0].flex_share == 0.0);
  CHECK(r.cells[0].delay_s == 1.0);
  CHECK(r.cells[1].delay_s == 5.0);
  CHECK(r.cells[3].flex_share == 1.0);
  for (double d : {1.0, 5.0}) CHECK(r.find(1.0, d)->total_cost <= r.find(0.0, d)->total_cost + 1e-6);
  for (double f : {0.0, 1.0}) CHECK(r.find(f, 1.0)->total_cost <= r.find(f, 5.0)->total_cost + 1e-6);
  CHECK(wind_share(r).size() == 4);

  const SweepResult back = parse_sweep_csv(sweep_csv(r));
  REQUIRE(back.cells.size() == r.cells.size());
  CHECK(back.scenario == r.scenario);
  for (size_t i = 0; i < r.cells.size(); ++i) {
    CHECK(back.cells[i].total_cost == r.cells[i].total_cost);
    CHECK(back.cells[i].wind_share == r.cells[i].wind_share);
    CHECK(back.cells[i].status == r.cells[i].status);
    CHECK(back.cells[i].periods_secure == r.cells[i].periods_secure);
  }
  CHECK(compute_mfv(back, 0.0, 1.0, 1.0) == doctest::Approx(compute_mfv(r, 0.0, 1.0, 1.0)));
  CHECK_THROWS_AS(parse_sweep_csv("nope\n"), ParseError);
}

TEST_CASE("sweep specification validation") {
  SweepSpec s;
  CHECK_NOTHROW(validate(s));
  s.flex_shares = {0.5, 0.1};
  CHECK_THROWS_AS(validate(s), ValidationError);
  s = {};
  s.flex_shares = {0.0, 1.5};
  CHECK_THROWS_AS(validate(s), ValidationError);
  s = {};
  s.delays = {0.0};
  CHECK_THROWS_AS(validate(s), ValidationError);
  s = {};
  s.dc_multiplier = -1;
  CHECK_THROWS_AS(validate(s), ValidationError);
  s = {};
  s.node_limit = 0;
  CHECK_THROWS_AS(validate(s), ValidationError);
  CHECK(parse_scenario("scaled-2030") == Scenario::kScaled2030);
  CHECK(std::string(to_string(Scenario::kBenchmark)) == "benchmark");
  CHECK_THROWS_AS(parse_scenario("2040"), ValidationError);
}

TEST_CASE("comparison table formatting") {
  MethodRow a;
  a.method = "pla";
  a.ok = false;
  a.message = "bad, really";
  const std::string csv = compare_csv({a});
  CHECK(csv.rfind("method,ok,constraints", 0) == 0);
  CHECK(csv.find("bad, really") == std::string::npos);
}

TEST_CASE("a schedule from a longer delay's region carries over") {
  const SystemCase c = fixtures::small_case(4);
  SweepSpec s;
  s.flex_shares = {0.5};
  s.delays = {1.0, 5.0};
  // Deliberately inverted: the short delay gets the tighter region.
  LinearSafetyRegion tight = small_region();
  tight.halfspaces[0].bias = -60;
  s.regions[1.0] = tight;
  s.regions[5.0] = small_region();
  s.nest_delays = false;
  const SweepResult apart = run_sweep(c, s);
  REQUIRE(apart.find(0.5, 1.0)->feasible());
  REQUIRE(apart.find(0.5, 1.0)->total_cost > apart.find(0.5, 5.0)->total_cost + 1e-6);

  s.nest_delays = true;
  const SweepResult nested = run_sweep(c, s);
  const SweepCell* fast = nested.find(0.5, 1.0);
  CHECK(fast->total_cost == nested.find(0.5, 5.0)->total_cost);
  CHECK(fast->message == "schedule from the 5 s region");
  CHECK(fast->periods_secure <= fast->periods);
}
