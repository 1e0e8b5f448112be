#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <set>

#include "fsuc/datagen.hpp"
#include "support/fixtures.hpp"

using namespace fsuc;

namespace {

SampleGrid tiny_grid(const SystemCase& c, std::vector<double> delays) {
  SampleGrid g = default_grid(c, std::move(delays), 5, 2, 2);
  return g;
}

bool safe_at(const SystemCase& c, Features x, double delay) {
  return label_point(scenario_for(c, to_operating_point(x), delay), c.nadir_limit_hz).label ==
         Safety::kSafe;
}

}  // namespace

TEST_CASE("grid cardinality and ordering") {
  const SystemCase c = fixtures::benchmark();
  const auto pts = build_dataset(c, tiny_grid(c, {2.0}));
  CHECK(pts.size() == 8);
  const auto two = build_dataset(c, tiny_grid(c, {1.0, 5.0}));
  REQUIRE(two.size() == 16);
  // Same jittered operating points for every delay.
  for (size_t i = 0; i < 8; ++i) {
    CHECK(two[i].x == two[i + 8].x);
    CHECK(two[i].delay_s == 1.0);
    CHECK(two[i + 8].delay_s == 5.0);
  }
  CHECK(select_delay(two, 5.0).size() == 8);
  CHECK(select_delay(two, 3.0).empty());
}

TEST_CASE("points stay inside their cells") {
  const SystemCase c = fixtures::benchmark();
  const SampleGrid g = default_grid(c, {2.0}, 9, 4, 3);
  const auto pts = build_dataset(c, g);
  CHECK(pts.size() == 4 * 4 * 3);
  std::set<int> cells;
  for (const auto& p : pts) {
    CHECK(p.x[0] >= g.r_cg_range.min);
    CHECK(p.x[0] <= g.r_cg_range.max);
    CHECK(p.x[1] >= g.r_dc_range.min);
    CHECK(p.x[1] <= g.r_dc_range.max);
    CHECK(p.x[2] >= g.h_range.min);
    CHECK(p.x[2] <= g.h_range.max);
    const int ig = static_cast<int>((p.x[0] - g.r_cg_range.min) / (g.r_cg_range.max - g.r_cg_range.min) * 4);
    const int id = static_cast<int>((p.x[1] - g.r_dc_range.min) / (g.r_dc_range.max - g.r_dc_range.min) * 4);
    const int ih = static_cast<int>((p.x[2] - g.h_range.min) / (g.h_range.max - g.h_range.min) * 3);
    cells.insert((ih * 4 + ig) * 4 + id);
  }
  CHECK(cells.size() == pts.size());
}

TEST_CASE("labels agree with the simulator and are deterministic") {
  const SystemCase c = fixtures::benchmark();
  const SampleGrid g = default_grid(c, {2.0, 10.0}, 3, 5, 4);
  const auto a = build_dataset(c, g), b = build_dataset(c, g);
  CHECK(a == b);
  SampleGrid g2 = g;
  g2.seed = 4;
  CHECK(!(a == build_dataset(c, g2)));
  for (const auto& p : a) CHECK(p.y == (safe_at(c, p.x, p.delay_s) ? 1 : 0));
  const auto bal = class_balance(a);
  CHECK(bal.safe + bal.unsafe == a.size());
  CHECK_FALSE(bal.single_class());
}

TEST_CASE("more data-center response never turns safe into unsafe") {
  const SystemCase c = fixtures::benchmark();
  const SampleGrid g = default_grid(c, {2.0}, 1, 8, 5);
  for (const auto& p : build_dataset(c, g)) {
    if (p.y == 0) continue;
    for (double extra : {10.0, 100.0, 400.0}) {
      Features x = p.x;
      x[1] += extra;
      CHECK(safe_at(c, x, p.delay_s));
    }
  }
}

TEST_CASE("a grid above the safe inertia threshold is single-class") {
  const SystemCase c = fixtures::benchmark();
  // Damping alone settles far below the limit, so generator FFR must cover
  // the disturbance. Bisection for the inertia that is then just safe.
  const double r = 1.2 * c.dP_L_max;
  double lo = 1.0, hi = 1e5;
  REQUIRE(safe_at(c, {r, 0, hi}, 2.0));
  REQUIRE_FALSE(safe_at(c, {r, 0, lo}, 2.0));
  for (int i = 0; i < 100; ++i) {
    const double mid = 0.5 * (lo + hi);
    (safe_at(c, {r, 0, mid}, 2.0) ? hi : lo) = mid;
  }
  SampleGrid g;
  g.h_range = {hi * 1.01, hi * 2, 3};
  g.r_cg_range = {r, r + 100, 2};
  g.r_dc_range = {0, 100, 2};
  g.delays = {2.0};
  const auto pts = build_dataset(c, g);
  const auto bal = class_balance(pts);
  CHECK(bal.single_class());
  CHECK(bal.unsafe == 0);
}

TEST_CASE("grid validation") {
  const SystemCase c = fixtures::benchmark();
  SampleGrid g = default_grid(c);
  CHECK_NOTHROW(validate(g));
  g.h_range.count = 1;
  CHECK_THROWS_AS(validate(g), ValidationError);
  g = default_grid(c);
  g.r_dc_range.max = g.r_dc_range.min;
  CHECK_THROWS_AS(validate(g), ValidationError);
  g = default_grid(c, {});
  CHECK_THROWS_AS(build_dataset(c, g), ValidationError);
  g = default_grid(c, {2.0, -1.0});
  CHECK_THROWS_AS(validate(g), ValidationError);
}

TEST_CASE("dataset csv round-trips") {
  const SystemCase c = fixtures::benchmark();
  const auto pts = build_dataset(c, default_grid(c, {1.0, 2.5}, 11, 3, 3));
  CHECK(parse_dataset(serialize_dataset(pts)) == pts);
  const auto path = (std::filesystem::temp_directory_path() / "fsuc_dataset_rt.csv").string();
  save_dataset(pts, path);
  CHECK(load_dataset(path) == pts);
  std::remove(path.c_str());
  CHECK(parse_dataset("r_gen_mw,r_dc_mw,h_sys,delay_s,label\n").empty());
}

TEST_CASE("dataset parse errors") {
  const std::string head = "r_gen_mw,r_dc_mw,h_sys,delay_s,label\n";
  CHECK_THROWS_AS(parse_dataset(""), ParseError);
  CHECK_THROWS_AS(parse_dataset("a,b,c\n1,2,3\n"), ParseError);
  try {
    parse_dataset(head + "1,2,3,2,1\n1,2,3,2,2\n");
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(e.where() == "row 2");
  }
  CHECK_THROWS_AS(parse_dataset(head + "1,2,3,2\n"), ParseError);
  CHECK_THROWS_AS(parse_dataset(head + "1,x,3,2,1\n"), ParseError);
  CHECK_THROWS_AS(parse_dataset(head + "1,nan,3,2,1\n"), ParseError);
}

TEST_CASE("nadir samples match labels") {
  const SystemCase c = fixtures::benchmark();
  const auto pts = build_dataset(c, default_grid(c, {2.0}, 2, 4, 3));
  const auto ns = nadir_samples(c, pts);
  REQUIRE(ns.size() == pts.size());
  for (size_t i = 0; i < pts.size(); ++i) {
    CHECK(ns[i].x == pts[i].x);
    CHECK(ns[i].nadir_hz <= 0.0);
    CHECK((c.f0 + ns[i].nadir_hz >= c.nadir_limit_hz) == (pts[i].y == 1));
  }
}
