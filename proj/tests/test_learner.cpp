#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <random>

#include "fsuc/learner.hpp"
#include "support/fixtures.hpp"

using namespace fsuc;

namespace {

std::vector<double> row(const Eigen::MatrixXd& X, Eigen::Index i) {
  std::vector<double> v(X.cols());
  for (Eigen::Index j = 0; j < X.cols(); ++j) v[j] = X(i, j);
  return v;
}

Eigen::MatrixXd uniform_points(int n, int d, std::uint64_t seed) {
  std::mt19937_64 g(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Eigen::MatrixXd X(n, d);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < d; ++j) X(i, j) = u(g);
  }
  return X;
}

LinearSafetyRegion cube_region(std::vector<Halfspace> hs) {
  LinearSafetyRegion r;
  r.features = {"a", "b", "c"};
  r.halfspaces = std::move(hs);
  r.box_lo = {0, 0, 0};
  r.box_hi = {1, 1, 1};
  return r;
}

// Benchmark data for one delay on a modest grid, with the matching box.
struct Trained {
  SystemCase c;
  SampleGrid g;
  std::vector<LabeledPoint> pts;
};

Trained benchmark_data(double delay, int r_count, int h_count, std::uint64_t seed) {
  Trained t;
  t.c = fixtures::benchmark();
  t.g = default_grid(t.c, {delay}, seed, r_count, h_count);
  t.pts = build_dataset(t.c, t.g);
  return t;
}

NadirFn nadir_of(const SystemCase& c, double delay) {
  return [c, delay](std::span<const double> x) {
    return label_point(scenario_for(c, {x[0], x[1], x[2]}, delay), c.nadir_limit_hz).nadir_hz;
  };
}

}  // namespace

// ---------------------------------------------------------------- logistic

TEST_CASE("logistic regression on mirrored data is symmetric") {
  Eigen::MatrixXd X(8, 1);
  X << -4, -3, -2, -1, 1, 2, 3, 4;
  std::vector<int> y = {0, 0, 1, 0, 1, 0, 1, 1};
  const auto m = fit_logistic(X, y);
  CHECK(m.converged);
  CHECK(std::abs(m.c) < 1e-8);
  CHECK(m.a[0] > 0.0);
  for (double v = 0.5; v < 5; v += 0.5) {
    const double p = 1 / (1 + std::exp(-m.score(std::vector<double>{v})));
    const double q = 1 / (1 + std::exp(-m.score(std::vector<double>{-v})));
    CHECK(p + q == doctest::Approx(1.0));
  }
}

TEST_CASE("logistic regression separates linearly separable data") {
  const Eigen::MatrixXd X = uniform_points(200, 2, 7);
  std::vector<int> y;
  for (int i = 0; i < X.rows(); ++i) y.push_back(X(i, 0) + 2 * X(i, 1) > 1.2 ? 1 : 0);
  const auto m = fit_logistic(X, y);
  int wrong = 0;
  for (int i = 0; i < X.rows(); ++i) wrong += (m.score(row(X, i)) >= 0) != (y[i] == 1);
  CHECK(wrong <= 2);
  // Direction close to the generating normal (1, 2).
  CHECK(m.a[1] / m.a[0] == doctest::Approx(2.0).epsilon(0.15));
}

TEST_CASE("a single hyperplane cannot learn XOR") {
  const Eigen::MatrixXd X = uniform_points(400, 2, 3);
  std::vector<int> y;
  for (int i = 0; i < X.rows(); ++i) y.push_back((X(i, 0) > 0.5) != (X(i, 1) > 0.5) ? 1 : 0);
  const auto m = fit_logistic(X, y);
  int right = 0;
  for (int i = 0; i < X.rows(); ++i) right += (m.score(row(X, i)) >= 0) == (y[i] == 1);
  CHECK(static_cast<double>(right) / X.rows() <= 0.75);
}

TEST_CASE("logistic input errors") {
  Eigen::MatrixXd X(3, 1);
  X << 1, 2, 3;
  CHECK_THROWS_WITH(fit_logistic(X, {1, 1, 1}), "degenerate node");
  CHECK_THROWS_AS(fit_logistic(X, {1, 0}), DomainError);
}

// -------------------------------------------------------------- slope tree

TEST_CASE("slope tree: one split for a linear boundary") {
  const Eigen::MatrixXd X = uniform_points(300, 2, 11);
  std::vector<int> y;
  for (int i = 0; i < X.rows(); ++i) y.push_back(X(i, 0) - X(i, 1) > 0.1 ? 1 : 0);
  const auto t = build_slope_tree(X, y, 0, 1, 5);
  REQUIRE(t);
  CHECK(count_internal(*t) == 1);
  CHECK(tree_depth(*t) == 1);
  CHECK(accuracy(*t, X, y) >= 0.99);
}

TEST_CASE("slope tree: depth lets it carve XOR") {
  const Eigen::MatrixXd X = uniform_points(600, 2, 5);
  std::vector<int> y;
  for (int i = 0; i < X.rows(); ++i) y.push_back((X(i, 0) > 0.5) != (X(i, 1) > 0.5) ? 1 : 0);
  const auto shallow = build_slope_tree(X, y, 0, 1, 5);
  const auto deep = build_slope_tree(X, y, 0, 4, 5);
  CHECK(accuracy(*shallow, X, y) <= 0.75);
  CHECK(accuracy(*deep, X, y) >= accuracy(*shallow, X, y) + 0.1);
  CHECK(tree_depth(*deep) <= 4);
  CHECK(count_internal(*deep) <= 15);
}

TEST_CASE("slope tree leaves and stopping rules") {
  Eigen::MatrixXd X(4, 1);
  X << 0, 1, 2, 3;
  CHECK(build_slope_tree(Eigen::MatrixXd(0, 1), {}, 0, 3, 1) == nullptr);
  // Pure node.
  auto pure = build_slope_tree(X, {1, 1, 1, 1}, 0, 3, 1);
  CHECK(pure->is_leaf());
  CHECK(*pure->leaf_label == Safety::kSafe);
  // Too few samples: a 2-2 tie becomes an unsafe leaf.
  auto tie = build_slope_tree(X, {0, 1, 0, 1}, 0, 3, 10);
  CHECK(tie->is_leaf());
  CHECK(*tie->leaf_label == Safety::kUnsafe);
  CHECK(tie->n_samples == 4);
  CHECK(tie->n_safe == 2);
  CHECK_THROWS_AS(build_slope_tree(X, {0, 1, 0, 1}, 0, 0, 1), ValidationError);
  CHECK_THROWS_AS(build_slope_tree(X, {0, 1, 0, 1}, 0, 2, 0), ValidationError);
}

TEST_CASE("depth for a split-node budget") {
  CHECK(depth_for_budget(1) == 1);
  CHECK(depth_for_budget(2) == 1);
  CHECK(depth_for_budget(3) == 2);
  CHECK(depth_for_budget(63) == 6);
  CHECK(depth_for_budget(64) == 6);
  CHECK(depth_for_budget(127) == 7);
  CHECK_THROWS_AS(depth_for_budget(0), ValidationError);
}

// ------------------------------------------------------------------ region

TEST_CASE("conjunctive and disjunctive membership") {
  // x + y <= 1 and z >= 0.2.
  LinearSafetyRegion r = cube_region({{{-1, -1, 0}, 1}, {{0, 0, 1}, -0.2}});
  CHECK(r.dim() == 3);
  CHECK(r.contains(std::vector<double>{0.2, 0.3, 0.5}));
  CHECK(r.contains(std::vector<double>{0.5, 0.5, 0.2}));  // closed
  CHECK_FALSE(r.contains(std::vector<double>{0.6, 0.5, 0.5}));
  CHECK_FALSE(r.contains(std::vector<double>{0.1, 0.1, 0.1}));
  r.mode = RegionMode::kDisjunctive;
  r.leaves = {{0}, {1}};
  CHECK(r.contains(std::vector<double>{0.6, 0.5, 0.5}));
  CHECK(r.contains(std::vector<double>{0.1, 0.1, 0.1}));
  CHECK_FALSE(r.contains(std::vector<double>{0.9, 0.9, 0.1}));
}

TEST_CASE("lower boundary and vertices of a hand region") {
  // z >= 0.5 - 0.5 x, and y <= 0.8.
  const LinearSafetyRegion r = cube_region({{{0.5, 0, 1}, -0.5}, {{0, -1, 0}, 0.8}});
  const std::vector<double> x = {0.4, 0.1, 0.0};
  auto z = lower_boundary(r, x, 2);
  REQUIRE(z);
  CHECK(*z == doctest::Approx(0.3));
  CHECK(*lower_boundary(r, x, 0) == doctest::Approx(1.0));  // z = 0 needs x = 1
  CHECK(*lower_boundary(r, std::vector<double>{0.4, 0.1, 0.7}, 0) == 0.0);  // box floor
  CHECK_FALSE(lower_boundary(r, std::vector<double>{0.4, 0.9, 0.5}, 2).has_value());

  const auto v = region_vertices(r, {0, 1});
  // Prism over the (x, z) quadrilateral (0,.5) (0,1) (1,1) (1,0), y in [0, 0.8].
  CHECK(v.size() == 8);
  for (const auto& p : v) {
    CHECK(r.contains(p));
    CHECK(p[1] <= 0.8 + 1e-12);
  }
  LinearSafetyRegion nobox = r;
  nobox.box_lo.clear();
  CHECK_THROWS_AS(region_vertices(nobox, {0}), DomainError);
}

TEST_CASE("tightening removes every unsafe training point") {
  const Eigen::MatrixXd X = uniform_points(400, 3, 21);
  std::vector<int> y;
  for (int i = 0; i < X.rows(); ++i) y.push_back(X(i, 0) + X(i, 1) * X(i, 1) + X(i, 2) > 1.1 ? 1 : 0);
  const auto tree = build_slope_tree(X, y, 0, 3, 10);
  for (RegionMode mode : {RegionMode::kConjunctive, RegionMode::kDisjunctive}) {
    LinearSafetyRegion r = collect_conditions(*tree, mode, &X, &y);
    r.box_lo = {0, 0, 0};
    r.box_hi = {1, 1, 1};
    tighten_on_data(r, X, y);
    int unsafe_inside = 0, safe_inside = 0;
    for (int i = 0; i < X.rows(); ++i) {
      const bool in = r.contains(row(X, i));
      unsafe_inside += in && y[i] == 0;
      safe_inside += in && y[i] == 1;
    }
    CHECK(unsafe_inside == 0);
    CHECK(safe_inside > 0);
    if (mode == RegionMode::kConjunctive) {
      relax_on_data(r, X, y);
      for (int i = 0; i < X.rows(); ++i) CHECK_FALSE((r.contains(row(X, i)) && y[i] == 0));
    } else {
      CHECK_THROWS_AS(relax_on_data(r, X, y), DomainError);
    }
  }
}

TEST_CASE("collect_conditions needs a safe leaf") {
  Eigen::MatrixXd X(4, 1);
  X << 0, 1, 2, 3;
  const std::vector<int> y = {0, 0, 0, 0};
  auto t = build_slope_tree(X, y, 0, 2, 1);
  CHECK_THROWS_WITH(collect_conditions(*t, RegionMode::kConjunctive), "empty safe region");
}

TEST_CASE("trained region is conservative against the simulator") {
  const Trained t = benchmark_data(2.0, 14, 8, 2);
  DtclOptions o;
  o.d_max = 4;
  const auto nadir = nadir_of(t.c, 2.0);
  const std::vector<double> lo = {t.g.r_cg_range.min, t.g.r_dc_range.min, t.g.h_range.min};
  const std::vector<double> hi = {t.g.r_cg_range.max, t.g.r_dc_range.max, t.g.h_range.max};
  const auto res = train_dtcl(t.pts, lo, hi, nadir, o);
  CHECK(res.certify.certified);
  CHECK(res.region.metadata.at("method") == "dtcl");
  for (const auto& p : t.pts) CHECK_FALSE((res.region.contains(p.x) && p.y == 0));

  // Fresh random probes inside the region.
  std::mt19937_64 g(99);
  int inside = 0;
  for (int k = 0; k < 3000 && inside < 300; ++k) {
    std::vector<double> x(3);
    for (int j = 0; j < 3; ++j) x[j] = lo[j] + (hi[j] - lo[j]) * std::uniform_real_distribution<double>(0, 1)(g);
    if (!res.region.contains(x)) continue;
    ++inside;
    CHECK(nadir(x) >= -t.c.nadir_margin_hz() - 1e-9);
  }
  CHECK(inside > 50);
}

TEST_CASE("union of regions") {
  LinearSafetyRegion a = cube_region({{{1, 0, 0}, -0.7}});
  a.metadata["k"] = "a";
  LinearSafetyRegion b = cube_region({{{0, 1, 0}, -0.7}, {{0, 0, 1}, -0.1}});
  b.mode = RegionMode::kDisjunctive;
  b.leaves = {{0}, {1}};
  const auto u = union_regions({a, b});
  CHECK(u.mode == RegionMode::kDisjunctive);
  CHECK(u.halfspaces.size() == 3);
  CHECK(u.leaves == std::vector<std::vector<int>>{{0}, {1}, {2}});
  CHECK(u.metadata.at("part0.k") == "a");
  std::mt19937_64 g(1);
  for (int k = 0; k < 500; ++k) {
    std::vector<double> x(3);
    for (auto& v : x) v = std::uniform_real_distribution<double>(0, 1)(g);
    CHECK(u.contains(x) == (a.contains(x) || b.contains(x)));
  }
  LinearSafetyRegion other = b;
  other.box_hi = {2, 2, 2};
  CHECK_THROWS_AS(union_regions({a, other}), ValidationError);
  other = b;
  other.features = {"x", "y", "z"};
  CHECK_THROWS_AS(union_regions({a, other}), ValidationError);
  CHECK_THROWS_AS(union_regions({}), ValidationError);
}

TEST_CASE("region file round-trips and reports bad fields") {
  LinearSafetyRegion r = cube_region({{{0.1 + 0.2, -1.0 / 3, 2}, -0.7}, {{1, 1, 1}, 0}});
  r.mode = RegionMode::kDisjunctive;
  r.leaves = {{0, 1}, {1}};
  r.metadata["delay_s"] = "2";
  CHECK(parse_region(serialize_region(r)) == r);
  const auto path = (std::filesystem::temp_directory_path() / "fsuc_region_rt.json").string();
  save_region(r, path);
  CHECK(load_region(path) == r);
  std::remove(path.c_str());

  CHECK_THROWS_AS(parse_region("{ nope"), ParseError);
  try {
    parse_region(R"({"mode":"conjunctive","features":["a","b"],"halfspaces":[[1,2,3],[1,2]]})");
    FAIL("expected ValidationError");
  } catch (const ValidationError& e) {
    CHECK(e.field() == "halfspaces[1]");
  }
  CHECK_THROWS_AS(parse_region(R"({"mode":"sideways","features":[],"halfspaces":[]})"), ValidationError);
  CHECK_THROWS_AS(parse_region(R"({"mode":"disjunctive","features":["a"],"halfspaces":[[1,0]]})"),
                  ValidationError);
  CHECK_THROWS_AS(
      parse_region(R"({"mode":"disjunctive","features":["a"],"halfspaces":[[1,0]],"leaves":[[3]]})"),
      ValidationError);
}

// --------------------------------------------------------------- baselines

TEST_CASE("piecewise fits recover an affine target exactly") {
  const Eigen::MatrixXd X = uniform_points(300, 3, 4);
  Eigen::VectorXd y(X.rows());
  for (int i = 0; i < X.rows(); ++i) y[i] = 0.3 * X(i, 0) - 2 * X(i, 1) + 5 * X(i, 2) - 1;
  for (int n : {1, 4, 12}) {
    const auto pla = fit_pla(X, y, n);
    CHECK(pla.planes.size() == static_cast<size_t>(n));
    const auto krl = fit_krl(X, y, n, 3);
    for (int i = 0; i < X.rows(); ++i) {
      CHECK(pla.predict(row(X, i)) == doctest::Approx(y[i]).epsilon(1e-9));
      CHECK(krl.predict(row(X, i)) == doctest::Approx(y[i]).epsilon(1e-9));
    }
  }
}

TEST_CASE("more pieces reduce the error on a curved target") {
  const Eigen::MatrixXd X = uniform_points(2000, 1, 8);
  Eigen::VectorXd y(X.rows());
  for (int i = 0; i < X.rows(); ++i) y[i] = std::sin(6 * X(i, 0));
  double prev = INFINITY;
  for (int n : {1, 2, 4, 8, 16}) {
    const auto m = fit_pla(X, y, n);
    double worst = 0.0;
    for (int k = 0; k <= 1000; ++k) {
      const double x = k / 1000.0;
      worst = std::max(worst, std::abs(m.predict(std::vector<double>{x}) - std::sin(6 * x)));
    }
    CHECK(worst < prev);
    prev = worst;
  }
  CHECK(prev < 0.05);
}

TEST_CASE("segment split factors") {
  for (int n : {1, 7, 12, 36, 63, 64}) {
    const auto s = split_segments(n, 3);
    CHECK(s.size() == 3);
    CHECK(s[0] * s[1] * s[2] == n);
  }
  CHECK(split_segments(12, 3) == std::vector<int>{3, 2, 2});
  CHECK_THROWS_AS(split_segments(0, 3), ValidationError);
}

TEST_CASE("k-means with one cluster is the global plane") {
  const Eigen::MatrixXd X = uniform_points(100, 3, 12);
  Eigen::VectorXd y(X.rows());
  for (int i = 0; i < X.rows(); ++i) y[i] = X(i, 0) * X(i, 1) - X(i, 2) * X(i, 2);
  const auto krl = fit_krl(X, y, 1, 5);
  const auto pla = fit_pla(X, y, 1);
  const Plane p = fit_plane(X, y);
  CHECK(krl.region(0.8).halfspaces == pla.region(0.8).halfspaces);
  for (int i = 0; i < X.rows(); ++i) {
    CHECK(krl.predict(row(X, i)) == doctest::Approx(p.eval(row(X, i))));
    CHECK(pla.predict(row(X, i)) == doctest::Approx(p.eval(row(X, i))));
  }
}

TEST_CASE("k-means on two blobs matches exhaustive 2-means") {
  for (std::uint64_t seed : {1, 2, 3, 4, 5}) {
    std::mt19937_64 g(100 + seed);
    std::normal_distribution<double> n(0.0, 1.0);
    const int per = 8;
    Eigen::MatrixXd X(2 * per, 2);
    for (int i = 0; i < 2 * per; ++i) {
      const double cx = i < per ? 0.0 : 20.0, cy = i < per ? 0.0 : 10.0;
      X(i, 0) = cx + n(g);
      X(i, 1) = cy + n(g);
    }
    const auto m = fit_krl(X, Eigen::VectorXd::Zero(X.rows()), 2, seed);
    // Exhaustive search over all bipartitions for the least within-cluster
    // sum of squares, in the same standardized space.
    Eigen::MatrixXd Z(X.rows(), 2);
    for (int j = 0; j < 2; ++j) Z.col(j) = (X.col(j).array() - m.mean[j]) / m.scale[j];
    double best = INFINITY;
    std::array<Eigen::Vector2d, 2> best_mu;
    for (int mask = 1; mask < (1 << (Z.rows() - 1)); ++mask) {
      std::array<Eigen::Vector2d, 2> mu = {Eigen::Vector2d::Zero(), Eigen::Vector2d::Zero()};
      std::array<int, 2> cnt = {0, 0};
      for (int i = 0; i < Z.rows(); ++i) {
        const int c = i < Z.rows() - 1 ? (mask >> i) & 1 : 0;
        mu[c] += Z.row(i).transpose();
        ++cnt[c];
      }
      for (int c = 0; c < 2; ++c) mu[c] /= cnt[c];
      double s = 0.0;
      for (int i = 0; i < Z.rows(); ++i) {
        const int c = i < Z.rows() - 1 ? (mask >> i) & 1 : 0;
        s += (Z.row(i).transpose() - mu[c]).squaredNorm();
      }
      if (s < best) best = s, best_mu = mu;
    }
    const double sep = (best_mu[0] - best_mu[1]).norm();
    for (const auto& c : m.centroids) {
      const Eigen::Vector2d v(c[0], c[1]);
      const double d = std::min((v - best_mu[0]).norm(), (v - best_mu[1]).norm());
      CHECK(d <= 0.05 * sep);
    }
  }
}

TEST_CASE("k-means is deterministic for a seed") {
  const Eigen::MatrixXd X = uniform_points(200, 3, 2);
  const Eigen::VectorXd y = X.col(0) - X.col(2);
  const auto a = fit_krl(X, y, 5, 17), b = fit_krl(X, y, 5, 17);
  CHECK(a.centroids == b.centroids);
  CHECK_THROWS_AS(fit_krl(X.topRows(3), y.head(3), 4, 1), ValidationError);
  CHECK_THROWS_AS(fit_krl(X, y, 0, 1), ValidationError);
}

TEST_CASE("piecewise model region uses the margin") {
  Eigen::MatrixXd X = uniform_points(50, 3, 6);
  Eigen::VectorXd y(X.rows());
  for (int i = 0; i < X.rows(); ++i) y[i] = X(i, 0) - 1.5;
  const auto r = fit_pla(X, y, 1).region(0.8);
  CHECK(r.halfspaces.size() == 1);
  CHECK(r.contains(std::vector<double>{0.8, 0.5, 0.5}));
  CHECK_FALSE(r.contains(std::vector<double>{0.6, 0.5, 0.5}));
  CHECK(r.metadata.at("method") == "pla");
}

// -------------------------------------------------------------- evaluation

TEST_CASE("region evaluation counts") {
  // Nadir = -1 + a: safe (margin 0.8) iff a >= 0.2.
  NadirFn nadir = [](std::span<const double> x) { return -1.0 + x[0]; };
  std::vector<LabeledPoint> pts;
  for (int i = 0; i <= 10; ++i) {
    const double a = i / 10.0;
    pts.push_back({{a, 0.5, 0.5}, a >= 0.2 - 1e-12 ? 1 : 0, 2.0});
  }
  // a >= 0.5: 6 accepted, all safe, 9 safe in total.
  LinearSafetyRegion r = cube_region({{{1, 0, 0}, -0.5}});
  auto m = evaluate_region(r, pts, nadir, 0.8);
  CHECK(m.accepted == 6);
  CHECK(m.accepted_safe == 6);
  CHECK(m.pass_rate == 1.0);
  CHECK(m.coverage == doctest::Approx(6.0 / 9.0));
  // Every point projects onto a = 0.5 where nadir = -0.5: |(-0.5 + 0.8)/0.8|.
  CHECK(m.boundary_points == pts.size());
  CHECK(m.avg_nl_error == doctest::Approx(0.375));
  // a >= 0: 2 of 11 accepted are unsafe.
  r.halfspaces[0].bias = 0.0;
  m = evaluate_region(r, pts, nadir, 0.8);
  CHECK(m.pass_rate == doctest::Approx(9.0 / 11.0));
  // Empty region: degenerate, pass rate defined as 1.
  r.halfspaces[0].bias = -2.0;
  m = evaluate_region(r, pts, nadir, 0.8);
  CHECK(m.degenerate);
  CHECK(m.accepted == 0);
  CHECK(m.pass_rate == 1.0);
  CHECK(m.coverage == 0.0);
  CHECK_THROWS_AS(evaluate_region(r, {}, nadir, 0.8), ValidationError);
  CHECK_THROWS_AS(evaluate_region(r, pts, nadir, 0.0), ValidationError);
}
