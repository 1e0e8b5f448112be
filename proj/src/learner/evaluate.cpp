#include <algorithm>
#include <cmath>

#include "fsuc/error.hpp"
#include "fsuc/learner.hpp"

namespace fsuc {

Eigen::MatrixXd feature_matrix(const std::vector<LabeledPoint>& pts) {
  Eigen::MatrixXd X(pts.size(), 3);
  for (size_t i = 0; i < pts.size(); ++i) {
    for (int j = 0; j < 3; ++j) X(i, j) = pts[i].x[j];
  }
  return X;
}

std::vector<int> labels(const std::vector<LabeledPoint>& pts) {
  std::vector<int> y;
  y.reserve(pts.size());
  for (const auto& p : pts) y.push_back(p.y);
  return y;
}

RegionMetrics evaluate_region(const LinearSafetyRegion& region, const std::vector<LabeledPoint>& pts,
                              const NadirFn& nadir, double margin_hz) {
  if (pts.empty()) throw ValidationError("dataset", "must be non-empty");
  if (!(margin_hz > 0.0)) throw ValidationError("margin_hz", "must be > 0");
  RegionMetrics m;
  for (const auto& p : pts) {
    m.safe_total += p.y == 1;
    if (!region.contains(p.x)) continue;
    ++m.accepted;
    m.accepted_safe += p.y == 1;
  }
  if (m.accepted == 0) {
    m.degenerate = true;
    m.pass_rate = 1.0;
    m.note = "degenerate: zero coverage";
  } else {
    m.pass_rate = static_cast<double>(m.accepted_safe) / m.accepted;
  }
  m.coverage = m.safe_total ? static_cast<double>(m.accepted_safe) / m.safe_total : 0.0;

  // Boundary points: each data point projected (in box-normalized
  // coordinates) onto its nearest facet, kept when the projection lies on the
  // region's surface inside the box.
  std::vector<double> lo(3, std::numeric_limits<double>::infinity());
  std::vector<double> hi(3, -std::numeric_limits<double>::infinity());
  if (!region.box_lo.empty()) {
    lo = region.box_lo;
    hi = region.box_hi;
  } else {
    for (const auto& p : pts) {
      for (int j = 0; j < 3; ++j) {
        lo[j] = std::min(lo[j], p.x[j]);
        hi[j] = std::max(hi[j], p.x[j]);
      }
    }
  }
  std::vector<double> range(3);
  for (int j = 0; j < 3; ++j) range[j] = std::max(hi[j] - lo[j], 1e-12);

  std::vector<std::vector<int>> sets = region.leaves;
  if (region.mode == RegionMode::kConjunctive) {
    sets.assign(1, {});
    for (size_t k = 0; k < region.halfspaces.size(); ++k) sets[0].push_back(static_cast<int>(k));
  }
  double sum = 0.0;
  for (const auto& p : pts) {
    double best_dist = std::numeric_limits<double>::infinity();
    std::array<double, 3> best{};
    for (const auto& set : sets) {
      for (int k : set) {
        const Halfspace& h = region.halfspaces[k];
        double n2 = 0.0;
        for (int j = 0; j < 3; ++j) n2 += std::pow(h.theta[j] * range[j], 2);
        if (n2 == 0.0) continue;
        const double v = h.eval(p.x);
        const double dist = std::abs(v) / std::sqrt(n2);
        if (dist >= best_dist) continue;
        std::array<double, 3> q;
        bool in_box = true;
        for (int j = 0; j < 3; ++j) {
          q[j] = p.x[j] - v * h.theta[j] * range[j] * range[j] / n2;
          in_box &= q[j] >= lo[j] - 1e-9 * range[j] && q[j] <= hi[j] + 1e-9 * range[j];
        }
        if (!in_box) continue;
        bool inside = true;
        for (int o : set) {
          if (o == k) continue;
          const Halfspace& g = region.halfspaces[o];
          double sc = 0.0;
          for (int j = 0; j < 3; ++j) sc += std::abs(g.theta[j]) * range[j];
          if (g.eval(q) < -1e-9 * sc) inside = false;
        }
        if (!inside) continue;
        // A facet shared by two leaf polyhedra is interior to the union.
        if (region.mode == RegionMode::kDisjunctive) {
          std::array<double, 3> out;
          for (int j = 0; j < 3; ++j) out[j] = q[j] - 1e-7 * h.theta[j] * range[j] * range[j] / std::sqrt(n2);
          if (region.contains(out)) continue;
        }
        best_dist = dist;
        best = q;
      }
    }
    if (!std::isfinite(best_dist)) continue;
    double err;
    try {
      err = std::abs(nadir(best) + margin_hz) / margin_hz;
    } catch (const Error&) {
      continue;
    }
    if (!std::isfinite(err)) continue;
    sum += err;
    m.max_nl_error = std::max(m.max_nl_error, err);
    ++m.boundary_points;
  }
  m.avg_nl_error = m.boundary_points ? sum / m.boundary_points : 0.0;
  return m;
}

}  // namespace fsuc
