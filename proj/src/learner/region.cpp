#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>

#include <json.hpp>

#include "fsuc/error.hpp"
#include "fsuc/learner.hpp"

namespace fsuc {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::vector<std::string> default_features(size_t d) {
  if (d == 3) return {"r_gen_mw", "r_dc_mw", "h_sys"};
  std::vector<std::string> out;
  for (size_t j = 0; j < d; ++j) out.push_back("x" + std::to_string(j));
  return out;
}

bool satisfies(const LinearSafetyRegion& r, const std::vector<int>& members, std::span<const double> x) {
  for (int k : members) {
    if (r.halfspaces[k].eval(x) < 0.0) return false;
  }
  return true;
}

// Halfspace index sets whose conjunction forms one polyhedron of the region.
std::vector<std::vector<int>> member_sets(const LinearSafetyRegion& r) {
  if (r.mode == RegionMode::kDisjunctive) return r.leaves;
  std::vector<int> all(r.halfspaces.size());
  std::iota(all.begin(), all.end(), 0);
  return {all};
}

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (size_t j = 0; j < a.size(); ++j) s += a[j] * b[j];
  return s;
}

// Moves halfspace `h` so that it passes through q.
void pass_through(Halfspace& h, std::span<const double> q) { h.bias = -dot(h.theta, q); }

}  // namespace

double Halfspace::eval(std::span<const double> x) const { return bias + dot(theta, x); }

size_t LinearSafetyRegion::dim() const {
  if (!halfspaces.empty()) return halfspaces.front().theta.size();
  if (!box_lo.empty()) return box_lo.size();
  return features.size();
}

bool LinearSafetyRegion::contains(std::span<const double> x) const {
  for (const auto& m : member_sets(*this)) {
    if (satisfies(*this, m, x)) return true;
  }
  return false;
}

LinearSafetyRegion union_regions(const std::vector<LinearSafetyRegion>& parts) {
  if (parts.empty()) throw ValidationError("regions", "must be non-empty");
  LinearSafetyRegion u;
  u.mode = RegionMode::kDisjunctive;
  u.features = parts.front().features;
  u.box_lo = parts.front().box_lo;
  u.box_hi = parts.front().box_hi;
  for (size_t i = 0; i < parts.size(); ++i) {
    const auto& p = parts[i];
    if (p.features != u.features) throw ValidationError("features", "regions disagree on features");
    if (p.box_lo != u.box_lo || p.box_hi != u.box_hi) throw ValidationError("box", "regions disagree on the box");
    const int off = static_cast<int>(u.halfspaces.size());
    u.halfspaces.insert(u.halfspaces.end(), p.halfspaces.begin(), p.halfspaces.end());
    for (auto leaf : member_sets(p)) {
      for (int& k : leaf) k += off;
      u.leaves.push_back(std::move(leaf));
    }
    for (const auto& [k, v] : p.metadata) u.metadata["part" + std::to_string(i) + "." + k] = v;
  }
  return u;
}

// ---------------------------------------------------------------------------

LinearSafetyRegion collect_conditions(const SlopeTreeNode& root, RegionMode mode,
                                      const Eigen::MatrixXd* X, const std::vector<int>* y) {
  LinearSafetyRegion r;
  r.mode = mode;
  auto to_halfspace = [](const LogisticModel& m, bool flip) {
    Halfspace h;
    h.theta.assign(m.a.data(), m.a.data() + m.a.size());
    h.bias = m.c;
    if (flip) {
      for (double& t : h.theta) t = -t;
      h.bias = -h.bias;
    }
    return h;
  };

  bool any_safe = false;
  if (mode == RegionMode::kConjunctive) {
    std::vector<const SlopeTreeNode*> stack = {&root};
    while (!stack.empty()) {
      const SlopeTreeNode* n = stack.back();
      stack.pop_back();
      if (n->is_leaf()) {
        any_safe |= n->leaf_label == Safety::kSafe;
        continue;
      }
      double fr = static_cast<double>(n->right->n_safe) / n->right->n_samples;
      double fl = static_cast<double>(n->left->n_safe) / n->left->n_samples;
      if (X != nullptr) {
        // Orientation judged on the whole training set.
        double sr = 0, nr = 0, sl = 0, nl = 0;
        for (Eigen::Index i = 0; i < X->rows(); ++i) {
          Eigen::VectorXd row = X->row(i);
          const bool right = n->model.score(std::span<const double>(row.data(), row.size())) >= 0.0;
          (right ? nr : nl) += 1;
          (right ? sr : sl) += (*y)[i] == 1;
        }
        fr = nr > 0 ? sr / nr : 0.0;
        fl = nl > 0 ? sl / nl : 0.0;
      }
      r.halfspaces.push_back(to_halfspace(n->model, fr < fl));
      stack.push_back(n->right.get());
      stack.push_back(n->left.get());
    }
  } else {
    std::vector<Halfspace> path;
    std::function<void(const SlopeTreeNode&)> walk = [&](const SlopeTreeNode& n) {
      if (n.is_leaf()) {
        if (n.leaf_label != Safety::kSafe) return;
        any_safe = true;
        std::vector<int> idx;
        for (const auto& h : path) {
          idx.push_back(static_cast<int>(r.halfspaces.size()));
          r.halfspaces.push_back(h);
        }
        r.leaves.push_back(std::move(idx));
        return;
      }
      path.push_back(to_halfspace(n.model, true));
      walk(*n.left);
      path.back() = to_halfspace(n.model, false);
      walk(*n.right);
      path.pop_back();
    };
    walk(root);
  }
  if (!any_safe) throw Error("empty safe region");
  const size_t d = root.is_leaf() ? 0 : static_cast<size_t>(root.model.a.size());
  r.features = default_features(d);
  return r;
}

int tighten_on_data(LinearSafetyRegion& r, const Eigen::MatrixXd& X, const std::vector<int>& y) {
  const Eigen::Index d = X.cols();
  Eigen::VectorXd sd(d);
  for (Eigen::Index j = 0; j < d; ++j) {
    const double mu = X.col(j).mean();
    sd[j] = std::sqrt((X.col(j).array() - mu).square().mean());
    if (!(sd[j] > 0.0)) sd[j] = 1.0;
  }
  auto norm = [&](const Halfspace& h) {
    double s = 0.0;
    for (Eigen::Index j = 0; j < d; ++j) s += h.theta[j] * h.theta[j] * sd[j] * sd[j];
    return std::sqrt(s);
  };

  int shifts = 0;
  const auto sets = member_sets(r);
  for (Eigen::Index i = 0; i < X.rows(); ++i) {
    if (y[i] == 1) continue;
    Eigen::VectorXd row = X.row(i);
    std::span<const double> x(row.data(), row.size());
    for (const auto& m : sets) {
      if (m.empty() || !satisfies(r, m, x)) continue;
      int best = m.front();
      double best_slack = kInf;
      for (int k : m) {
        const double nk = norm(r.halfspaces[k]);
        if (nk == 0.0) continue;
        const double slack = r.halfspaces[k].eval(x) / nk;
        if (slack < best_slack) {
          best_slack = slack;
          best = k;
        }
      }
      Halfspace& h = r.halfspaces[best];
      const double tx = dot(h.theta, x);
      h.bias = -tx - 1e-9 * (std::abs(tx) + std::abs(h.bias) + 1.0);
      ++shifts;
    }
  }
  return shifts;
}

int relax_on_data(LinearSafetyRegion& r, const Eigen::MatrixXd& X, const std::vector<int>& y) {
  if (r.mode != RegionMode::kConjunctive) throw DomainError("relaxation needs a conjunctive region");
  const size_t d = r.dim();
  int moved = 0;
  std::vector<Eigen::VectorXd> unsafe;
  for (Eigen::Index i = 0; i < X.rows(); ++i) {
    if (y[i] == 0) unsafe.push_back(X.row(i).transpose());
  }
  for (int sweep = 0; sweep < 2; ++sweep) {
    for (size_t k = 0; k < r.halfspaces.size(); ++k) {
      Halfspace& h = r.halfspaces[k];
      double bias = kInf;
      for (const auto& u : unsafe) {
        std::span<const double> x(u.data(), d);
        bool others = true;
        for (size_t j = 0; j < r.halfspaces.size() && others; ++j) {
          if (j != k && r.halfspaces[j].eval(x) < 0.0) others = false;
        }
        if (!others) continue;
        const double tx = dot(h.theta, x);
        bias = std::min(bias, -tx - 1e-9 * (std::abs(tx) + 1.0));
      }
      if (!std::isfinite(bias)) {
        if (r.box_lo.size() != d) continue;
        // Nothing leans on this facet: make it slack over the whole box.
        bias = 0.0;
        for (size_t j = 0; j < d; ++j) bias -= h.theta[j] * (h.theta[j] > 0 ? r.box_lo[j] : r.box_hi[j]);
        bias += 1e-9 * (std::abs(bias) + 1.0);
      }
      if (bias != h.bias) {
        h.bias = bias;
        ++moved;
      }
    }
  }
  return moved;
}

// ---------------------------------------------------------------------------

std::optional<double> lower_boundary(const LinearSafetyRegion& r, std::span<const double> x, int axis) {
  std::optional<double> best;
  for (const auto& m : member_sets(r)) {
    double lo = r.box_lo.empty() ? -kInf : r.box_lo[axis];
    double hi = r.box_hi.empty() ? kInf : r.box_hi[axis];
    bool empty = false;
    for (int k : m) {
      const Halfspace& h = r.halfspaces[k];
      double rest = h.bias;
      for (size_t j = 0; j < h.theta.size(); ++j) {
        if (static_cast<int>(j) != axis) rest += h.theta[j] * x[j];
      }
      const double ta = h.theta[axis];
      if (ta > 0.0) {
        lo = std::max(lo, -rest / ta);
      } else if (ta < 0.0) {
        hi = std::min(hi, -rest / ta);
      } else if (rest < 0.0) {
        empty = true;
      }
    }
    if (empty || lo > hi || !std::isfinite(lo)) continue;
    if (!best || lo < *best) best = lo;
  }
  return best;
}

std::vector<std::vector<double>> region_vertices(const LinearSafetyRegion& r,
                                                 const std::vector<int>& members) {
  const size_t d = r.dim();
  if (r.box_lo.size() != d || r.box_hi.size() != d) throw DomainError("region has no feature box");
  std::vector<Halfspace> cons;
  for (int k : members) cons.push_back(r.halfspaces[k]);
  for (size_t j = 0; j < d; ++j) {
    Halfspace lo, hi;
    lo.theta.assign(d, 0.0);
    hi.theta.assign(d, 0.0);
    lo.theta[j] = 1.0;
    lo.bias = -r.box_lo[j];
    hi.theta[j] = -1.0;
    hi.bias = r.box_hi[j];
    cons.push_back(lo);
    cons.push_back(hi);
  }
  std::vector<double> range(d);
  for (size_t j = 0; j < d; ++j) range[j] = std::max(r.box_hi[j] - r.box_lo[j], 1e-12);

  std::vector<std::vector<double>> out;
  const size_t m = cons.size();
  std::vector<int> pick(d);
  std::function<void(size_t, size_t)> rec = [&](size_t start, size_t depth) {
    if (depth == d) {
      Eigen::MatrixXd A(d, d);
      Eigen::VectorXd b(d);
      for (size_t i = 0; i < d; ++i) {
        for (size_t j = 0; j < d; ++j) A(i, j) = cons[pick[i]].theta[j];
        b[i] = -cons[pick[i]].bias;
      }
      Eigen::FullPivLU<Eigen::MatrixXd> lu(A);
      if (lu.rank() < static_cast<Eigen::Index>(d)) return;
      Eigen::VectorXd v = lu.solve(b);
      if (!v.allFinite()) return;
      std::span<const double> vs(v.data(), d);
      for (const auto& c : cons) {
        double sc = 0.0;
        for (size_t j = 0; j < d; ++j) sc += std::abs(c.theta[j]) * range[j];
        if (c.eval(vs) < -1e-9 * std::max(sc, 1.0)) return;
      }
      std::vector<double> p(v.data(), v.data() + d);
      for (size_t j = 0; j < d; ++j) p[j] = std::clamp(p[j], r.box_lo[j], r.box_hi[j]);
      for (const auto& q : out) {
        bool same = true;
        for (size_t j = 0; j < d && same; ++j) same = std::abs(q[j] - p[j]) <= 1e-9 * range[j];
        if (same) return;
      }
      out.push_back(std::move(p));
      return;
    }
    for (size_t i = start; i < m; ++i) {
      pick[depth] = static_cast<int>(i);
      rec(i + 1, depth + 1);
    }
  };
  rec(0, 0);
  return out;
}

CertifyReport certify_region(LinearSafetyRegion& r, const NadirFn& nadir, const CertifyOptions& opt) {
  const size_t d = r.dim();
  if (r.box_lo.size() != d || r.box_hi.size() != d) throw DomainError("region has no feature box");
  std::vector<double> range(d);
  for (size_t j = 0; j < d; ++j) range[j] = std::max(r.box_hi[j] - r.box_lo[j], 1e-12);
  // Points within 1e-4 Hz of the limit count as unsafe so that solver
  // feasibility tolerances cannot push an accepted schedule over it.
  const double floor_hz = -opt.margin_hz + 1e-4;
  auto safe = [&](std::span<const double> x) {
    try {
      return nadir(x) >= floor_hz;
    } catch (const Error&) {
      return false;
    }
  };

  CertifyReport rep;
  auto fix = [&](const std::vector<int>& members, std::span<const double> p) {
    int best = -1;
    double best_slack = kInf;
    for (int k : members) {
      const Halfspace& h = r.halfspaces[k];
      double nk = 0.0;
      for (size_t j = 0; j < d; ++j) nk += std::pow(h.theta[j] * range[j], 2);
      nk = std::sqrt(nk);
      if (nk == 0.0) continue;
      const double slack = h.eval(p) / nk;
      if (slack < best_slack) {
        best_slack = slack;
        best = k;
      }
    }
    if (best < 0) return;
    Halfspace& h = r.halfspaces[best];
    // Inward unit normal in box-normalized coordinates, mapped back.
    std::vector<double> dir(d);
    double nk = 0.0;
    for (size_t j = 0; j < d; ++j) nk += std::pow(h.theta[j] * range[j], 2);
    nk = std::sqrt(nk);
    for (size_t j = 0; j < d; ++j) dir[j] = range[j] * (h.theta[j] * range[j]) / nk;
    auto point = [&](double tau) {
      std::vector<double> q(d);
      for (size_t j = 0; j < d; ++j) q[j] = p[j] + tau * dir[j];
      return q;
    };
    double lo = 0.0, hi = 0.005;
    while (hi < 2.0 && !safe(point(hi))) {
      lo = hi;
      hi *= 2.0;
    }
    if (hi >= 2.0) {
      hi = 2.0;
    } else {
      for (int it = 0; it < 40; ++it) {
        const double mid = 0.5 * (lo + hi);
        (safe(point(mid)) ? hi : lo) = mid;
      }
    }
    auto q = point(hi);
    pass_through(h, q);
    ++rep.shifts;
  };

  const auto sets = member_sets(r);
  const int g = std::max(opt.grid, 2);
  for (rep.passes = 1; rep.passes <= opt.max_passes; ++rep.passes) {
    const int before = rep.shifts;
    for (const auto& m : sets) {
      // Vertices first, then the lower boundary along each axis.
      for (const auto& v : region_vertices(r, m)) {
        ++rep.probes_checked;
        if (satisfies(r, m, v) && !safe(v)) fix(m, v);
      }
      LinearSafetyRegion single = r;
      for (size_t axis = 0; axis < d; ++axis) {
        std::vector<size_t> others;
        for (size_t j = 0; j < d; ++j) {
          if (j != axis) others.push_back(j);
        }
        const size_t cells = static_cast<size_t>(std::pow(g, others.size()));
        for (size_t c = 0; c < cells; ++c) {
          std::vector<double> x(d, 0.0);
          size_t rem = c;
          for (size_t j : others) {
            const int i = static_cast<int>(rem % g);
            rem /= g;
            x[j] = r.box_lo[j] + range[j] * i / (g - 1);
          }
          single.mode = RegionMode::kDisjunctive;
          single.halfspaces = r.halfspaces;
          single.leaves = {m};
          auto t = lower_boundary(single, x, static_cast<int>(axis));
          if (!t) continue;
          x[axis] = *t;
          ++rep.probes_checked;
          if (!safe(x)) fix(m, x);
        }
      }
    }
    if (rep.shifts == before) {
      rep.certified = true;
      break;
    }
  }
  if (rep.passes > opt.max_passes) rep.passes = opt.max_passes;
  r.metadata["certify_shifts"] = std::to_string(rep.shifts);
  r.metadata["certified"] = rep.certified ? "true" : "false";
  return rep;
}

// ---------------------------------------------------------------------------

std::string serialize_region(const LinearSafetyRegion& r) {
  nlohmann::ordered_json j;
  j["mode"] = r.mode == RegionMode::kConjunctive ? "conjunctive" : "disjunctive";
  j["features"] = r.features;
  auto hs = nlohmann::ordered_json::array();
  for (const auto& h : r.halfspaces) {
    std::vector<double> row = h.theta;
    row.push_back(h.bias);
    hs.push_back(row);
  }
  j["halfspaces"] = hs;
  j["leaves"] = r.leaves;
  if (!r.box_lo.empty()) j["box"] = {{"lo", r.box_lo}, {"hi", r.box_hi}};
  j["metadata"] = r.metadata;
  return j.dump(2) + "\n";
}

LinearSafetyRegion parse_region(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    std::string msg = e.what();
    auto pos = msg.find("line ");
    std::string where = pos == std::string::npos ? "region" : msg.substr(pos, msg.find(',', pos) - pos);
    throw ParseError(where, "malformed region file");
  }
  LinearSafetyRegion r;
  try {
    const std::string mode = j.at("mode").get<std::string>();
    if (mode == "conjunctive") {
      r.mode = RegionMode::kConjunctive;
    } else if (mode == "disjunctive") {
      r.mode = RegionMode::kDisjunctive;
    } else {
      throw ValidationError("mode", "unknown mode '" + mode + "'");
    }
    r.features = j.at("features").get<std::vector<std::string>>();
    const size_t d = r.features.size();
    const auto& hs = j.at("halfspaces");
    for (size_t i = 0; i < hs.size(); ++i) {
      auto row = hs[i].get<std::vector<double>>();
      const std::string field = "halfspaces[" + std::to_string(i) + "]";
      if (row.size() != d + 1) throw ValidationError(field, "expected " + std::to_string(d + 1) + " values");
      for (double v : row) {
        if (!std::isfinite(v)) throw ValidationError(field, "non-finite coefficient");
      }
      Halfspace h;
      h.bias = row.back();
      row.pop_back();
      h.theta = std::move(row);
      r.halfspaces.push_back(std::move(h));
    }
    r.leaves = j.value("leaves", std::vector<std::vector<int>>{});
    for (size_t i = 0; i < r.leaves.size(); ++i) {
      for (int k : r.leaves[i]) {
        if (k < 0 || k >= static_cast<int>(r.halfspaces.size())) {
          throw ValidationError("leaves[" + std::to_string(i) + "]", "halfspace index out of range");
        }
      }
    }
    if (r.mode == RegionMode::kDisjunctive && r.leaves.empty()) {
      throw ValidationError("leaves", "disjunctive region needs at least one leaf");
    }
    if (j.contains("box")) {
      r.box_lo = j["box"].at("lo").get<std::vector<double>>();
      r.box_hi = j["box"].at("hi").get<std::vector<double>>();
      if (r.box_lo.size() != d || r.box_hi.size() != d) throw ValidationError("box", "dimension mismatch");
      for (size_t k = 0; k < d; ++k) {
        if (!(r.box_lo[k] <= r.box_hi[k])) throw ValidationError("box", "lo must be <= hi");
      }
    }
    if (j.contains("metadata")) r.metadata = j["metadata"].get<std::map<std::string, std::string>>();
  } catch (const nlohmann::json::exception& e) {
    throw ParseError("region", e.what());
  }
  return r;
}

void save_region(const LinearSafetyRegion& r, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path);
  out << serialize_region(r);
}

LinearSafetyRegion load_region(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open region " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_region(ss.str());
}

}  // namespace fsuc
