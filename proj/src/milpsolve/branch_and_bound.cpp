#include <algorithm>
#include <cmath>
#include <iostream>
#include <memory>
#include <queue>

#include "fsuc/error.hpp"
#include "fsuc/milpsolve.hpp"

namespace fsuc {

const char* to_string(MilpStatus s) {
  switch (s) {
    case MilpStatus::kOptimal: return "optimal";
    case MilpStatus::kFeasible: return "feasible";
    case MilpStatus::kInfeasible: return "infeasible";
    case MilpStatus::kUnbounded: return "unbounded";
    case MilpStatus::kTimeLimit: return "time limit";
    case MilpStatus::kNodeLimit: return "node limit";
    case MilpStatus::kError: return "error";
  }
  return "?";
}

namespace {

using Clock = std::chrono::steady_clock;

struct Node {
  std::vector<double> lo, hi;  // integer-variable bounds, indexed like `ints`
  double bound = -kInfinity;
  int depth = 0;
  long id = 0;
  std::shared_ptr<DualSimplex::Basis> basis;
};

struct NodeOrder {
  bool operator()(const std::unique_ptr<Node>& a, const std::unique_ptr<Node>& b) const {
    if (a->bound != b->bound) return a->bound > b->bound;
    return a->id > b->id;
  }
};

class BranchAndBound {
 public:
  BranchAndBound(const MilpModel& m, const SolveOptions& opt)
      : m_(m), opt_(opt), lp_(std::make_unique<DualSimplex>(lp_relaxation(m), opt.lp)), start_(Clock::now()) {
    for (int j = 0; j < m.num_vars(); ++j) {
      if (m.vars()[j].is_integer()) {
        ints_.push_back(j);
        root_lo_.push_back(std::ceil(m.vars()[j].lower - opt.integrality_tol));
        root_hi_.push_back(std::floor(m.vars()[j].upper + opt.integrality_tol));
      }
    }
    cur_lo_ = root_lo_;
    cur_hi_ = root_hi_;
    for (size_t k = 0; k < ints_.size(); ++k) lp_->set_col_bounds(ints_[k], cur_lo_[k], cur_hi_[k]);
    pc_sum_.assign(ints_.size() * 2, 0.0);
    pc_cnt_.assign(ints_.size() * 2, 0);
  }

  SolveResult run();

 private:
  double elapsed() const { return std::chrono::duration<double>(Clock::now() - start_).count(); }
  double gap_of(double bound) const {
    if (!have_inc_) return kInfinity;
    return (inc_obj_ - bound) / std::max(1.0, std::abs(inc_obj_));
  }
  bool dominated(double bound) const {
    return have_inc_ && (bound >= inc_obj_ - 1e-9 * std::max(1.0, std::abs(inc_obj_)) ||
                         gap_of(bound) <= opt_.mip_gap);
  }
  bool prunable(double bound) {
    const bool p = dominated(bound);
    if (p) pruned_bound_ = std::min(pruned_bound_, bound);
    return p;
  }
  void apply_bounds(const std::vector<double>& lo, const std::vector<double>& hi) {
    for (size_t k = 0; k < ints_.size(); ++k) {
      if (lo[k] != cur_lo_[k] || hi[k] != cur_hi_[k]) {
        lp_->set_col_bounds(ints_[k], lo[k], hi[k]);
        cur_lo_[k] = lo[k];
        cur_hi_[k] = hi[k];
      }
    }
  }
  LpResult solve_node() {
    LpResult r = lp_->solve();
    lp_iters_ += r.iterations;
    if (r.status == LpStatus::kNumerical || r.status == LpStatus::kIterationLimit) {
      // Retry cold.
      lp_ = std::make_unique<DualSimplex>(lp_relaxation(m_), opt_.lp);
      for (size_t k = 0; k < ints_.size(); ++k) lp_->set_col_bounds(ints_[k], cur_lo_[k], cur_hi_[k]);
      r = lp_->solve();
      lp_iters_ += r.iterations;
    }
    return r;
  }
  // Index into ints_ of the branching variable, or -1 when integral.
  int select_branch(const std::vector<double>& x) const;
  void try_incumbent(const std::vector<double>& x, const char* source);
  void dive(const Node& from, const LpResult& lp);
  // Solves the model restricted to integer bounds [lo, hi] with a node
  // budget and offers the result as an incumbent.
  void sub_mip(const std::vector<double>& lo, const std::vector<double>& hi, long node_limit, const char* tag);
  void rens(const Node& at, const LpResult& lp);
  void rins(const Node& at, const LpResult& lp);
  void update_pseudocost(int k, bool up, double frac, double delta) {
    if (!(frac > 1e-9) || !std::isfinite(delta)) return;
    pc_sum_[2 * k + up] += std::max(delta, 0.0) / frac;
    ++pc_cnt_[2 * k + up];
  }

  const MilpModel& m_;
  SolveOptions opt_;
  std::unique_ptr<DualSimplex> lp_;
  Clock::time_point start_;
  std::vector<int> ints_;
  std::vector<double> root_lo_, root_hi_, cur_lo_, cur_hi_;
  std::vector<double> pc_sum_;
  std::vector<int> pc_cnt_;
  bool have_inc_ = false;
  double inc_obj_ = kInfinity;
  std::vector<double> inc_;
  double pruned_bound_ = kInfinity;  // lowest bound discarded by the gap test
  long lp_iters_ = 0;
  long nodes_ = 0;
  long next_id_ = 0;
};

int BranchAndBound::select_branch(const std::vector<double>& x) const {
  // Pseudo-cost product score; unknown costs fall back to the mean.
  double mean_dn = 0, mean_up = 0;
  int nd = 0, nu = 0;
  for (size_t k = 0; k < ints_.size(); ++k) {
    if (pc_cnt_[2 * k]) mean_dn += pc_sum_[2 * k] / pc_cnt_[2 * k], ++nd;
    if (pc_cnt_[2 * k + 1]) mean_up += pc_sum_[2 * k + 1] / pc_cnt_[2 * k + 1], ++nu;
  }
  mean_dn = nd ? mean_dn / nd : 1.0;
  mean_up = nu ? mean_up / nu : 1.0;
  int best = -1;
  double best_score = -1.0;
  for (size_t k = 0; k < ints_.size(); ++k) {
    const double v = x[ints_[k]];
    const double f = v - std::floor(v);
    if (f <= opt_.integrality_tol || f >= 1.0 - opt_.integrality_tol) continue;
    const double pd = pc_cnt_[2 * k] ? pc_sum_[2 * k] / pc_cnt_[2 * k] : mean_dn;
    const double pu = pc_cnt_[2 * k + 1] ? pc_sum_[2 * k + 1] / pc_cnt_[2 * k + 1] : mean_up;
    const double score = std::max(pd * f, 1e-6) * std::max(pu * (1.0 - f), 1e-6);
    if (score > best_score) {
      best_score = score;
      best = static_cast<int>(k);
    }
  }
  return best;
}

void BranchAndBound::try_incumbent(const std::vector<double>& x_in, const char* source) {
  std::vector<double> x = x_in;
  for (int j : ints_) x[j] = std::round(x[j]);
  if (m_.max_violation(x) > 1e-6 * std::max(1.0, 1e-3 * std::abs(m_.objective(x)))) return;
  const double f = m_.objective(x);
  if (have_inc_ && f >= inc_obj_) return;
  have_inc_ = true;
  inc_obj_ = f;
  inc_ = std::move(x);
  if (opt_.log) std::clog << "  incumbent " << f << " (" << source << ", " << elapsed() << " s)\n";
}

void BranchAndBound::dive(const Node& from, const LpResult& start) {
  // Fix nearly-integral variables in batches, rounding up commitments that
  // are fractional, and re-solve until integral or infeasible.
  std::vector<double> lo = from.lo, hi = from.hi;
  LpResult lp = start;
  DualSimplex::Basis saved = lp_->basis();
  for (int round = 0; round < 200; ++round) {
    std::vector<std::pair<double, int>> frac;
    for (size_t k = 0; k < ints_.size(); ++k) {
      const double v = lp.x[ints_[k]];
      const double f = std::abs(v - std::round(v));
      if (lo[k] == hi[k]) continue;
      if (f <= opt_.integrality_tol) {
        lo[k] = hi[k] = std::round(v);
      } else {
        frac.emplace_back(f, static_cast<int>(k));
      }
    }
    if (frac.empty()) {
      try_incumbent(lp.x, "dive");
      break;
    }
    std::sort(frac.begin(), frac.end());
    const size_t batch = std::max<size_t>(1, frac.size() / 4);
    for (size_t i = 0; i < batch; ++i) {
      const int k = frac[i].second;
      const double v = lp.x[ints_[k]];
      const double r = std::ceil(v - opt_.integrality_tol);
      lo[k] = hi[k] = std::min(r, hi[k]);
    }
    apply_bounds(lo, hi);
    lp = solve_node();
    if (lp.status != LpStatus::kOptimal || dominated(lp.objective)) break;
  }
  lp_->set_basis(saved);
  apply_bounds(from.lo, from.hi);
}

void BranchAndBound::sub_mip(const std::vector<double>& lo, const std::vector<double>& hi, long node_limit,
                             const char* tag) {
  MilpModel sub = m_;
  for (size_t k = 0; k < ints_.size(); ++k) {
    sub.var(ints_[k]).lower = lo[k];
    sub.var(ints_[k]).upper = hi[k];
  }
  SolveOptions so = opt_;
  so.heuristics = false;
  so.log = false;
  so.node_limit = node_limit;
  so.time_limit_s = std::max(0.0, std::min(opt_.time_limit_s - elapsed(), 0.25 * opt_.time_limit_s));
  so.initial_solution.reset();
  if (have_inc_) so.initial_solution = inc_;
  BranchAndBound bb(sub, so);
  const SolveResult r = bb.run();
  lp_iters_ += r.lp_iterations;
  if (!r.x.empty()) try_incumbent(r.x, tag);
}

void BranchAndBound::rens(const Node& at, const LpResult& lp) {
  std::vector<double> lo = at.lo, hi = at.hi;
  size_t fixed = 0;
  for (size_t k = 0; k < ints_.size(); ++k) {
    const double v = lp.x[ints_[k]];
    if (std::abs(v - std::round(v)) <= opt_.integrality_tol) {
      lo[k] = hi[k] = std::round(v);
      ++fixed;
    } else {
      lo[k] = std::max(lo[k], std::floor(v));
      hi[k] = std::min(hi[k], std::ceil(v));
    }
  }
  if (fixed * 2 < ints_.size()) return;
  sub_mip(lo, hi, 2000, "rens");
}

void BranchAndBound::rins(const Node& at, const LpResult& lp) {
  std::vector<double> lo = at.lo, hi = at.hi;
  size_t fixed = 0;
  for (size_t k = 0; k < ints_.size(); ++k) {
    const double v = inc_[ints_[k]];
    if (std::abs(lp.x[ints_[k]] - v) <= 0.1 && lo[k] <= v && v <= hi[k]) {
      lo[k] = hi[k] = v;
      ++fixed;
    }
  }
  if (fixed * 10 < ints_.size() * 3 || fixed == ints_.size()) return;
  sub_mip(lo, hi, 1000, "rins");
}

SolveResult BranchAndBound::run() {
  SolveResult res;
  if (opt_.initial_solution && static_cast<int>(opt_.initial_solution->size()) == m_.num_vars()) {
    try_incumbent(*opt_.initial_solution, "initial");
  }

  std::priority_queue<std::unique_ptr<Node>, std::vector<std::unique_ptr<Node>>, NodeOrder> open;
  auto root = std::make_unique<Node>();
  root->lo = root_lo_;
  root->hi = root_hi_;
  root->id = next_id_++;
  std::unique_ptr<Node> cur = std::move(root);
  bool root_done = false;
  MilpStatus limit = MilpStatus::kOptimal;
  double root_bound = -kInfinity;

  while (cur || !open.empty()) {
    if (!cur) {
      cur = std::move(const_cast<std::unique_ptr<Node>&>(open.top()));
      open.pop();
      if (prunable(cur->bound)) {
        cur.reset();
        continue;
      }
      if (cur->basis) lp_->set_basis(*cur->basis);
    }
    if (elapsed() > opt_.time_limit_s) {
      limit = MilpStatus::kTimeLimit;
      open.push(std::move(cur));
      break;
    }
    if (nodes_ >= opt_.node_limit) {
      limit = MilpStatus::kNodeLimit;
      open.push(std::move(cur));
      break;
    }
    ++nodes_;
    apply_bounds(cur->lo, cur->hi);
    LpResult lp = solve_node();
    if (!root_done) {
      root_done = true;
      if (lp.status == LpStatus::kInfeasible) {
        res.status = MilpStatus::kInfeasible;
        break;
      }
      if (lp.status == LpStatus::kUnbounded) {
        res.status = MilpStatus::kUnbounded;
        break;
      }
      if (lp.status != LpStatus::kOptimal) {
        res.status = MilpStatus::kError;
        res.message = std::string("root LP: ") + to_string(lp.status);
        break;
      }
      root_bound = lp.objective;
      if (opt_.log) std::clog << "  root bound " << root_bound << " (" << lp.iterations << " iterations)\n";
    }
    if (lp.status != LpStatus::kOptimal) {
      cur.reset();
      continue;
    }
    if (prunable(lp.objective)) {
      cur.reset();
      continue;
    }
    const int k = select_branch(lp.x);
    if (k < 0) {
      try_incumbent(lp.x, "node");
      cur.reset();
      continue;
    }
    if (opt_.heuristics) {
      if (nodes_ == 1 || (nodes_ % 50 == 0 && !have_inc_)) dive(*cur, lp);
      if (nodes_ == 1) rens(*cur, lp);
      if (have_inc_ && nodes_ % 200 == 100) rins(*cur, lp);
      apply_bounds(cur->lo, cur->hi);
    }

    const double v = lp.x[ints_[k]];
    auto basis = std::make_shared<DualSimplex::Basis>(lp_->basis());
    auto down = std::make_unique<Node>(*cur);
    auto up = std::make_unique<Node>(*cur);
    down->hi[k] = std::floor(v);
    up->lo[k] = std::ceil(v);
    for (Node* c : {down.get(), up.get()}) {
      c->bound = lp.objective;
      c->depth = cur->depth + 1;
      c->id = next_id_++;
      c->basis = basis;
    }
    // Learn pseudo-costs from the children's bounds lazily: evaluate the
    // preferred child now (plunge), the other one later from the queue.
    const double f = v - std::floor(v);
    const bool go_up = f >= 0.5;
    std::unique_ptr<Node>& next = go_up ? up : down;
    std::unique_ptr<Node>& other = go_up ? down : up;
    {
      apply_bounds(next->lo, next->hi);
      LpResult child = solve_node();
      ++nodes_;
      if (child.status == LpStatus::kOptimal) {
        update_pseudocost(k, go_up, go_up ? 1.0 - f : f, child.objective - lp.objective);
        next->bound = child.objective;
      } else {
        next.reset();
      }
      if (next && !prunable(next->bound)) {
        const int kk = select_branch(child.x);
        if (kk < 0) {
          try_incumbent(child.x, "node");
          next.reset();
        } else {
          next->basis = std::make_shared<DualSimplex::Basis>(lp_->basis());
        }
      } else {
        next.reset();
      }
    }
    open.push(std::move(other));
    cur = std::move(next);
    if (cur) {
      --nodes_;  // re-solved (warm, no pivots) at the top of the loop
    }
  }

  res.nodes = nodes_;
  res.lp_iterations = lp_iters_;
  double best_bound = have_inc_ ? inc_obj_ : kInfinity;
  while (!open.empty()) {
    best_bound = std::min(best_bound, open.top()->bound);
    open.pop();
  }
  if (res.status == MilpStatus::kError && !res.message.empty()) {
    // root failure already recorded
  } else if (res.status == MilpStatus::kInfeasible || res.status == MilpStatus::kUnbounded) {
    // nothing to add
  } else if (!have_inc_) {
    res.status = limit == MilpStatus::kOptimal ? MilpStatus::kInfeasible : limit;
  } else {
    res.status = limit == MilpStatus::kOptimal ? MilpStatus::kOptimal : MilpStatus::kFeasible;
    if (limit == MilpStatus::kTimeLimit && res.status == MilpStatus::kFeasible) res.message = "time limit";
    if (limit == MilpStatus::kNodeLimit) res.message = "node limit";
  }
  if (have_inc_) {
    // Polish: integers fixed, continuous part re-optimized.
    std::vector<double> lo = cur_lo_, hi = cur_hi_;
    for (size_t k = 0; k < ints_.size(); ++k) lo[k] = hi[k] = inc_[ints_[k]];
    apply_bounds(lo, hi);
    LpResult p = solve_node();
    if (p.status == LpStatus::kOptimal && p.objective <= inc_obj_ + 1e-9 * std::max(1.0, std::abs(inc_obj_))) {
      std::vector<double> x = p.x;
      for (int j : ints_) x[j] = std::round(x[j]);
      if (m_.max_violation(x) <= 1e-6 * std::max(1.0, 1e-3 * std::abs(m_.objective(x)))) {
        inc_ = x;
        inc_obj_ = m_.objective(x);
      }
    }
    res.x = inc_;
    res.objective = inc_obj_;
    res.best_bound = std::max(root_bound, std::min({best_bound, pruned_bound_, inc_obj_}));
    res.gap = (inc_obj_ - res.best_bound) / std::max(1.0, std::abs(inc_obj_));
  }
  res.seconds = elapsed();
  return res;
}

}  // namespace

SolveResult solve_milp(const MilpModel& m, const SolveOptions& opt) {
  m.validate();
  BranchAndBound bb(m, opt);
  return bb.run();
}

}  // namespace fsuc
