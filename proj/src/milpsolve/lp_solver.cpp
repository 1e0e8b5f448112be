#include <algorithm>
#include <cmath>

#include "fsuc/error.hpp"
#include "fsuc/milpsolve.hpp"
#include "fsuc/rng.hpp"

namespace fsuc {

namespace {

// Stand-in for an infinite bound, in scaled units.
constexpr double kBig = 1e9;

double pow2_round(double s) { return std::exp2(std::round(std::log2(s))); }

}  // namespace

const char* to_string(LpStatus s) {
  switch (s) {
    case LpStatus::kOptimal: return "optimal";
    case LpStatus::kInfeasible: return "infeasible";
    case LpStatus::kUnbounded: return "unbounded";
    case LpStatus::kIterationLimit: return "iteration limit";
    case LpStatus::kNumerical: return "numerical failure";
  }
  return "?";
}

LpProblem lp_relaxation(const MilpModel& m) {
  LpProblem p;
  const int n = m.num_vars(), rows = m.num_cons();
  std::vector<Eigen::Triplet<double>> trip;
  p.row_lo.resize(rows);
  p.row_hi.resize(rows);
  for (int i = 0; i < rows; ++i) {
    const auto& c = m.cons()[i];
    for (const auto& t : c.terms) trip.emplace_back(i, t.var, t.coef);
    p.row_lo[i] = c.sense == Sense::kLe ? -kInfinity : c.rhs;
    p.row_hi[i] = c.sense == Sense::kGe ? kInfinity : c.rhs;
  }
  p.A.resize(rows, n);
  p.A.setFromTriplets(trip.begin(), trip.end());
  p.A.makeCompressed();
  for (const auto& v : m.vars()) {
    p.c.push_back(v.cost);
    p.col_lo.push_back(v.lower);
    p.col_hi.push_back(v.upper);
  }
  p.offset = m.objective_offset;
  return p;
}

// ---------------------------------------------------------------------------

DualSimplex::DualSimplex(const LpProblem& p, const LpOptions& opt)
    : opt_(opt), n_(p.cols()), m_(p.rows()), offset_(p.offset) {
  if (static_cast<int>(p.c.size()) != n_ || static_cast<int>(p.col_lo.size()) != n_ ||
      static_cast<int>(p.col_hi.size()) != n_ || static_cast<int>(p.row_lo.size()) != m_ ||
      static_cast<int>(p.row_hi.size()) != m_) {
    throw DomainError("LP dimensions inconsistent");
  }
  A_ = p.A;
  A_.makeCompressed();
  row_scale_.assign(m_, 1.0);
  col_scale_.assign(n_, 1.0);
  if (opt_.scale && A_.nonZeros() > 0) {
    // Geometric-mean passes, rounded to powers of two so scaling is exact.
    for (int pass = 0; pass < 6; ++pass) {
      std::vector<double> rmin(m_, kInfinity), rmax(m_, 0.0);
      for (int j = 0; j < n_; ++j) {
        for (Eigen::SparseMatrix<double>::InnerIterator it(A_, j); it; ++it) {
          const double a = std::abs(it.value()) * row_scale_[it.row()] * col_scale_[j];
          if (a == 0.0) continue;
          rmin[it.row()] = std::min(rmin[it.row()], a);
          rmax[it.row()] = std::max(rmax[it.row()], a);
        }
      }
      for (int i = 0; i < m_; ++i) {
        if (rmax[i] > 0.0) row_scale_[i] /= std::sqrt(rmin[i] * rmax[i]);
      }
      for (int j = 0; j < n_; ++j) {
        double cmin = kInfinity, cmax = 0.0;
        for (Eigen::SparseMatrix<double>::InnerIterator it(A_, j); it; ++it) {
          const double a = std::abs(it.value()) * row_scale_[it.row()] * col_scale_[j];
          if (a == 0.0) continue;
          cmin = std::min(cmin, a);
          cmax = std::max(cmax, a);
        }
        if (cmax > 0.0) col_scale_[j] /= std::sqrt(cmin * cmax);
      }
    }
    for (auto& s : row_scale_) s = pow2_round(s);
    for (auto& s : col_scale_) s = pow2_round(s);
    for (int j = 0; j < n_; ++j) {
      for (Eigen::SparseMatrix<double>::InnerIterator it(A_, j); it; ++it) {
        it.valueRef() *= row_scale_[it.row()] * col_scale_[j];
      }
    }
  }

  At_ = A_;
  At_.makeCompressed();
  const int nt = n_ + m_;
  c_.assign(nt, 0.0);
  lo_.assign(nt, 0.0);
  hi_.assign(nt, 0.0);
  art_lo_.assign(nt, false);
  art_hi_.assign(nt, false);
  for (int j = 0; j < n_; ++j) {
    c_[j] = p.c[j] * col_scale_[j];
    set_col_bounds(j, p.col_lo[j], p.col_hi[j]);
  }
  for (int i = 0; i < m_; ++i) {
    const int k = n_ + i;
    lo_[k] = p.row_lo[i] * row_scale_[i];
    hi_[k] = p.row_hi[i] * row_scale_[i];
    if (!std::isfinite(lo_[k])) {
      lo_[k] = -kBig;
      art_lo_[k] = true;
    }
    if (!std::isfinite(hi_[k])) {
      hi_[k] = kBig;
      art_hi_[k] = true;
    }
  }
  c_orig_ = c_;
  x_.assign(nt, 0.0);
  d_.assign(nt, 0.0);
  status_.assign(nt, kAtLower);
  pos_.assign(nt, -1);
}

void DualSimplex::set_col_bounds(int j, double lo, double hi) {
  if (lo > hi) throw DomainError("column lower bound exceeds upper bound");
  const double s = col_scale_[j];
  lo_[j] = lo / s;
  hi_[j] = hi / s;
  art_lo_[j] = !std::isfinite(lo);
  art_hi_[j] = !std::isfinite(hi);
  if (art_lo_[j]) lo_[j] = -kBig;
  if (art_hi_[j]) hi_[j] = kBig;
  if (!status_.empty() && status_[j] != kBasic) x_[j] = status_[j] == kAtLower ? lo_[j] : hi_[j];
}

double DualSimplex::col_lower(int j) const { return art_lo_[j] ? -kInfinity : lo_[j] * col_scale_[j]; }
double DualSimplex::col_upper(int j) const { return art_hi_[j] ? kInfinity : hi_[j] * col_scale_[j]; }

DualSimplex::Basis DualSimplex::basis() const { return {head_, status_}; }

void DualSimplex::set_basis(const Basis& b) {
  if (static_cast<int>(b.head.size()) != m_ || static_cast<int>(b.status.size()) != n_ + m_) {
    throw DomainError("basis dimensions do not match the LP");
  }
  head_ = b.head;
  status_ = b.status;
  std::fill(pos_.begin(), pos_.end(), -1);
  for (int i = 0; i < m_; ++i) pos_[head_[i]] = i;
  factored_ = false;
}

bool DualSimplex::boxed(int j) const { return !art_lo_[j] && !art_hi_[j]; }

void DualSimplex::add_column(int j, double scale, Eigen::VectorXd& v) const {
  if (j < n_) {
    for (Eigen::SparseMatrix<double>::InnerIterator it(A_, j); it; ++it) v[it.row()] += scale * it.value();
  } else {
    v[j - n_] -= scale;
  }
}

double DualSimplex::column_dot(int j, const Eigen::VectorXd& rho) const {
  if (j >= n_) return -rho[j - n_];
  double s = 0.0;
  for (Eigen::SparseMatrix<double>::InnerIterator it(A_, j); it; ++it) s += rho[it.row()] * it.value();
  return s;
}

bool DualSimplex::refactor() {
  std::vector<BasisLU::Column> cols(m_);
  for (int i = 0; i < m_; ++i) {
    const int j = head_[i];
    if (j < n_) {
      for (Eigen::SparseMatrix<double>::InnerIterator it(A_, j); it; ++it) cols[i].push_back({it.row(), it.value()});
    } else {
      cols[i].push_back({j - n_, -1.0});
    }
  }
  etas_.clear();
  factored_ = lu_.factor(m_, cols);
  return factored_;
}

void DualSimplex::ftran(Eigen::VectorXd& v) const {
  lu_.ftran(v.data());
  for (const auto& e : etas_) {
    const double xr = v[e.r] / e.pivot;
    if (xr != 0.0) {
      for (const auto& [i, a] : e.col) v[i] -= a * xr;
    }
    v[e.r] = xr;
  }
}

void DualSimplex::btran(Eigen::VectorXd& v) const {
  for (auto it = etas_.rbegin(); it != etas_.rend(); ++it) {
    double s = v[it->r];
    for (const auto& [i, a] : it->col) s -= a * v[i];
    v[it->r] = s / it->pivot;
  }
  lu_.btran(v.data());
}

void DualSimplex::compute_primal() {
  for (int j = 0; j < n_ + m_; ++j) {
    if (status_[j] == kAtLower) x_[j] = lo_[j];
    if (status_[j] == kAtUpper) x_[j] = hi_[j];
  }
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(m_);
  for (int j = 0; j < n_ + m_; ++j) {
    if (status_[j] != kBasic && x_[j] != 0.0) add_column(j, -x_[j], rhs);
  }
  ftran(rhs);
  for (int i = 0; i < m_; ++i) x_[head_[i]] = rhs[i];
}

void DualSimplex::compute_duals() {
  Eigen::VectorXd y(m_);
  for (int i = 0; i < m_; ++i) y[i] = c_[head_[i]];
  btran(y);
  for (int j = 0; j < n_ + m_; ++j) d_[j] = status_[j] == kBasic ? 0.0 : c_[j] - column_dot(j, y);
}

void DualSimplex::restore_dual_feasibility() {
  for (int j = 0; j < n_ + m_; ++j) {
    if (status_[j] == kBasic || lo_[j] == hi_[j]) continue;
    if (status_[j] == kAtLower && d_[j] < -opt_.dual_tol) {
      status_[j] = kAtUpper;
    } else if (status_[j] == kAtUpper && d_[j] > opt_.dual_tol) {
      status_[j] = kAtLower;
    }
  }
}

LpResult DualSimplex::solve() {
  LpResult res;
  const int nt = n_ + m_;
  if (head_.empty() && m_ > 0) {
    head_.resize(m_);
    std::fill(pos_.begin(), pos_.end(), -1);
    for (int i = 0; i < m_; ++i) {
      head_[i] = n_ + i;
      pos_[n_ + i] = i;
      status_[n_ + i] = kBasic;
    }
    for (int j = 0; j < n_; ++j) status_[j] = c_[j] >= 0.0 ? kAtLower : kAtUpper;
    factored_ = false;
  }
  if (m_ > 0 && !factored_ && !refactor()) {
    // Singular warm start: fall back to the slack basis.
    head_.clear();
    return solve();
  }

  int iters = 0;
  LpStatus st = LpStatus::kIterationLimit;
  if (m_ == 0) {
    for (int j = 0; j < n_; ++j) status_[j] = c_[j] >= 0.0 ? kAtLower : kAtUpper;
    for (int j = 0; j < n_; ++j) x_[j] = status_[j] == kAtLower ? lo_[j] : hi_[j];
    std::fill(d_.begin(), d_.end(), 0.0);
    for (int j = 0; j < n_; ++j) d_[j] = c_[j];
    st = LpStatus::kOptimal;
  } else {
    compute_duals();
    restore_dual_feasibility();
    compute_primal();
    dse_.assign(m_, 1.0);
    st = iterate(iters);
  }
  res.iterations = iters;

  if (st == LpStatus::kOptimal) {
    for (int j = 0; j < nt; ++j) {
      if (status_[j] == kBasic) continue;
      if ((status_[j] == kAtLower && art_lo_[j]) || (status_[j] == kAtUpper && art_hi_[j])) {
        st = LpStatus::kUnbounded;
      }
    }
  }
  res.status = st;
  res.x.resize(n_);
  res.reduced_costs.resize(n_);
  for (int j = 0; j < n_; ++j) {
    res.x[j] = x_[j] * col_scale_[j];
    res.reduced_costs[j] = d_[j] / col_scale_[j];
  }
  res.row_activity.resize(m_);
  res.duals.resize(m_);
  for (int i = 0; i < m_; ++i) {
    res.row_activity[i] = x_[n_ + i] / row_scale_[i];
    res.duals[i] = d_[n_ + i] * row_scale_[i];
    if (status_[n_ + i] == kBasic) res.duals[i] = 0.0;
  }
  double f = offset_;
  for (int j = 0; j < n_; ++j) f += c_orig_[j] / col_scale_[j] * res.x[j];
  res.objective = f;
  return res;
}

LpStatus DualSimplex::iterate(int& iters) {
  const int nt = n_ + m_;
  Eigen::VectorXd rho(m_), alpha_q(m_), tau(m_), work(m_);
  std::vector<double> alpha_row(nt, 0.0);
  struct Cand {
    int j;
    double ratio;
    double abar;
  };
  std::vector<Cand> cand;
  int since_refactor = 0;
  int degenerate_run = 0;
  Rng rng(12345);

  auto infeas = [&](int i, double* amount) -> int {
    const int j = head_[i];
    const double v = x_[j];
    const double tl = opt_.primal_tol * (1.0 + std::abs(lo_[j]));
    const double tu = opt_.primal_tol * (1.0 + std::abs(hi_[j]));
    if (v < lo_[j] - tl) {
      *amount = lo_[j] - v;
      return -1;
    }
    if (v > hi_[j] + tu) {
      *amount = v - hi_[j];
      return 1;
    }
    return 0;
  };

  for (;;) {
    if (iters >= opt_.max_iterations) return LpStatus::kIterationLimit;
    if (since_refactor >= opt_.refactor_interval) {
      if (!refactor()) return LpStatus::kNumerical;
      compute_duals();
      restore_dual_feasibility();
      compute_primal();
      since_refactor = 0;
    }

    // Pricing: dual steepest edge.
    int r = -1, dir = 0;
    double best = 0.0;
    for (int i = 0; i < m_; ++i) {
      double amt;
      const int s = infeas(i, &amt);
      if (s == 0) continue;
      const double score = amt * amt / dse_[i];
      if (score > best) {
        best = score;
        r = i;
        dir = s;
      }
    }
    if (r < 0) {
      if (perturbed_) {
        // Remove the cost perturbation and clean up.
        c_ = c_orig_;
        perturbed_ = false;
        if (!refactor()) return LpStatus::kNumerical;
        compute_duals();
        restore_dual_feasibility();
        compute_primal();
        since_refactor = 0;
        continue;
      }
      if (since_refactor > 0) {
        // Confirm on fresh factors; updated values drift.
        if (!refactor()) return LpStatus::kNumerical;
        compute_duals();
        restore_dual_feasibility();
        compute_primal();
        since_refactor = 0;
        continue;
      }
      return LpStatus::kOptimal;
    }
    const int p = head_[r];
    double delta = 0.0;
    infeas(r, &delta);

    rho.setZero();
    rho[r] = 1.0;
    btran(rho);

    // Pivot row (row-wise, skipping zero entries of rho) and ratio candidates.
    std::fill(alpha_row.begin(), alpha_row.begin() + n_, 0.0);
    for (int i = 0; i < m_; ++i) {
      const double ri = rho[i];
      alpha_row[n_ + i] = -ri;
      if (ri == 0.0) continue;
      for (RowMajor::InnerIterator it(At_, i); it; ++it) alpha_row[it.col()] += ri * it.value();
    }
    cand.clear();
    for (int j = 0; j < nt; ++j) {
      if (status_[j] == kBasic || lo_[j] == hi_[j]) continue;
      const double a = alpha_row[j];
      const double abar = dir * a;
      if (status_[j] == kAtLower && abar > opt_.pivot_tol) {
        cand.push_back({j, std::max(d_[j], 0.0) / abar, abar});
      } else if (status_[j] == kAtUpper && abar < -opt_.pivot_tol) {
        cand.push_back({j, std::min(d_[j], 0.0) / abar, abar});
      }
    }
    if (cand.empty()) return LpStatus::kInfeasible;
    std::sort(cand.begin(), cand.end(), [](const Cand& a, const Cand& b) {
      return a.ratio < b.ratio || (a.ratio == b.ratio && a.j < b.j);
    });

    // Bound-flipping ratio test with Harris-style tie-breaking.
    double slope = delta;
    size_t k = 0;
    std::vector<int> flips;
    int q = -1;
    double t = 0.0;
    while (k < cand.size()) {
      const Cand& c = cand[k];
      if (boxed(c.j)) {
        const double drop = std::abs(c.abar) * (hi_[c.j] - lo_[c.j]);
        if (slope - drop > 0.0) {
          slope -= drop;
          flips.push_back(c.j);
          ++k;
          continue;
        }
      }
      double bound = kInfinity;
      for (size_t i = k; i < cand.size(); ++i) {
        bound = std::min(bound, (std::abs(d_[cand[i].j]) + opt_.dual_tol) / std::abs(cand[i].abar));
        if (cand[i].ratio > bound) break;
      }
      double best_a = 0.0;
      for (size_t i = k; i < cand.size() && cand[i].ratio <= bound; ++i) {
        if (std::abs(cand[i].abar) > best_a) {
          best_a = std::abs(cand[i].abar);
          q = cand[i].j;
          t = cand[i].ratio;
        }
      }
      if (q < 0) {
        q = c.j;
        t = c.ratio;
      }
      break;
    }
    if (q < 0) return LpStatus::kInfeasible;
    // Flips past the chosen entering ratio are undone.
    std::erase_if(flips, [&](int j) { return j == q; });

    // FTRAN entering column and check against the pivot row.
    alpha_q.setZero();
    add_column(q, 1.0, alpha_q);
    ftran(alpha_q);
    const double piv = alpha_q[r];
    if (std::abs(piv) < 1e-11 || std::abs(piv - alpha_row[q]) > 1e-6 * (1.0 + std::abs(piv))) {
      if (since_refactor == 0) return LpStatus::kNumerical;
      since_refactor = opt_.refactor_interval;
      continue;
    }

    // Dual update.
    t = std::max(t, 0.0);
    const double theta_d = dir * t;
    if (theta_d != 0.0) {
      for (int j = 0; j < nt; ++j) {
        if (status_[j] != kBasic && lo_[j] != hi_[j]) d_[j] -= theta_d * alpha_row[j];
      }
    }
    d_[q] = 0.0;
    d_[p] = -theta_d;

    // Bound flips.
    if (!flips.empty()) {
      work.setZero();
      for (int j : flips) {
        const double step = status_[j] == kAtLower ? hi_[j] - lo_[j] : lo_[j] - hi_[j];
        status_[j] = status_[j] == kAtLower ? kAtUpper : kAtLower;
        x_[j] += step;
        add_column(j, step, work);
      }
      ftran(work);
      for (int i = 0; i < m_; ++i) x_[head_[i]] -= work[i];
    }

    // Primal update.
    const double target = dir > 0 ? hi_[p] : lo_[p];
    const double theta_p = (x_[p] - target) / piv;
    for (int i = 0; i < m_; ++i) {
      if (alpha_q[i] != 0.0) x_[head_[i]] -= theta_p * alpha_q[i];
    }
    x_[q] += theta_p;
    x_[p] = target;

    // Dual steepest-edge weights.
    tau = rho;
    ftran(tau);
    const double wr = rho.squaredNorm();
    for (int i = 0; i < m_; ++i) {
      if (i == r || alpha_q[i] == 0.0) continue;
      const double ratio = alpha_q[i] / piv;
      dse_[i] = std::max(dse_[i] - 2.0 * ratio * tau[i] + ratio * ratio * wr, 1e-8);
    }
    dse_[r] = std::max(wr / (piv * piv), 1e-8);

    // Basis change.
    Eta e;
    e.r = r;
    e.pivot = piv;
    for (int i = 0; i < m_; ++i) {
      if (i != r && alpha_q[i] != 0.0) e.col.emplace_back(i, alpha_q[i]);
    }
    etas_.push_back(std::move(e));
    head_[r] = q;
    pos_[q] = r;
    pos_[p] = -1;
    status_[q] = kBasic;
    status_[p] = dir > 0 ? kAtUpper : kAtLower;
    if (lo_[p] == hi_[p]) status_[p] = kAtLower;
    ++iters;
    ++since_refactor;

    // Stalling on dual degeneracy: perturb costs once.
    degenerate_run = t <= 1e-12 ? degenerate_run + 1 : 0;
    if (degenerate_run > 200 && !perturbed_) {
      perturbed_ = true;
      for (int j = 0; j < n_; ++j) {
        const double eps = 1e-7 * (1.0 + std::abs(c_[j])) * (0.5 + rng.uniform());
        if (status_[j] == kAtLower) c_[j] += eps;
        if (status_[j] == kAtUpper) c_[j] -= eps;
      }
      degenerate_run = 0;
      since_refactor = opt_.refactor_interval;
    }
  }
}

LpResult solve_lp(const LpProblem& p, const LpOptions& opt) {
  DualSimplex s(p, opt);
  return s.solve();
}

}  // namespace fsuc
