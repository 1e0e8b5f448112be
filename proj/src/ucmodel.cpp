#include "fsuc/ucmodel.hpp"

#include <algorithm>
#include <cmath>

#include "fsuc/csv.hpp"
#include "fsuc/error.hpp"

namespace fsuc {

double PiecewiseCost::eval(double p) const {
  double f = fixed;
  double left = p;
  for (size_t k = 0; k < slopes.size() && left > 0.0; ++k) {
    const double s = std::min(left, width);
    f += slopes[k] * s;
    left -= s;
  }
  return f;
}

PiecewiseCost piecewise_cost(double quad, double lin, double fixed, double p_max, int K) {
  if (quad < 0.0) throw DomainError("non-convex cost");
  if (K < 1) throw DomainError("piecewise cost needs at least one segment");
  if (!(p_max > 0.0)) throw DomainError("piecewise cost needs p_max > 0");
  if (quad == 0.0) K = 1;
  PiecewiseCost pc;
  pc.fixed = fixed;
  pc.width = p_max / K;
  for (int k = 0; k <= K; ++k) pc.breakpoints.push_back(k == K ? p_max : k * pc.width);
  for (int k = 0; k < K; ++k) {
    const double a = pc.breakpoints[k], b = pc.breakpoints[k + 1];
    // Chord of quad*P^2 + lin*P over [a, b].
    pc.slopes.push_back(quad * (a + b) + lin);
  }
  return pc;
}

namespace {

std::string nm(const std::string& base, const std::string& who, int t) {
  return base + "[" + who + "," + std::to_string(t) + "]";
}
std::string nm(const std::string& base, int t) { return base + "[" + std::to_string(t) + "]"; }

}  // namespace

UcModel build_uc(const SystemCase& c, const Profiles& prof, const LinearSafetyRegion* region,
                 const UcOptions& opt) {
  validate(c);
  validate(prof, c.horizon);
  if (opt.flex_share && (*opt.flex_share < 0.0 || *opt.flex_share > 1.0)) {
    throw ValidationError("flex_share", "must lie in [0, 1]");
  }
  if (opt.pwl_segments < 1) throw ValidationError("pwl_segments", "must be >= 1");
  if (region) {
    const std::vector<std::string> want{"r_gen_mw", "r_dc_mw", "h_sys"};
    if (region->features != want) throw ValidationError("region.features", "expected (r_gen_mw, r_dc_mw, h_sys)");
    if (region->halfspaces.empty()) throw ValidationError("region.halfspaces", "empty region");
  }

  const int T = c.horizon;
  const int G = static_cast<int>(c.generators.size());
  const int nd = static_cast<int>(c.data_centers.size());
  const double hours = c.period_hours;

  double fleet = c.conventional_capacity();
  for (int t = 0; t < T; ++t) {
    const double net = dc_load_at(c, prof, t) + other_load_at(c, prof, t);
    if (net > fleet + wind_available_at(c, prof, t) + 1e-9) {
      throw ValidationError("period " + std::to_string(t), "demand exceeds fleet plus wind");
    }
  }

  UcModel out;
  out.sys = c;
  out.profiles = prof;
  out.has_region = region != nullptr;
  MilpModel& m = out.milp;
  m.name = "FSUC";
  UcIndex& ix = out.idx;
  ix.horizon = T;

  for (const auto& g : c.generators) {
    out.gen_cost.push_back(piecewise_cost(g.cost_quad, g.cost_lin, g.cost_fix, g.p_max, opt.pwl_segments));
  }
  for (const auto& d : c.data_centers) {
    out.dc_cost.push_back(piecewise_cost(d.gamma_quad, d.gamma_lin, 0.0, d.peak_mw, opt.pwl_segments));
  }

  // Columns, commitment binaries first.
  ix.u.assign(G, std::vector<int>(T));
  for (int i = 0; i < G; ++i) {
    for (int t = 0; t < T; ++t) {
      ix.u[i][t] = m.add_var(nm("u", c.generators[i].id, t), VarKind::kBinary, 0.0, 1.0,
                             out.gen_cost[i].fixed * hours);
    }
  }
  double ffr_total = 0.0, h_all = 0.0;
  for (const auto& g : c.generators) {
    ffr_total += g.ffr_capacity;
    h_all += g.inertia_const * g.p_max;
  }
  h_all = (h_all - c.dP_L_max * c.load_inertia_const) / c.f0;

  ix.p.assign(G, std::vector<int>(T));
  ix.r.assign(G, std::vector<int>(T));
  ix.v.assign(G, std::vector<int>(T, -1));
  ix.w.assign(G, std::vector<int>(T, -1));
  ix.seg.assign(G, std::vector<std::vector<int>>(T));
  for (int i = 0; i < G; ++i) {
    const auto& g = c.generators[i];
    for (int t = 0; t < T; ++t) {
      ix.p[i][t] = m.add_var(nm("p", g.id, t), VarKind::kContinuous, 0.0, g.p_max);
      ix.r[i][t] = m.add_var(nm("rg", g.id, t), VarKind::kContinuous, 0.0, g.ffr_capacity);
      for (size_t k = 0; k < out.gen_cost[i].slopes.size(); ++k) {
        ix.seg[i][t].push_back(m.add_var(nm("s" + std::to_string(k), g.id, t), VarKind::kContinuous, 0.0,
                                         out.gen_cost[i].width, out.gen_cost[i].slopes[k] * hours));
      }
      if (t > 0) {
        ix.v[i][t] = m.add_var(nm("v", g.id, t), VarKind::kContinuous, 0.0, 1.0);
        ix.w[i][t] = m.add_var(nm("w", g.id, t), VarKind::kContinuous, 0.0, 1.0);
      }
    }
  }

  out.dc_cap.assign(nd, std::vector<double>(T));
  ix.r_dc_unit.assign(nd, std::vector<int>(T));
  ix.dc_seg.assign(nd, std::vector<std::vector<int>>(T));
  double dc_peak = 0.0;
  for (int d = 0; d < nd; ++d) {
    const auto& dc = c.data_centers[d];
    dc_peak += dc.peak_mw;
    const double phi = opt.flex_share.value_or(dc.flexible_share);
    for (int t = 0; t < T; ++t) {
      out.dc_cap[d][t] = phi * prof.dc_alpha[t] * dc.peak_mw;
      ix.r_dc_unit[d][t] = m.add_var(nm("rd", dc.id, t), VarKind::kContinuous, 0.0, dc.peak_mw);
      for (size_t k = 0; k < out.dc_cost[d].slopes.size(); ++k) {
        ix.dc_seg[d][t].push_back(m.add_var(nm("q" + std::to_string(k), dc.id, t), VarKind::kContinuous, 0.0,
                                            out.dc_cost[d].width, out.dc_cost[d].slopes[k] * hours));
      }
    }
  }

  // Aggregates over (R_gen, R_DC, H), clipped to the region's training box.
  double lo[3] = {0.0, 0.0, 0.0};
  double hi[3] = {ffr_total, dc_peak, std::max(h_all, 0.0)};
  if (region && opt.region_box && region->box_lo.size() == 3 && region->box_hi.size() == 3) {
    for (int k = 0; k < 3; ++k) {
      lo[k] = std::max(lo[k], region->box_lo[k]);
      hi[k] = std::min(hi[k], region->box_hi[k]);
      if (lo[k] > hi[k]) throw ValidationError("region.box", "does not intersect the system's range");
    }
  }
  ix.curt.resize(T);
  ix.r_dc.resize(T);
  ix.r_gen.resize(T);
  ix.h.resize(T);
  for (int t = 0; t < T; ++t) {
    ix.curt[t] = m.add_var(nm("curt", t), VarKind::kContinuous, 0.0, wind_available_at(c, prof, t));
    ix.r_gen[t] = m.add_var(nm("Rgen", t), VarKind::kContinuous, lo[0], hi[0]);
    ix.r_dc[t] = m.add_var(nm("Rdc", t), VarKind::kContinuous, lo[1], hi[1]);
    ix.h[t] = m.add_var(nm("H", t), VarKind::kContinuous, lo[2], hi[2]);
  }

  // Disjunctive leaf selectors.
  if (region && region->mode == RegionMode::kDisjunctive) {
    ix.z.assign(region->leaves.size(), std::vector<int>(T));
    for (size_t l = 0; l < region->leaves.size(); ++l) {
      for (int t = 0; t < T; ++t) {
        ix.z[l][t] = m.add_var(nm("z" + std::to_string(l), t), VarKind::kBinary, 0.0, 1.0);
      }
    }
  }

  // Rows.
  for (int t = 0; t < T; ++t) {
    const double wind = wind_available_at(c, prof, t);
    const double demand = dc_load_at(c, prof, t) + other_load_at(c, prof, t);
    std::vector<Term> bal;
    for (int i = 0; i < G; ++i) bal.push_back({ix.p[i][t], 1.0});
    bal.push_back({ix.curt[t], -1.0});
    m.add_con(nm("bal", t), bal, Sense::kEq, demand - wind);

    for (int i = 0; i < G; ++i) {
      const auto& g = c.generators[i];
      const int u = ix.u[i][t], p = ix.p[i][t], r = ix.r[i][t];
      m.add_con(nm("pmax", g.id, t), {{p, 1.0}, {u, -g.p_max}}, Sense::kLe, 0.0);
      m.add_con(nm("pmin", g.id, t), {{p, 1.0}, {u, -g.p_min}}, Sense::kGe, 0.0);
      std::vector<Term> seg{{p, 1.0}};
      for (int s : ix.seg[i][t]) seg.push_back({s, -1.0});
      m.add_con(nm("pseg", g.id, t), seg, Sense::kEq, 0.0);
      m.add_con(nm("ffr", g.id, t), {{r, 1.0}, {u, -g.ffr_capacity}}, Sense::kLe, 0.0);
      m.add_con(nm("head", g.id, t), {{r, 1.0}, {p, 1.0}, {u, -g.p_max}}, Sense::kLe, 0.0);

      if (t == 0) continue;
      const int u0 = ix.u[i][t - 1], p0 = ix.p[i][t - 1], v = ix.v[i][t], w = ix.w[i][t];
      // v and w are the start-up / shut-down indicators implied by u.
      m.add_con(nm("sw", g.id, t), {{v, 1.0}, {w, -1.0}, {u, -1.0}, {u0, 1.0}}, Sense::kEq, 0.0);
      m.add_con(nm("vlim", g.id, t), {{v, 1.0}, {u0, 1.0}}, Sense::kLe, 1.0);
      m.add_con(nm("wlim", g.id, t), {{w, 1.0}, {u0, -1.0}}, Sense::kLe, 0.0);
      // Ramps with a start-up / shut-down allowance of max(p_min, ramp).
      const double su = std::max(g.p_min, g.ramp_up), sd = std::max(g.p_min, g.ramp_down);
      m.add_con(nm("rup", g.id, t), {{p, 1.0}, {p0, -1.0}, {u0, -g.ramp_up}, {v, -su}}, Sense::kLe, 0.0);
      m.add_con(nm("rdn", g.id, t), {{p0, 1.0}, {p, -1.0}, {u, -g.ramp_down}, {w, -sd}}, Sense::kLe, 0.0);
      if (g.min_up > 1) {
        std::vector<Term> up{{u, -1.0}};
        for (int tau = std::max(1, t - g.min_up + 1); tau <= t; ++tau) up.push_back({ix.v[i][tau], 1.0});
        m.add_con(nm("mup", g.id, t), up, Sense::kLe, 0.0);
      }
      if (g.min_down > 1) {
        std::vector<Term> dn{{u, 1.0}};
        for (int tau = std::max(1, t - g.min_down + 1); tau <= t; ++tau) dn.push_back({ix.w[i][tau], 1.0});
        m.add_con(nm("mdn", g.id, t), dn, Sense::kLe, 1.0);
      }
    }

    std::vector<Term> rdc{{ix.r_dc[t], 1.0}};
    for (int d = 0; d < nd; ++d) {
      const auto& dc = c.data_centers[d];
      const int r = ix.r_dc_unit[d][t];
      m.add_con(nm("dccap", dc.id, t), {{r, 1.0}}, Sense::kLe, out.dc_cap[d][t]);
      std::vector<Term> seg{{r, 1.0}};
      for (int s : ix.dc_seg[d][t]) seg.push_back({s, -1.0});
      m.add_con(nm("dseg", dc.id, t), seg, Sense::kEq, 0.0);
      rdc.push_back({r, -1.0});
    }
    m.add_con(nm("Rdcsum", t), rdc, Sense::kEq, 0.0);

    std::vector<Term> rg{{ix.r_gen[t], 1.0}};
    for (int i = 0; i < G; ++i) rg.push_back({ix.r[i][t], -1.0});
    m.add_con(nm("Rgensum", t), rg, Sense::kEq, 0.0);

    std::vector<Term> h{{ix.h[t], c.f0}};
    for (int i = 0; i < G; ++i) {
      h.push_back({ix.u[i][t], -c.generators[i].inertia_const * c.generators[i].p_max});
    }
    m.add_con(nm("Hdef", t), h, Sense::kEq, -c.dP_L_max * c.load_inertia_const);

    if (opt.rocof) m.add_con(nm("rocof", t), {{ix.h[t], 1.0}}, Sense::kGe, c.dP_L_max / (2.0 * c.rocof_max));
    if (opt.qss) {
      m.add_con(nm("qss", t), {{ix.r_gen[t], 1.0}, {ix.r_dc[t], 1.0}}, Sense::kGe,
                c.dP_L_max - c.qss_xi * c.peak_demand() * c.qss_lambda);
    }

    if (!region) continue;
    const int x3[3] = {ix.r_gen[t], ix.r_dc[t], ix.h[t]};
    auto facet = [&](const Halfspace& hs, std::vector<Term>& terms) {
      for (int k = 0; k < 3; ++k) terms.push_back({x3[k], hs.theta[k]});
    };
    int rows = 0;
    if (region->mode == RegionMode::kConjunctive) {
      for (size_t k = 0; k < region->halfspaces.size(); ++k) {
        std::vector<Term> terms;
        facet(region->halfspaces[k], terms);
        m.add_con(nm("nadir" + std::to_string(k), t), terms, Sense::kGe, -region->halfspaces[k].bias);
        ++rows;
      }
    } else {
      std::vector<Term> pick;
      for (size_t l = 0; l < region->leaves.size(); ++l) {
        pick.push_back({ix.z[l][t], 1.0});
        for (int k : region->leaves[l]) {
          const Halfspace& hs = region->halfspaces[k];
          // Smallest value of the facet over the variable box.
          double low = hs.bias;
          for (int a = 0; a < 3; ++a) low += hs.theta[a] * (hs.theta[a] > 0 ? lo[a] : hi[a]);
          const double big_m = std::max(0.0, -low);
          std::vector<Term> terms;
          facet(hs, terms);
          terms.push_back({ix.z[l][t], -big_m});
          m.add_con(nm("nadir" + std::to_string(l) + "_" + std::to_string(k), t), terms, Sense::kGe,
                    -hs.bias - big_m);
          ++rows;
        }
      }
      m.add_con(nm("leaf", t), pick, Sense::kEq, 1.0);
      ++rows;
    }
    ix.nadir_rows_per_period = rows;
  }
  m.validate();
  return out;
}

const char* to_string(UcStatus s) {
  switch (s) {
    case UcStatus::kOptimal: return "optimal";
    case UcStatus::kFeasible: return "feasible";
    case UcStatus::kInfeasible: return "infeasible";
    case UcStatus::kTimeLimit: return "time-limit";
    case UcStatus::kError: return "error";
  }
  return "?";
}

UcSolution extract_solution(const UcModel& m, const SolveResult& r) {
  UcSolution s;
  s.solver = r;
  s.message = r.message;
  switch (r.status) {
    case MilpStatus::kOptimal: s.status = UcStatus::kOptimal; break;
    case MilpStatus::kFeasible:
    case MilpStatus::kNodeLimit: s.status = UcStatus::kFeasible; break;
    case MilpStatus::kTimeLimit: s.status = UcStatus::kTimeLimit; break;
    case MilpStatus::kInfeasible: s.status = UcStatus::kInfeasible; return s;
    default: s.status = UcStatus::kError; return s;
  }
  if (r.x.size() != static_cast<size_t>(m.milp.num_vars())) {
    // A time limit without an incumbent keeps its status; anything else is an error.
    if (s.status != UcStatus::kTimeLimit || !r.x.empty()) s.status = UcStatus::kError;
    s.message = "solver returned no solution vector";
    return s;
  }
  std::vector<double> x = r.x;
  for (int j = 0; j < m.milp.num_vars(); ++j) {
    if (!m.milp.vars()[j].is_integer()) continue;
    const double rounded = std::round(x[j]);
    if (std::abs(x[j] - rounded) > 1e-6) {
      throw Error("integrality violation on " + m.milp.vars()[j].name + ": " + csv::format_double(x[j]));
    }
    x[j] = rounded;
  }
  const auto& ix = m.idx;
  const int G = static_cast<int>(ix.u.size());
  const int T = ix.horizon;
  s.commitment.assign(G, std::vector<int>(T));
  s.dispatch.assign(G, std::vector<double>(T));
  s.gen_ffr.assign(G, std::vector<double>(T));
  for (int i = 0; i < G; ++i) {
    for (int t = 0; t < T; ++t) {
      s.commitment[i][t] = static_cast<int>(x[ix.u[i][t]]);
      s.dispatch[i][t] = x[ix.p[i][t]];
      s.gen_ffr[i][t] = x[ix.r[i][t]];
    }
  }
  const int nd = static_cast<int>(ix.r_dc_unit.size());
  s.dc_ffr.assign(nd, std::vector<double>(T));
  for (int d = 0; d < nd; ++d) {
    for (int t = 0; t < T; ++t) s.dc_ffr[d][t] = x[ix.r_dc_unit[d][t]];
  }
  for (int t = 0; t < T; ++t) {
    s.curtailment.push_back(x[ix.curt[t]]);
    s.r_dc.push_back(x[ix.r_dc[t]]);
    s.r_gen.push_back(x[ix.r_gen[t]]);
    s.h_sys.push_back(x[ix.h[t]]);
  }
  s.pwl_cost = m.milp.objective(x);
  s.quadratic_cost = quadratic_cost(m, s);
  s.cost_gap = s.quadratic_cost - s.pwl_cost;
  return s;
}

double quadratic_cost(const UcModel& m, const UcSolution& s) {
  const auto& c = m.sys;
  double total = 0.0;
  for (int t = 0; t < m.idx.horizon; ++t) {
    double f = 0.0;
    for (size_t i = 0; i < c.generators.size(); ++i) {
      if (!s.commitment[i][t]) continue;
      const auto& g = c.generators[i];
      const double p = s.dispatch[i][t];
      f += g.cost_quad * p * p + g.cost_lin * p + g.cost_fix;
    }
    for (size_t d = 0; d < c.data_centers.size(); ++d) {
      const auto& dc = c.data_centers[d];
      const double r = s.dc_ffr[d][t];
      f += dc.gamma_lin * r + dc.gamma_quad * r * r;
    }
    total += f * c.period_hours;
  }
  return total;
}

std::vector<PeriodCheck> recheck_security(const SystemCase& c, const UcSolution& s, double dc_ramp_s) {
  std::vector<PeriodCheck> out;
  const int G = static_cast<int>(c.generators.size());
  const int T = static_cast<int>(s.r_gen.size());
  for (int t = 0; t < T; ++t) {
    PeriodCheck pc;
    pc.period = t;
    std::vector<int> u(G);
    for (int i = 0; i < G; ++i) u[i] = s.commitment[i][t];
    // Inertia from the commitment itself, not from the model's H column.
    double h = 0.0;
    try {
      h = system_inertia(c, u);
    } catch (const DomainError&) {
      out.push_back(pc);
      continue;
    }
    if (h > 0.0) {
      pc.rocof = rocof(h, c.dP_L_max);
      pc.rocof_ok = pc.rocof <= c.rocof_max * (1.0 + 1e-9);
      OperatingPoint op{std::max(0.0, s.r_gen[t]), std::max(0.0, s.r_dc[t]), h};
      const auto lab = label_point(scenario_for(c, op, dc_ramp_s), c.nadir_limit_hz);
      pc.nadir_hz = lab.nadir_hz;
      pc.nadir_ok = lab.label == Safety::kSafe;
    }
    // 1e-6 MW absorbs LP round-off on the QSS row.
    pc.qss_ok = check_qss(c, std::max(0.0, s.r_gen[t] + s.r_dc[t]) + 1e-6);
    out.push_back(pc);
  }
  return out;
}

double wind_energy_delivered(const UcModel& m, const UcSolution& s) {
  double e = 0.0;
  for (int t = 0; t < m.idx.horizon; ++t) {
    e += (wind_available_at(m.sys, m.profiles, t) - s.curtailment[t]) * m.sys.period_hours;
  }
  return e;
}

double demand_energy(const UcModel& m) {
  double e = 0.0;
  for (int t = 0; t < m.idx.horizon; ++t) {
    e += (dc_load_at(m.sys, m.profiles, t) + other_load_at(m.sys, m.profiles, t)) * m.sys.period_hours;
  }
  return e;
}

}  // namespace fsuc
