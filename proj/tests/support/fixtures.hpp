#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "fsuc/milp_model.hpp"
#include "fsuc/sysmodel.hpp"
#include "tableau.hpp"

#ifndef FSUC_DATA_DIR
#define FSUC_DATA_DIR "data"
#endif

namespace fixtures {

inline std::string data(const std::string& file) { return std::string(FSUC_DATA_DIR) + "/" + file; }

inline fsuc::SystemCase benchmark() { return fsuc::load_case(data("benchmark_case.json")); }

// Two cheap-but-slow and dear-but-fast units, one data center, short horizon.
inline fsuc::SystemCase small_case(int horizon = 3) {
  fsuc::SystemCase c;
  c.name = "small";
  fsuc::Generator a;
  a.id = "A";
  a.p_min = 50;
  a.p_max = 200;
  a.ramp_up = a.ramp_down = 120;
  a.min_up = 2;
  a.min_down = 2;
  a.inertia_const = 5;
  a.cost_quad = 0.01;
  a.cost_lin = 10;
  a.cost_fix = 300;
  a.ffr_capacity = 20;
  a.ffr_start = 0.5;
  a.ffr_full = 4;
  fsuc::Generator b = a;
  b.id = "B";
  b.p_min = 20;
  b.p_max = 120;
  b.ramp_up = b.ramp_down = 120;
  b.min_up = b.min_down = 1;
  b.inertia_const = 3;
  b.cost_quad = 0.02;
  b.cost_lin = 25;
  b.cost_fix = 100;
  b.ffr_capacity = 30;
  c.generators = {a, b};
  c.wind_capacity_mw = 80;
  fsuc::DataCenter dc;
  dc.id = "D";
  dc.peak_mw = 60;
  dc.flexible_share = 0.5;
  dc.ffr_start = 0.2;
  dc.ffr_full = 1.2;
  dc.gamma_lin = 2;
  dc.gamma_quad = 0.01;
  c.data_centers = {dc};
  c.base_load_mw = 200;
  c.horizon = horizon;
  c.damping = 0.01;
  c.dP_L_max = 40;
  c.load_inertia_const = 2;
  c.rocof_max = 1;
  c.nadir_limit_hz = 49.2;
  c.deadband_hz = 0.015;
  c.qss_xi = 0.5;
  c.qss_lambda = 0.01;
  return c;
}

inline fsuc::Profiles flat_profiles(int horizon, double alpha, double wind, double load) {
  fsuc::Profiles p;
  p.dc_alpha.assign(horizon, alpha);
  p.wind_cf.assign(horizon, wind);
  p.load_factor.assign(horizon, load);
  return p;
}

// LP optimum of a MILP with every integer column fixed by `fixed` (column,
// value), solved by the dense tableau. Returns +inf when infeasible.
inline double tableau_lp(const fsuc::MilpModel& m, const std::vector<std::pair<int, double>>& fixed) {
  const int n = m.num_vars();
  std::vector<double> lo(n), hi(n);
  for (int j = 0; j < n; ++j) lo[j] = m.vars()[j].lower, hi[j] = m.vars()[j].upper;
  for (auto [j, v] : fixed) lo[j] = hi[j] = v;
  // x = lo + x' for finite lo; free columns split into x+ - x-.
  std::vector<int> plus(n), minus(n, -1);
  int nn = 0;
  for (int j = 0; j < n; ++j) {
    plus[j] = nn++;
    if (!std::isfinite(lo[j])) minus[j] = nn++;
  }
  std::vector<double> c(nn, 0.0);
  double c0 = m.objective_offset;
  for (int j = 0; j < n; ++j) {
    const double cj = m.vars()[j].cost;
    c[plus[j]] = cj;
    if (minus[j] >= 0) c[minus[j]] = -cj;
    else c0 += cj * lo[j];
  }
  std::vector<oracle::TabRow> rows;
  for (const auto& con : m.cons()) {
    std::vector<double> a(nn, 0.0);
    double b = con.rhs;
    for (const auto& t : con.terms) {
      a[plus[t.var]] += t.coef;
      if (minus[t.var] >= 0) a[minus[t.var]] -= t.coef;
      else b -= t.coef * lo[t.var];
    }
    const int sense = con.sense == fsuc::Sense::kLe ? -1 : con.sense == fsuc::Sense::kGe ? 1 : 0;
    rows.push_back({a, sense, b});
  }
  for (int j = 0; j < n; ++j) {
    if (!std::isfinite(hi[j])) continue;
    std::vector<double> a(nn, 0.0);
    a[plus[j]] = 1.0;
    if (minus[j] >= 0) {
      a[minus[j]] = -1.0;
      rows.push_back({a, -1, hi[j]});
    } else {
      rows.push_back({a, -1, hi[j] - lo[j]});
    }
  }
  const auto r = oracle::tableau_simplex(c, rows);
  if (r.status != oracle::TabStatus::kOptimal) return INFINITY;
  return r.objective + c0;
}

}  // namespace fixtures
