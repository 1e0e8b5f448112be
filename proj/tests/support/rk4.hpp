#pragma once

// Fixed-step RK4 integration of the swing equation, written independently of
// the closed-form simulator.

#include <algorithm>
#include <cmath>
#include <vector>

namespace oracle {

struct SwingParams {
  double h = 0.0;   // MW*s/Hz
  double dp = 0.0;  // MW
  double r_dc = 0.0, r_cg = 0.0;
  double t_a = 0.0, t_b = 0.0, t_c = 1.0, t_d = 1.0;
  double d = 0.0, p_d = 0.0;
  double deadband = 0.0;
};

inline double ramp(double t, double sta, double t0, double t1) {
  if (t <= t0) return 0.0;
  if (t >= t1) return sta;
  return sta * (t - t0) / (t1 - t0);
}

struct Rk4Run {
  std::vector<double> t, y;
  double t_db = 0.0;
};

// Integrates to t_end with step dt. The deadband crossing is located by
// bisection on the step length; afterwards steps are cut at every ramp
// breakpoint so the forcing is smooth within each step.
inline Rk4Run rk4_swing(const SwingParams& p, double dt, double t_end) {
  const double k = p.d * p.p_d;
  double t_db = p.deadband > 0.0 ? -1.0 : 0.0;
  auto rhs = [&](double t, double y) {
    double f = -p.dp;
    if (t_db >= 0.0) {
      f += ramp(t - t_db, p.r_dc, p.t_a, p.t_c) + ramp(t - t_db, p.r_cg, p.t_b, p.t_d);
    }
    return (f - k * y) / (2.0 * p.h);
  };
  auto step = [&](double t, double y, double s) {
    const double k1 = rhs(t, y);
    const double k2 = rhs(t + s / 2, y + s / 2 * k1);
    const double k3 = rhs(t + s / 2, y + s / 2 * k2);
    const double k4 = rhs(t + s, y + s * k3);
    return y + s / 6 * (k1 + 2 * k2 + 2 * k3 + k4);
  };
  Rk4Run out;
  double t = 0.0, y = 0.0;
  out.t.push_back(t);
  out.y.push_back(y);
  while (t < t_end - 1e-12) {
    double s = std::min(dt, t_end - t);
    if (t_db < 0.0) {
      const double y1 = step(t, y, s);
      if (y1 <= -p.deadband) {
        double lo = 0.0, hi = s;
        for (int i = 0; i < 80; ++i) {
          const double mid = 0.5 * (lo + hi);
          (step(t, y, mid) <= -p.deadband ? hi : lo) = mid;
        }
        y = step(t, y, hi);
        t += hi;
        t_db = t;
        out.t.push_back(t);
        out.y.push_back(y);
        continue;
      }
    } else {
      for (double b : {p.t_a, p.t_b, p.t_c, p.t_d}) {
        const double tb = t_db + b;
        if (tb > t + 1e-12 && tb < t + s) s = tb - t;
      }
    }
    y = step(t, y, s);
    t += s;
    out.t.push_back(t);
    out.y.push_back(y);
  }
  out.t_db = t_db < 0.0 ? INFINITY : t_db;
  return out;
}

// Linear interpolation of the RK4 path.
inline double rk4_at(const Rk4Run& r, double t) {
  auto it = std::lower_bound(r.t.begin(), r.t.end(), t);
  if (it == r.t.begin()) return r.y.front();
  if (it == r.t.end()) return r.y.back();
  const size_t i = static_cast<size_t>(it - r.t.begin());
  const double w = (t - r.t[i - 1]) / (r.t[i] - r.t[i - 1]);
  return r.y[i - 1] + w * (r.y[i] - r.y[i - 1]);
}

}  // namespace oracle
