#include "fsuc/freqsim.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "fsuc/csv.hpp"

namespace fsuc {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// (1 - e^{-as}) / a and (as - 1 + e^{-as}) / a^2, stable as a*s -> 0.
double e1(double a, double s) {
  if (a == 0.0) return s;
  return -std::expm1(-a * s) / a;
}

double e2(double a, double s) {
  const double x = a * s;
  if (std::abs(x) < 1e-3) {
    return s * s * (0.5 - x / 6.0 + x * x / 24.0 - x * x * x / 120.0);
  }
  return (x + std::expm1(-x)) / (a * a);
}

}  // namespace

void validate(const FrequencyScenario& s) {
  auto req = [](bool ok, const char* field, const char* what) {
    if (!ok) throw ValidationError(field, what);
  };
  req(std::isfinite(s.h_sys) && s.h_sys > 0.0, "h_sys", "must be > 0");
  req(s.disturbance_mw >= 0.0, "disturbance_mw", "must be >= 0");
  req(s.r_dc_sta >= 0.0, "r_dc_sta", "must be >= 0");
  req(s.r_cg_sta >= 0.0, "r_cg_sta", "must be >= 0");
  req(s.t_a >= 0.0 && s.t_a < s.t_c, "t_a", "need 0 <= t_a < t_c");
  req(s.t_b >= 0.0 && s.t_b < s.t_d, "t_b", "need 0 <= t_b < t_d");
  req(s.damping >= 0.0, "damping", "must be >= 0");
  req(s.demand_mw >= 0.0, "demand_mw", "must be >= 0");
  req(s.deadband_hz >= 0.0, "deadband_hz", "must be >= 0");
}

double system_inertia(const SystemCase& c, std::span<const int> commitment) {
  if (commitment.size() != c.generators.size()) {
    throw DomainError("commitment length " + std::to_string(commitment.size()) +
                      " does not match generator count " + std::to_string(c.generators.size()));
  }
  double stored = 0.0;
  for (size_t g = 0; g < c.generators.size(); ++g) {
    if (commitment[g] != 0) stored += c.generators[g].inertia_const * c.generators[g].p_max;
  }
  const double h = (stored - c.dP_L_max * c.load_inertia_const) / c.f0;
  if (h < 0.0) throw DomainError("non-physical inertia");
  return h;
}

double rocof(double h_sys, double disturbance_mw) {
  if (!(h_sys > 0.0)) throw DomainError("rocof requires h_sys > 0");
  return disturbance_mw / (2.0 * h_sys);
}

double ffr_ramp(double t, double sta, double t_start, double t_full) {
  if (t < t_start) return 0.0;
  if (t >= t_full) return sta;
  return sta * (t - t_start) / (t_full - t_start);
}

// ---------------------------------------------------------------------------

FrequencyResponse::FrequencyResponse(const FrequencyScenario& s) {
  validate(s);
  two_h_ = 2.0 * s.h_sys;
  k_ = s.damping * s.demand_mw;
  const double a = k_ / two_h_;

  // Deadband crossing during the constant-forcing phase.
  if (s.disturbance_mw == 0.0) {
    t_db_ = kInf;
  } else if (s.deadband_hz == 0.0) {
    t_db_ = 0.0;
  } else {
    const double c = s.deadband_hz * two_h_ / s.disturbance_mw;
    if (a == 0.0) {
      t_db_ = c;
    } else if (a * c >= 1.0) {
      t_db_ = kInf;
    } else {
      t_db_ = -std::log1p(-a * c) / a;
    }
  }

  struct Ramp {
    double sta, start, full;
  };
  std::vector<Ramp> ramps;
  if (std::isfinite(t_db_)) {
    ramps.push_back({s.r_dc_sta, t_db_ + s.t_a, t_db_ + s.t_c});
    ramps.push_back({s.r_cg_sta, t_db_ + s.t_b, t_db_ + s.t_d});
  }

  std::vector<double> bounds = {0.0};
  for (const auto& r : ramps) {
    bounds.push_back(r.start);
    bounds.push_back(r.full);
  }
  std::sort(bounds.begin(), bounds.end());
  bounds.erase(std::unique(bounds.begin(), bounds.end()), bounds.end());
  bounds.push_back(kInf);

  auto forcing = [&](double t) {
    double f = -s.disturbance_mw;
    for (const auto& r : ramps) f += ffr_ramp(t, r.sta, r.start, r.full);
    return f;
  };

  double y = 0.0;
  for (size_t i = 0; i + 1 < bounds.size(); ++i) {
    const double t0 = bounds[i];
    const double t1 = bounds[i + 1];
    const double mid = std::isfinite(t1) ? 0.5 * (t0 + t1) : t0 + 1.0;
    double beta = 0.0;
    for (const auto& r : ramps) {
      if (mid >= r.start && mid < r.full) beta += r.sta / (r.full - r.start);
    }
    Piece p{t0, t1, y, forcing(t0), beta};
    pieces_.push_back(p);
    if (std::isfinite(t1)) y = eval(p, t1);
  }
}

double FrequencyResponse::eval(const Piece& p, double t) const {
  const double a = k_ / two_h_;
  const double s = t - p.t0;
  return p.y0 * std::exp(-a * s) + (p.f0 * e1(a, s) + p.beta * e2(a, s)) / two_h_;
}

const FrequencyResponse::Piece& FrequencyResponse::piece_for(double t) const {
  for (const auto& p : pieces_) {
    if (t < p.t1) return p;
  }
  return pieces_.back();
}

double FrequencyResponse::at(double t) const {
  if (t <= 0.0) return 0.0;
  return eval(piece_for(t), t);
}

double FrequencyResponse::slope_at(double t) const {
  const Piece& p = piece_for(std::max(t, 0.0));
  const double y = t <= 0.0 ? 0.0 : eval(p, t);
  const double f = p.f0 + p.beta * (std::max(t, 0.0) - p.t0);
  return (f - k_ * y) / two_h_;
}

void FrequencyResponse::piece_min(const Piece& p, double t_hi, Minimum& best) const {
  auto consider = [&](double v, double t) {
    if (v < best.value) best = {v, t};
  };
  auto slope = [&](double t) {
    const double y = eval(p, t);
    return (p.f0 + p.beta * (t - p.t0) - k_ * y) / two_h_;
  };

  consider(p.y0, p.t0);
  const double end = std::min(p.t1, t_hi);
  const double d0 = slope(p.t0);

  if (!std::isfinite(end)) {
    // Final plateau: forcing is constant, the deviation relaxes
    // monotonically towards f0 / k (or drifts linearly when k = 0).
    if (d0 < 0.0) {
      if (k_ > 0.0) {
        consider(p.f0 / k_, kInf);
      } else {
        consider(-kInf, kInf);
      }
    }
    return;
  }

  consider(eval(p, end), end);
  const double d1 = slope(end);
  // The slope is monotone on each piece, so a sign change brackets the
  // single interior stationary point.
  if (d0 < 0.0 && d1 > 0.0) {
    double lo = p.t0, hi = end;
    for (int it = 0; it < 200 && hi - lo > 1e-14 * std::max(1.0, hi); ++it) {
      const double mid = 0.5 * (lo + hi);
      if (slope(mid) < 0.0) {
        lo = mid;
      } else {
        hi = mid;
      }
    }
    const double ts = 0.5 * (lo + hi);
    consider(eval(p, ts), ts);
  }
}

FrequencyResponse::Minimum FrequencyResponse::minimum(double t_end) const {
  Minimum best{0.0, 0.0};
  for (const auto& p : pieces_) {
    if (p.t0 > t_end) break;
    piece_min(p, t_end, best);
  }
  return best;
}

double FrequencyResponse::qss_deviation() const {
  const Piece& last = pieces_.back();
  if (k_ > 0.0) return last.f0 / k_;
  if (last.f0 < 0.0) return -kInf;
  if (last.f0 > 0.0) return kInf;
  return last.y0;
}

// ---------------------------------------------------------------------------

Trajectory simulate(const FrequencyScenario& s, double dt, double t_end) {
  if (!(dt > 0.0)) throw DomainError("simulate requires dt > 0");
  if (!(t_end > 0.0) || !std::isfinite(t_end)) throw DomainError("simulate requires finite t_end > 0");
  FrequencyResponse resp(s);

  Trajectory tr;
  const auto m = resp.minimum(t_end);
  tr.nadir_hz = m.value;
  tr.nadir_time = m.time;
  tr.rocof_initial = resp.slope_at(0.0);
  tr.qss_deviation_hz = resp.qss_deviation();

  const long n = static_cast<long>(std::ceil(t_end / dt - 1e-9));
  tr.times.reserve(n + 2);
  for (long i = 0; i <= n; ++i) {
    const double t = std::min(static_cast<double>(i) * dt, t_end);
    if (!tr.times.empty() && m.time > tr.times.back() && m.time < t) tr.times.push_back(m.time);
    tr.times.push_back(t);
  }
  tr.delta_f.reserve(tr.times.size());
  for (double t : tr.times) {
    tr.delta_f.push_back(t == m.time ? m.value : resp.at(t));
  }

  if (m.time >= t_end && resp.slope_at(t_end) < 0.0) throw HorizonError(m.value, m.time);
  return tr;
}

void dump_trajectory(const Trajectory& tr, const std::string& path) {
  std::string out = "t,delta_f\n";
  for (size_t i = 0; i < tr.times.size(); ++i) {
    out += csv::format_double(tr.times[i]) + "," + csv::format_double(tr.delta_f[i]) + "\n";
  }
  csv::write_text(path, out);
}

bool check_qss(const SystemCase& c, double total_response_mw) {
  if (total_response_mw < 0.0) throw DomainError("total response must be >= 0");
  return c.dP_L_max - total_response_mw <= c.qss_xi * c.peak_demand() * c.qss_lambda;
}

LabelResult label_point(const FrequencyScenario& s, double nadir_limit_hz) {
  LabelResult out;
  FrequencyResponse resp(s);
  const auto m = resp.minimum(kInf);
  out.nadir_hz = m.value;
  if (!std::isfinite(m.value)) {
    out.label = Safety::kUnsafe;
    out.diagnostic = "horizon excludes nadir: unbounded decline";
    return out;
  }
  out.label = s.f0 + m.value >= nadir_limit_hz ? Safety::kSafe : Safety::kUnsafe;
  return out;
}

FrequencyScenario scenario_for(const SystemCase& c, const OperatingPoint& x, double dc_ramp_s) {
  FrequencyScenario s;
  s.h_sys = x.h_sys;
  s.disturbance_mw = c.dP_L_max;
  s.r_dc_sta = x.r_dc;
  s.r_cg_sta = x.r_gen;
  double t_a = 0.0;
  for (const auto& d : c.data_centers) t_a = std::max(t_a, d.ffr_start);
  double t_b = 0.0, t_d = 0.0;
  for (const auto& g : c.generators) {
    t_b = std::max(t_b, g.ffr_start);
    t_d = std::max(t_d, g.ffr_full);
  }
  s.t_a = t_a;
  s.t_c = t_a + dc_ramp_s;
  s.t_b = t_b;
  s.t_d = t_d;
  s.damping = c.damping;
  s.demand_mw = c.peak_demand();
  s.f0 = c.f0;
  s.deadband_hz = c.deadband_hz;
  return s;
}

}  // namespace fsuc
