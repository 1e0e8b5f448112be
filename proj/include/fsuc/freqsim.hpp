#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "fsuc/error.hpp"
#include "fsuc/sysmodel.hpp"

namespace fsuc {

// One post-contingency dynamics run. Response timings t_a..t_d are measured
// from the instant the deviation first reaches -deadband_hz.
struct FrequencyScenario {
  double h_sys = 0.0;           // MW*s/Hz
  double disturbance_mw = 0.0;  // lost generation
  double r_dc_sta = 0.0;        // data-center FFR plateau, MW
  double r_cg_sta = 0.0;        // conventional FFR plateau, MW
  double t_a = 0.0;             // DC ramp start
  double t_b = 0.0;             // generator ramp start
  double t_c = 1.0;             // DC ramp full
  double t_d = 1.0;             // generator ramp full
  double damping = 0.0;         // D
  double demand_mw = 0.0;       // P_D
  double f0 = 50.0;
  double deadband_hz = 0.0;
};

void validate(const FrequencyScenario& s);

struct Trajectory {
  std::vector<double> times;
  std::vector<double> delta_f;
  double nadir_hz = 0.0;  // min deviation over the window (<= 0)
  double nadir_time = 0.0;
  double rocof_initial = 0.0;
  double qss_deviation_hz = 0.0;
};

// The window [0, t_end] ends while the frequency is still falling.
class HorizonError : public Error {
 public:
  HorizonError(double nadir_hz, double nadir_time)
      : Error("horizon excludes nadir"), nadir_hz(nadir_hz), nadir_time(nadir_time) {}
  double nadir_hz;
  double nadir_time;
};

// (sum_g H_g * P_g^max * u_g - dP_L^max * H_L^max) / f0.
double system_inertia(const SystemCase& c, std::span<const int> commitment);
// dP / (2 H).
double rocof(double h_sys, double disturbance_mw);
// Linear ramp from 0 at t_start to sta at t_full.
double ffr_ramp(double t, double sta, double t_start, double t_full);

// Closed-form solution of
//   2 H dDf/dt + D P_D Df = dR_DC(t) + dR_cg(t) - dP,   Df(0) = 0.
// The forcing is affine between the deadband-shifted ramp breakpoints, so
// each interval has an exponential-plus-affine solution.
class FrequencyResponse {
 public:
  explicit FrequencyResponse(const FrequencyScenario& s);

  double at(double t) const;
  double slope_at(double t) const;

  // Instant the deviation reaches -deadband (0 when the deadband is zero,
  // +inf when it is never reached).
  double deadband_time() const { return t_db_; }

  struct Minimum {
    double value;
    double time;  // +inf when the infimum is only approached asymptotically
  };
  // Minimum over [0, t_end]; t_end may be +inf.
  Minimum minimum(double t_end) const;
  // Asymptotic deviation once every ramp has reached its plateau.
  double qss_deviation() const;

 private:
  struct Piece {
    double t0, t1;  // t1 may be +inf
    double y0;      // deviation at t0
    double f0;      // forcing at t0
    double beta;    // forcing slope
  };
  double eval(const Piece& p, double t) const;
  void piece_min(const Piece& p, double t_hi, Minimum& best) const;
  const Piece& piece_for(double t) const;

  double two_h_;
  double k_;  // D * P_D
  double t_db_;
  std::vector<Piece> pieces_;
};

// Samples the closed-form trajectory on a dt grid over [0, t_end]; the exact
// nadir instant is inserted into the grid. Throws HorizonError when the
// minimum sits at t_end on a falling slope.
Trajectory simulate(const FrequencyScenario& s, double dt, double t_end);

// Writes `t,delta_f` rows.
void dump_trajectory(const Trajectory& tr, const std::string& path);

// L_max - R <= xi * D_peak * lambda.
bool check_qss(const SystemCase& c, double total_response_mw);

enum class Safety { kUnsafe = 0, kSafe = 1 };

struct LabelResult {
  Safety label = Safety::kUnsafe;
  double nadir_hz = 0.0;  // -inf for an unbounded decline
  std::optional<std::string> diagnostic;
};

// Safe iff f0 + nadir >= nadir_limit_hz, with the nadir taken over the whole
// post-contingency response (including the asymptotic plateau).
LabelResult label_point(const FrequencyScenario& s, double nadir_limit_hz);

// Operating point in learner feature order.
struct OperatingPoint {
  double r_gen = 0.0;
  double r_dc = 0.0;
  double h_sys = 0.0;
};

// Builds the dynamics scenario the case implies for an operating point when
// the data-center ramp lasts `dc_ramp_s` seconds. Generator timings are the
// slowest among units (conservative aggregate); damping demand is the
// case peak demand.
FrequencyScenario scenario_for(const SystemCase& c, const OperatingPoint& x, double dc_ramp_s);

}  // namespace fsuc
