#pragma once

#include <optional>
#include <string>
#include <vector>

#include "fsuc/freqsim.hpp"
#include "fsuc/learner.hpp"
#include "fsuc/milp_model.hpp"
#include "fsuc/milpsolve.hpp"
#include "fsuc/sysmodel.hpp"

namespace fsuc {

// Piecewise-linear surrogate of a convex quadratic on [0, p_max] using K
// equal-width chords. cost(P) ~= fixed + sum_k slopes[k] * s_k with
// 0 <= s_k <= width and P = sum_k s_k.
struct PiecewiseCost {
  double fixed = 0.0;
  double width = 0.0;
  std::vector<double> breakpoints;  // K + 1 points from 0 to p_max
  std::vector<double> slopes;       // K chord slopes, non-decreasing

  // Value of the chord interpolant at P in [0, p_max].
  double eval(double p) const;
};

// Throws DomainError("non-convex cost") for quad < 0.
PiecewiseCost piecewise_cost(double quad, double lin, double fixed, double p_max, int K);

struct UcOptions {
  // Flexible share applied to every data center; the case values when unset.
  std::optional<double> flex_share;
  int pwl_segments = 4;
  bool rocof = true;
  bool qss = true;
  // Bound R_gen, R_DC and H to the region's training box.
  bool region_box = true;
};

// Column indices of the named UC variables inside the MILP.
struct UcIndex {
  int horizon = 0;
  std::vector<std::vector<int>> u, p, r, v, w;  // [unit][period]
  std::vector<std::vector<std::vector<int>>> seg;  // [unit][period][segment]
  std::vector<std::vector<int>> r_dc_unit;         // [dc][period]
  std::vector<std::vector<std::vector<int>>> dc_seg;  // [dc][period][segment]
  std::vector<int> curt, r_dc, r_gen, h;            // [period]
  std::vector<std::vector<int>> z;                  // [leaf][period], disjunctive only
  int nadir_rows_per_period = 0;
};

struct UcModel {
  MilpModel milp;
  UcIndex idx;
  SystemCase sys;
  Profiles profiles;
  std::vector<PiecewiseCost> gen_cost;  // per unit
  std::vector<PiecewiseCost> dc_cost;   // per data center
  std::vector<std::vector<double>> dc_cap;  // [dc][period] flexible MW
  bool has_region = false;
};

// Frequency-secured UC. Without a region the nadir rows are omitted.
// Throws ValidationError for a region whose features are not
// (r_gen_mw, r_dc_mw, h_sys), for a profile/horizon mismatch, or when some
// period's net load cannot be met by the whole fleet.
UcModel build_uc(const SystemCase& c, const Profiles& p, const LinearSafetyRegion* region,
                 const UcOptions& opt = {});

enum class UcStatus { kOptimal, kFeasible, kInfeasible, kTimeLimit, kError };
const char* to_string(UcStatus s);

struct UcSolution {
  UcStatus status = UcStatus::kError;
  std::vector<std::vector<int>> commitment;     // [unit][period]
  std::vector<std::vector<double>> dispatch;    // [unit][period]
  std::vector<std::vector<double>> gen_ffr;     // [unit][period]
  std::vector<std::vector<double>> dc_ffr;      // [dc][period]
  std::vector<double> curtailment, r_dc, r_gen, h_sys;  // [period]
  double pwl_cost = 0.0;        // solver objective
  double quadratic_cost = 0.0;  // the exact quadratic objective at the same point
  double cost_gap = 0.0;        // quadratic - pwl (<= 0 for chord surrogates)
  SolveResult solver;
  std::string message;
};

// Throws Error when an integer column is further than 1e-6 from integral.
UcSolution extract_solution(const UcModel& m, const SolveResult& r);

// Exact quadratic objective at a solution.
double quadratic_cost(const UcModel& m, const UcSolution& s);

// Per-period security verdict from the dynamics model.
struct PeriodCheck {
  int period = 0;
  double nadir_hz = 0.0;  // deviation
  double rocof = 0.0;     // Hz/s
  bool nadir_ok = false;
  bool rocof_ok = false;
  bool qss_ok = false;
  bool ok() const { return nadir_ok && rocof_ok && qss_ok; }
};

std::vector<PeriodCheck> recheck_security(const SystemCase& c, const UcSolution& s, double dc_ramp_s);

// Energy accounting.
double wind_energy_delivered(const UcModel& m, const UcSolution& s);
double demand_energy(const UcModel& m);

}  // namespace fsuc
