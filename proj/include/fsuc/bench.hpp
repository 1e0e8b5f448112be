#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "fsuc/datagen.hpp"
#include "fsuc/learner.hpp"
#include "fsuc/sysmodel.hpp"
#include "fsuc/ucmodel.hpp"

namespace fsuc {

enum class Scenario { kBenchmark, kScaled2030 };
const char* to_string(Scenario s);
Scenario parse_scenario(const std::string& s);

struct SweepSpec {
  std::vector<double> flex_shares{0.0, 0.10, 0.20, 0.30, 0.40, 0.50, 0.75, 1.0};
  std::vector<double> delays{1.0, 2.0, 5.0, 10.0};
  Scenario scenario = Scenario::kBenchmark;
  double dc_multiplier = 2.0;   // scaled-2030 only
  std::uint64_t profile_seed = 1;
  std::uint64_t data_seed = 1;  // sampling grid jitter
  RegionMode mode = RegionMode::kConjunctive;
  // A schedule inside a longer delay's region is secure at delay d too: keep
  // it for cell (phi, d) when it beats the solve against d's own region.
  bool nest_delays = true;
  // Node budget per cell. A node limit keeps the sweep reproducible where a
  // wall-clock limit would not.
  long node_limit = 300;
  double time_limit_s = 600.0;
  std::string external_solver;  // routes every cell through MPS when set
  std::string work_dir = ".";
  // Learned regions keyed by delay; missing delays are trained on demand.
  std::map<double, LinearSafetyRegion> regions;
};

// Throws ValidationError: shares outside [0,1] or unsorted, delays <= 0,
// multiplier <= 0.
void validate(const SweepSpec& s);

struct SweepCell {
  double flex_share = 0.0;
  double delay_s = 0.0;
  UcStatus status = UcStatus::kError;
  double total_cost = 0.0;      // solver objective, $
  double quadratic_cost = 0.0;  // exact quadratic cost at the same schedule
  double best_bound = 0.0;
  double wind_share = 0.0;
  double curtailment_mwh = 0.0;
  int periods = 0;
  int periods_secure = 0;  // simulator recheck
  long nodes = 0;
  long lp_iterations = 0;
  double seconds = 0.0;
  std::string message;

  bool feasible() const { return status == UcStatus::kOptimal || status == UcStatus::kFeasible; }
};

struct SweepResult {
  std::string scenario;
  std::vector<SweepCell> cells;  // sorted by (flex_share, delay)

  const SweepCell* find(double flex_share, double delay_s) const;
};

// The case a sweep runs on: the input, or its scale_scenario image.
SystemCase scenario_case(const SystemCase& c, const SweepSpec& s);

// Samples the default grid at one delay, labels it with the simulator and
// trains a DT-CL region. Throws Error when the labels are single-class.
LinearSafetyRegion train_region(const SystemCase& c, double delay_s, std::uint64_t seed,
                                RegionMode mode = RegionMode::kConjunctive, int d_max = 6);

// One UC solve per (flex share, delay). Delays run longest first and shares
// ascending; each cell starts from the best feasible schedule of its
// neighbours (previous share, next longer delay). Infeasible cells are
// recorded and the sweep continues. Regions for delays absent from
// spec.regions are trained on the scenario case.
SweepResult run_sweep(const SystemCase& c, const SweepSpec& spec);

// Header: scenario,flex_share,delay_s,status,total_cost,quadratic_cost,
// best_bound,wind_share,curtailment_mwh,periods,periods_secure,nodes,
// lp_iterations,seconds
std::string sweep_csv(const SweepResult& r);
SweepResult parse_sweep_csv(const std::string& text);

// (C_i - C_j) / (100 (phi_j - phi_i)): cost saving per 1% of flexible DC
// capacity, in the cost unit of the sweep. Throws ValidationError for
// phi_i >= phi_j and Error for a missing or infeasible cell.
double compute_mfv(const SweepResult& r, double phi_i, double phi_j, double delay_s);

// Data-center peaks times `dc_multiplier`. Wind capacity and the generator
// fleet grow with total peak load so wind capacity / total load is kept; the
// fleet factor is stored in fleet_scale. Non-DC load is unchanged.
SystemCase scale_scenario(const SystemCase& c, double dc_multiplier);

// Wind energy delivered after curtailment over total energy delivered.
double wind_share(const UcModel& m, const UcSolution& s);
// Per cell, in result order.
std::vector<double> wind_share(const SweepResult& r);

// ------------------------------------------------------------- comparison

struct CompareOptions {
  int budget = 63;  // maximum halfspaces per method
  double delay_s = 2.0;
  std::vector<double> flex_shares{0.0, 0.5, 1.0};  // one UC solve each
  std::uint64_t profile_seed = 1;
  std::uint64_t krl_seed = 1;
  long node_limit = 300;
  double time_limit_s = 600.0;
};

struct MethodRow {
  std::string method;  // dtcl, pla, krl
  bool ok = false;
  std::string message;
  int constraints = 0;      // nadir halfspaces per period
  double train_seconds = 0.0;
  double solve_seconds = 0.0;
  double total_cost = 0.0;  // summed over the UC solves
  int periods = 0;
  int periods_secure = 0;
  double pass_rate = 0.0;      // periods_secure / periods
  double data_pass_rate = 0.0;  // share of accepted held-out points that are safe
  double avg_nl_error = 0.0;    // on held-out points
};

// DT-CL is trained with the deepest tree the budget allows; PLA and KRL then
// get exactly as many pieces as DT-CL produced halfspaces. `train` and
// `held_out` must hold points of opt.delay_s.
std::vector<MethodRow> compare_methods(const SystemCase& c, const std::vector<LabeledPoint>& train,
                                       const std::vector<LabeledPoint>& held_out,
                                       const CompareOptions& opt);

// Header: method,ok,constraints,train_seconds,solve_seconds,total_cost,
// periods,periods_secure,pass_rate,data_pass_rate,avg_nl_error,message
std::string compare_csv(const std::vector<MethodRow>& rows);
std::vector<MethodRow> parse_compare_csv(const std::string& text);

}  // namespace fsuc
