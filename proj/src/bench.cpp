#include "fsuc/bench.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <iostream>
#include <limits>
#include <sstream>
#include <unordered_map>

#include "fsuc/csv.hpp"
#include "fsuc/error.hpp"

namespace fsuc {

namespace {

using Clock = std::chrono::steady_clock;

double since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

NadirFn nadir_fn(const SystemCase& c, double delay_s) {
  return [c, delay_s](std::span<const double> x) {
    return label_point(scenario_for(c, {x[0], x[1], x[2]}, delay_s), c.nadir_limit_hz).nadir_hz;
  };
}

std::vector<double> grid_box_lo(const SampleGrid& g) {
  return {g.r_cg_range.min, g.r_dc_range.min, g.h_range.min};
}
std::vector<double> grid_box_hi(const SampleGrid& g) {
  return {g.r_cg_range.max, g.r_dc_range.max, g.h_range.max};
}

bool usable(const MilpModel& m, const std::vector<double>& x) {
  return static_cast<int>(x.size()) == m.num_vars() && m.max_violation(x) <= 1e-6 &&
         m.max_fractionality(x) <= 1e-9;
}

// A schedule with its column names, so it can seed a model whose layout
// differs (other region, other leaf selectors).
struct Named {
  std::vector<std::string> names;
  std::vector<double> x;
  bool empty() const { return x.empty(); }
};

Named named(const MilpModel& m, std::vector<double> x) {
  Named n;
  n.names.reserve(m.vars().size());
  for (const auto& v : m.vars()) n.names.push_back(v.name);
  n.x = std::move(x);
  return n;
}

// Copies same-named columns and sets leaf selectors to a leaf holding the
// point in every period.
std::vector<double> transplant(const UcModel& to, const LinearSafetyRegion& region, const Named& from) {
  std::unordered_map<std::string, int> at;
  for (int j = 0; j < to.milp.num_vars(); ++j) at.emplace(to.milp.vars()[j].name, j);
  std::vector<double> x(to.milp.num_vars(), 0.0);
  for (size_t k = 0; k < from.names.size(); ++k) {
    if (auto it = at.find(from.names[k]); it != at.end()) x[it->second] = from.x[k];
  }
  if (to.idx.z.empty()) return x;
  for (int t = 0; t < to.idx.horizon; ++t) {
    const double pt[3] = {x[to.idx.r_gen[t]], x[to.idx.r_dc[t]], x[to.idx.h[t]]};
    size_t best = 0;
    double best_slack = -std::numeric_limits<double>::infinity();
    for (size_t l = 0; l < region.leaves.size(); ++l) {
      double slack = std::numeric_limits<double>::infinity();
      for (int k : region.leaves[l]) slack = std::min(slack, region.halfspaces[k].eval(pt));
      if (slack > best_slack) best_slack = slack, best = l;
    }
    for (size_t l = 0; l < region.leaves.size(); ++l) x[to.idx.z[l][t]] = l == best ? 1.0 : 0.0;
  }
  return x;
}

SolveResult solve_cell(const UcModel& m, const LinearSafetyRegion& region,
                       const std::vector<const Named*>& starts, long node_limit, double time_limit_s,
                       const std::string& external, const std::string& work_dir) {
  if (!external.empty()) {
    std::filesystem::create_directories(work_dir);
    return solve_external(m.milp, external, work_dir, time_limit_s);
  }
  SolveOptions so;
  so.node_limit = node_limit;
  so.time_limit_s = time_limit_s;
  double best = std::numeric_limits<double>::infinity();
  for (const Named* n : starts) {
    if (!n || n->empty()) continue;
    std::vector<double> x = transplant(m, region, *n);
    if (!usable(m.milp, x)) continue;
    const double f = m.milp.objective(x);
    if (f < best) best = f, so.initial_solution = std::move(x);
  }
  return solve_milp(m.milp, so);
}

// A schedule and the delay (index into the sweep's delays) whose region it
// satisfies.
struct Schedule {
  Named x;
  size_t origin = 0;
};

struct CellRun {
  SweepCell cell;
  Schedule x;
};

void fill_cell(SweepCell& cell, const SystemCase& c, const UcModel& m, const UcSolution& s,
               double delay) {
  cell.status = s.status;
  cell.message = s.message;
  cell.periods = c.horizon;
  if (!cell.feasible()) {
    cell.total_cost = std::numeric_limits<double>::quiet_NaN();
    return;
  }
  cell.total_cost = s.pwl_cost;
  cell.quadratic_cost = s.quadratic_cost;
  cell.wind_share = wind_share(m, s);
  cell.curtailment_mwh = 0.0;
  for (double v : s.curtailment) cell.curtailment_mwh += v * c.period_hours;
  cell.periods_secure = 0;
  for (const auto& pc : recheck_security(c, s, delay)) cell.periods_secure += pc.ok();
}

// Solves cell (phi, delays[di]) against its own region. With `keep`, a
// neighbour schedule that satisfies a longer delay's region replaces the
// solve when it is cheaper: it is secure here as well.
CellRun run_cell(const SystemCase& c, const Profiles& prof, const std::vector<LinearSafetyRegion>& regions,
                 double phi, size_t di, const std::vector<const Schedule*>& starts, bool keep,
                 const SweepSpec& spec) {
  const double delay = spec.delays[di];
  CellRun out;
  SweepCell& cell = out.cell;
  cell.flex_share = phi;
  cell.delay_s = delay;
  UcOptions uo;
  uo.flex_share = phi;
  try {
    const UcModel m = build_uc(c, prof, &regions[di], uo);
    std::ostringstream wd;
    wd << spec.work_dir << "/cell_" << phi << "_" << delay;
    std::vector<const Named*> named_starts;
    for (const Schedule* s : starts) named_starts.push_back(s ? &s->x : nullptr);
    const SolveResult r = solve_cell(m, regions[di], named_starts, spec.node_limit, spec.time_limit_s,
                                     spec.external_solver, wd.str());
    cell.nodes = r.nodes;
    cell.lp_iterations = r.lp_iterations;
    cell.seconds = r.seconds;
    cell.best_bound = r.best_bound;
    const UcSolution s = extract_solution(m, r);
    fill_cell(cell, c, m, s, delay);
    if (cell.feasible()) out.x = {named(m.milp, r.x), di};
    if (!keep) return out;

    double best = cell.feasible() ? r.objective : std::numeric_limits<double>::infinity();
    for (const Schedule* cand : starts) {
      if (!cand || cand->x.empty() || cand->origin == di) continue;
      const LinearSafetyRegion& home = regions[cand->origin];
      const UcModel mc = build_uc(c, prof, &home, uo);
      std::vector<double> x = transplant(mc, home, cand->x);
      if (!usable(mc.milp, x)) continue;
      const double f = mc.milp.objective(x);
      if (f >= best - 1e-9 * std::abs(best)) continue;
      best = f;
      SolveResult kept;
      kept.status = MilpStatus::kFeasible;
      kept.objective = f;
      kept.x = x;
      fill_cell(cell, c, mc, extract_solution(mc, kept), delay);
      std::ostringstream msg;
      msg << "schedule from the " << spec.delays[cand->origin] << " s region";
      cell.message = msg.str();
      out.x = {named(mc.milp, std::move(x)), cand->origin};
    }
  } catch (const Error& e) {
    cell.status = UcStatus::kError;
    cell.message = e.what();
    cell.total_cost = std::numeric_limits<double>::quiet_NaN();
  }
  return out;
}

bool sorted_unique(const std::vector<double>& v) {
  return std::adjacent_find(v.begin(), v.end(), std::greater_equal<double>()) == v.end();
}

}  // namespace

const char* to_string(Scenario s) {
  return s == Scenario::kBenchmark ? "benchmark" : "scaled-2030";
}

Scenario parse_scenario(const std::string& s) {
  if (s == "benchmark") return Scenario::kBenchmark;
  if (s == "scaled-2030") return Scenario::kScaled2030;
  throw ValidationError("scenario", "unknown scenario '" + s + "'");
}

void validate(const SweepSpec& s) {
  if (s.flex_shares.empty()) throw ValidationError("flex_shares", "must be non-empty");
  for (double f : s.flex_shares) {
    if (!(f >= 0.0 && f <= 1.0)) throw ValidationError("flex_shares", "must lie in [0, 1]");
  }
  if (!sorted_unique(s.flex_shares)) throw ValidationError("flex_shares", "must be strictly ascending");
  if (s.delays.empty()) throw ValidationError("delays", "must be non-empty");
  for (double d : s.delays) {
    if (!(d > 0.0) || !std::isfinite(d)) throw ValidationError("delays", "must be > 0");
  }
  if (!sorted_unique(s.delays)) throw ValidationError("delays", "must be strictly ascending");
  if (!(s.dc_multiplier > 0.0)) throw ValidationError("dc_multiplier", "must be > 0");
  if (s.node_limit < 1) throw ValidationError("node_limit", "must be >= 1");
}

const SweepCell* SweepResult::find(double flex_share, double delay_s) const {
  for (const auto& c : cells) {
    if (std::abs(c.flex_share - flex_share) < 1e-9 && std::abs(c.delay_s - delay_s) < 1e-9) return &c;
  }
  return nullptr;
}

SystemCase scenario_case(const SystemCase& c, const SweepSpec& s) {
  return s.scenario == Scenario::kBenchmark ? c : scale_scenario(c, s.dc_multiplier);
}

LinearSafetyRegion train_region(const SystemCase& c, double delay_s, std::uint64_t seed,
                                RegionMode mode, int d_max) {
  const SampleGrid g = default_grid(c, {delay_s}, seed);
  const auto pts = build_dataset(c, g);
  if (class_balance(pts).single_class()) throw Error("training data for delay has a single class");
  DtclOptions o;
  o.mode = mode;
  o.d_max = d_max;
  o.certify_opts.margin_hz = c.nadir_margin_hz();
  auto res = train_dtcl(pts, grid_box_lo(g), grid_box_hi(g), nadir_fn(c, delay_s), o);
  res.region.metadata["delay_s"] = csv::format_double(delay_s);
  res.region.metadata["case"] = c.name;
  return std::move(res.region);
}

SweepResult run_sweep(const SystemCase& input, const SweepSpec& spec) {
  validate(spec);
  const SystemCase c = scenario_case(input, spec);
  const Profiles prof = generate_profiles(c, spec.profile_seed);
  const size_t nf = spec.flex_shares.size();

  SweepResult out;
  out.scenario = to_string(spec.scenario);
  // Longest delay first: its schedules seed the shorter delays.
  const size_t nd = spec.delays.size();
  std::vector<LinearSafetyRegion> regions(nd);
  std::vector<Schedule> longer(nf);
  for (size_t di = nd; di-- > 0;) {
    const double delay = spec.delays[di];
    if (auto it = spec.regions.find(delay); it != spec.regions.end()) {
      regions[di] = it->second;
    } else {
      regions[di] = train_region(c, delay, spec.data_seed, spec.mode);
    }
    std::vector<Schedule> here(nf);
    for (size_t i = 0; i < nf; ++i) {
      const Schedule* prev = i > 0 ? &here[i - 1] : nullptr;
      CellRun run = run_cell(c, prof, regions, spec.flex_shares[i], di, {prev, &longer[i]},
                             spec.nest_delays, spec);
      here[i] = std::move(run.x);
      out.cells.push_back(std::move(run.cell));
    }
    longer = std::move(here);
  }
  std::sort(out.cells.begin(), out.cells.end(), [](const SweepCell& a, const SweepCell& b) {
    return a.flex_share != b.flex_share ? a.flex_share < b.flex_share : a.delay_s < b.delay_s;
  });
  return out;
}

namespace {

const char* kSweepHeader =
    "scenario,flex_share,delay_s,status,total_cost,quadratic_cost,best_bound,wind_share,"
    "curtailment_mwh,periods,periods_secure,nodes,lp_iterations,seconds";

UcStatus parse_status(std::string_view s, const std::string& where) {
  for (UcStatus u : {UcStatus::kOptimal, UcStatus::kFeasible, UcStatus::kInfeasible,
                     UcStatus::kTimeLimit, UcStatus::kError}) {
    if (s == to_string(u)) return u;
  }
  throw ParseError(where, "unknown status '" + std::string(s) + "'");
}

}  // namespace

std::string sweep_csv(const SweepResult& r) {
  std::string s = kSweepHeader;
  s += '\n';
  using csv::format_double;
  for (const auto& c : r.cells) {
    s += r.scenario + ',' + format_double(c.flex_share) + ',' + format_double(c.delay_s) + ',' +
         to_string(c.status) + ',' + format_double(c.total_cost) + ',' + format_double(c.quadratic_cost) +
         ',' + format_double(c.best_bound) + ',' + format_double(c.wind_share) + ',' +
         format_double(c.curtailment_mwh) + ',' + std::to_string(c.periods) + ',' +
         std::to_string(c.periods_secure) + ',' + std::to_string(c.nodes) + ',' +
         std::to_string(c.lp_iterations) + ',' + format_double(c.seconds) + '\n';
  }
  return s;
}

SweepResult parse_sweep_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || csv::trim(line) != kSweepHeader) {
    throw ParseError("line 1", "unexpected sweep header");
  }
  SweepResult r;
  int ln = 1;
  while (std::getline(in, line)) {
    ++ln;
    if (csv::trim(line).empty()) continue;
    const std::string where = "line " + std::to_string(ln);
    const auto f = csv::split(csv::trim(line));
    if (f.size() != 14) throw ParseError(where, "expected 14 fields");
    if (r.cells.empty()) r.scenario = std::string(f[0]);
    SweepCell c;
    c.flex_share = csv::parse_double(f[1], where);
    c.delay_s = csv::parse_double(f[2], where);
    c.status = parse_status(f[3], where);
    c.total_cost = csv::parse_double(f[4], where);
    c.quadratic_cost = csv::parse_double(f[5], where);
    c.best_bound = csv::parse_double(f[6], where);
    c.wind_share = csv::parse_double(f[7], where);
    c.curtailment_mwh = csv::parse_double(f[8], where);
    c.periods = static_cast<int>(csv::parse_int(f[9], where));
    c.periods_secure = static_cast<int>(csv::parse_int(f[10], where));
    c.nodes = csv::parse_int(f[11], where);
    c.lp_iterations = csv::parse_int(f[12], where);
    c.seconds = csv::parse_double(f[13], where);
    r.cells.push_back(c);
  }
  return r;
}

double compute_mfv(const SweepResult& r, double phi_i, double phi_j, double delay_s) {
  if (!(phi_i < phi_j)) throw ValidationError("bracket", "requires phi_i < phi_j");
  const SweepCell* a = r.find(phi_i, delay_s);
  const SweepCell* b = r.find(phi_j, delay_s);
  if (!a || !b) throw Error("no sweep cell for the requested bracket");
  if (!a->feasible() || !b->feasible()) throw Error("bracket cell has no feasible schedule");
  return (a->total_cost - b->total_cost) / (100.0 * (phi_j - phi_i));
}

SystemCase scale_scenario(const SystemCase& c, double m) {
  if (!(m > 0.0)) throw ValidationError("dc_multiplier", "must be > 0");
  SystemCase s = c;
  const double load0 = c.peak_demand();
  for (auto& dc : s.data_centers) dc.peak_mw *= m;
  const double k = s.peak_demand() / load0;
  s.wind_capacity_mw = c.wind_capacity_mw * k;
  // k copies of each unit merged into one: power quantities scale, the
  // cost curve of the aggregate is k * cost(P / k).
  for (auto& g : s.generators) {
    g.p_min *= k;
    g.p_max *= k;
    g.ramp_up *= k;
    g.ramp_down *= k;
    g.ffr_capacity *= k;
    g.cost_quad /= k;
    g.cost_fix *= k;
  }
  s.fleet_scale = c.fleet_scale * k;
  if (m != 1.0) {
    std::ostringstream name;
    name << c.name << "-dc" << m;
    s.name = name.str();
  }
  return s;
}

double wind_share(const UcModel& m, const UcSolution& s) {
  const double total = demand_energy(m);
  return total > 0.0 ? wind_energy_delivered(m, s) / total : 0.0;
}

std::vector<double> wind_share(const SweepResult& r) {
  std::vector<double> out;
  out.reserve(r.cells.size());
  for (const auto& c : r.cells) out.push_back(c.wind_share);
  return out;
}

// ------------------------------------------------------------- comparison

std::vector<MethodRow> compare_methods(const SystemCase& c, const std::vector<LabeledPoint>& train,
                                       const std::vector<LabeledPoint>& held_out,
                                       const CompareOptions& opt) {
  if (opt.budget < 1) throw ValidationError("budget", "must be >= 1");
  if (train.empty() || held_out.empty()) throw ValidationError("dataset", "must be non-empty");
  const SampleGrid g = default_grid(c, {opt.delay_s});
  const NadirFn nf = nadir_fn(c, opt.delay_s);
  const double margin = c.nadir_margin_hz();
  const Profiles prof = generate_profiles(c, opt.profile_seed);

  std::vector<MethodRow> rows;
  std::vector<std::pair<MethodRow, LinearSafetyRegion>> built;

  int pieces = opt.budget;
  {
    MethodRow row;
    row.method = "dtcl";
    const auto t0 = Clock::now();
    LinearSafetyRegion r;
    try {
      DtclOptions o;
      o.d_max = depth_for_budget(opt.budget);
      o.certify_opts.margin_hz = margin;
      r = std::move(train_dtcl(train, grid_box_lo(g), grid_box_hi(g), nf, o).region);
      row.ok = true;
      pieces = std::max<int>(1, static_cast<int>(r.halfspaces.size()));
    } catch (const Error& e) {
      row.message = e.what();
    }
    row.train_seconds = since(t0);
    built.push_back({row, std::move(r)});
  }
  const auto ns = nadir_samples(c, train);
  Eigen::MatrixXd X(ns.size(), 3);
  Eigen::VectorXd y(ns.size());
  for (size_t i = 0; i < ns.size(); ++i) {
    for (int k = 0; k < 3; ++k) X(i, k) = ns[i].x[k];
    y(i) = ns[i].nadir_hz;
  }
  for (const std::string method : {"pla", "krl"}) {
    MethodRow row;
    row.method = method;
    const auto t0 = Clock::now();
    LinearSafetyRegion r;
    try {
      const auto model = method == "pla" ? fit_pla(X, y, pieces) : fit_krl(X, y, pieces, opt.krl_seed);
      r = model.region(margin);
      r.box_lo = grid_box_lo(g);
      r.box_hi = grid_box_hi(g);
      row.ok = true;
    } catch (const Error& e) {
      row.message = e.what();
    }
    row.train_seconds = since(t0);
    built.push_back({row, std::move(r)});
  }

  for (auto& [row, region] : built) {
    if (!row.ok) {
      rows.push_back(row);
      continue;
    }
    row.constraints = static_cast<int>(region.halfspaces.size());
    const RegionMetrics rm = evaluate_region(region, held_out, nf, margin);
    row.data_pass_rate = rm.pass_rate;
    row.avg_nl_error = rm.avg_nl_error;
    const std::vector<double>* start = nullptr;
    std::vector<double> prev;
    for (double phi : opt.flex_shares) {
      UcOptions uo;
      uo.flex_share = phi;
      try {
        const UcModel m = build_uc(c, prof, &region, uo);
        SolveOptions so;
        so.node_limit = opt.node_limit;
        so.time_limit_s = opt.time_limit_s;
        if (start && usable(m.milp, *start)) so.initial_solution = *start;
        const SolveResult r = solve_milp(m.milp, so);
        row.solve_seconds += r.seconds;
        const UcSolution s = extract_solution(m, r);
        if (s.status != UcStatus::kOptimal && s.status != UcStatus::kFeasible) {
          row.ok = false;
          row.message = std::string("UC ") + to_string(s.status) + " at flex share " + csv::format_double(phi);
          break;
        }
        row.total_cost += s.pwl_cost;
        for (const auto& pc : recheck_security(c, s, opt.delay_s)) {
          ++row.periods;
          row.periods_secure += pc.ok();
        }
        prev = r.x;
        start = &prev;
      } catch (const Error& e) {
        row.ok = false;
        row.message = e.what();
        break;
      }
    }
    row.pass_rate = row.periods ? double(row.periods_secure) / row.periods : 0.0;
    rows.push_back(row);
  }
  return rows;
}

std::string compare_csv(const std::vector<MethodRow>& rows) {
  std::string s =
      "method,ok,constraints,train_seconds,solve_seconds,total_cost,periods,periods_secure,pass_rate,"
      "data_pass_rate,avg_nl_error,message\n";
  using csv::format_double;
  for (const auto& r : rows) {
    std::string msg = r.message;
    std::replace(msg.begin(), msg.end(), ',', ';');
    std::replace(msg.begin(), msg.end(), '\n', ' ');
    s += r.method + ',' + (r.ok ? "1" : "0") + ',' + std::to_string(r.constraints) + ',' +
         format_double(r.train_seconds) + ',' + format_double(r.solve_seconds) + ',' +
         format_double(r.total_cost) + ',' + std::to_string(r.periods) + ',' +
         std::to_string(r.periods_secure) + ',' + format_double(r.pass_rate) + ',' +
         format_double(r.data_pass_rate) + ',' + format_double(r.avg_nl_error) + ',' + msg + '\n';
  }
  return s;
}

std::vector<MethodRow> parse_compare_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || csv::trim(line).substr(0, 17) != "method,ok,constra") {
    throw ParseError("line 1", "unexpected comparison header");
  }
  std::vector<MethodRow> rows;
  int ln = 1;
  while (std::getline(in, line)) {
    ++ln;
    if (csv::trim(line).empty()) continue;
    const std::string where = "line " + std::to_string(ln);
    const auto f = csv::split(csv::trim(line));
    if (f.size() != 12) throw ParseError(where, "expected 12 fields");
    MethodRow r;
    r.method = std::string(f[0]);
    r.ok = f[1] == "1";
    r.constraints = static_cast<int>(csv::parse_int(f[2], where));
    r.train_seconds = csv::parse_double(f[3], where);
    r.solve_seconds = csv::parse_double(f[4], where);
    r.total_cost = csv::parse_double(f[5], where);
    r.periods = static_cast<int>(csv::parse_int(f[6], where));
    r.periods_secure = static_cast<int>(csv::parse_int(f[7], where));
    r.pass_rate = csv::parse_double(f[8], where);
    r.data_pass_rate = csv::parse_double(f[9], where);
    r.avg_nl_error = csv::parse_double(f[10], where);
    r.message = std::string(f[11]);
    rows.push_back(std::move(r));
  }
  return rows;
}

}  // namespace fsuc
