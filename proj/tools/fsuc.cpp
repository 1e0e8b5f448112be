// Command-line driver for the frequency-secured UC experiments.

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <sstream>

#include "fsuc/bench.hpp"
#include "fsuc/csv.hpp"
#include "fsuc/error.hpp"

#ifndef FSUC_DATA_DIR
#define FSUC_DATA_DIR "data"
#endif

using namespace fsuc;
namespace fs = std::filesystem;

namespace {

struct Globals {
  std::string case_path = std::string(FSUC_DATA_DIR) + "/benchmark_case.json";
  std::uint64_t seed = 1;
  std::string out_dir = "out";
  std::string mode = "conjunctive";
  std::string external_solver;

  RegionMode region_mode() const {
    if (mode == "conjunctive") return RegionMode::kConjunctive;
    if (mode == "disjunctive") return RegionMode::kDisjunctive;
    throw ValidationError("--mode", "expected conjunctive or disjunctive");
  }
  std::string out(const std::string& file) const {
    fs::create_directories(out_dir);
    return (fs::path(out_dir) / file).string();
  }
};

std::string fmt(double v) { return csv::format_double(v); }

void say(const std::string& path) { std::cout << "wrote " << path << "\n"; }

// x,y series per curve, blank line between curves.
void write_series(const std::string& path, const std::string& title,
                  const std::vector<std::pair<std::string, std::vector<std::pair<double, double>>>>& curves) {
  std::string s = "# " + title + "\n";
  for (const auto& [label, pts] : curves) {
    s += "# " + label + "\n";
    for (const auto& [x, y] : pts) s += fmt(x) + "," + fmt(y) + "\n";
    s += "\n";
  }
  csv::write_text(path, s);
  say(path);
}

void write_sweep_plots(const Globals& g, const SweepResult& r) {
  std::vector<double> delays;
  for (const auto& c : r.cells) {
    if (std::find(delays.begin(), delays.end(), c.delay_s) == delays.end()) delays.push_back(c.delay_s);
  }
  std::sort(delays.begin(), delays.end());
  std::vector<std::pair<std::string, std::vector<std::pair<double, double>>>> cost, wind;
  for (double d : delays) {
    std::vector<std::pair<double, double>> pc, pw;
    for (const auto& c : r.cells) {
      if (c.delay_s != d || !c.feasible()) continue;
      pc.push_back({c.flex_share, c.total_cost});
      pw.push_back({c.flex_share, c.wind_share});
    }
    cost.push_back({"delay_s=" + fmt(d), pc});
    wind.push_back({"delay_s=" + fmt(d), pw});
  }
  write_series(g.out("cost_vs_flex_" + r.scenario + ".dat"), "total cost vs flexible share", cost);
  write_series(g.out("wind_share_" + r.scenario + ".dat"), "wind share vs flexible share", wind);
}

std::vector<double> parse_list(const std::string& s) {
  std::vector<double> v;
  for (auto f : csv::split(s)) v.push_back(csv::parse_double(csv::trim(f), "list"));
  return v;
}

Profiles profiles_for(const SystemCase& c, const std::string& path, std::uint64_t seed) {
  return path.empty() ? generate_profiles(c, seed) : load_profiles(path);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Frequency-secured unit commitment with data-center fast frequency response"};
  app.require_subcommand(1);
  Globals g;
  app.add_option("--case", g.case_path, "System case file (JSON)");
  app.add_option("--seed", g.seed, "Seed for profiles and sampling");
  app.add_option("--out-dir", g.out_dir, "Output directory");
  app.add_option("--mode", g.mode, "Region mode")->check(CLI::IsMember({"conjunctive", "disjunctive"}));
  app.add_option("--external-solver", g.external_solver, "Solver binary consuming MPS");

  // dataset
  auto* ds = app.add_subcommand("dataset", "Sample and label operating points");
  std::string ds_delays = "1,2,5,10";
  int r_count = 50, h_count = 20;
  double ds_mult = 1.0;
  ds->add_option("--delays", ds_delays, "Comma-separated DC ramp durations, s");
  ds->add_option("--r-count", r_count, "Grid points per reserve axis");
  ds->add_option("--h-count", h_count, "Grid points on the inertia axis");
  ds->add_option("--dc-multiplier", ds_mult, "Scale the case before sampling");

  // train
  auto* tr = app.add_subcommand("train", "Train a safety region from a dataset");
  std::string tr_dataset;
  double tr_delay = 2.0;
  int tr_depth = 6;
  bool tr_no_certify = false;
  tr->add_option("--dataset", tr_dataset, "Labelled dataset CSV (sampled when absent)");
  tr->add_option("--delay", tr_delay, "Delay to train on, s");
  tr->add_option("--depth", tr_depth, "Maximum tree depth");
  tr->add_flag("--no-certify", tr_no_certify, "Skip the simulator certification pass");

  // solve
  auto* so = app.add_subcommand("solve", "Solve one frequency-secured UC");
  std::string so_region, so_profiles, so_mps;
  double so_phi = -1.0, so_delay = 2.0, so_time = 600.0;
  long so_nodes = 300;
  so->add_option("--region", so_region, "Region file (nadir rows omitted when absent)");
  so->add_option("--profiles", so_profiles, "Profiles CSV (generated from --seed when absent)");
  so->add_option("--flex-share", so_phi, "Flexible share for every data center");
  so->add_option("--delay", so_delay, "DC ramp duration used by the security recheck, s");
  so->add_option("--node-limit", so_nodes, "Branch-and-bound node limit");
  so->add_option("--time-limit", so_time, "Time limit, s");
  so->add_option("--mps", so_mps, "Also export the model in MPS format");

  // sweep
  auto* sw = app.add_subcommand("sweep", "Flexible share x response delay sweep");
  std::string sw_scenario = "benchmark", sw_shares, sw_delays, sw_region_dir;
  double sw_mult = 2.0;
  long sw_nodes = 300;
  sw->add_option("--scenario", sw_scenario, "benchmark or scaled-2030")
      ->check(CLI::IsMember({"benchmark", "scaled-2030"}));
  sw->add_option("--flex-shares", sw_shares, "Comma-separated shares");
  sw->add_option("--delays", sw_delays, "Comma-separated delays, s");
  sw->add_option("--dc-multiplier", sw_mult, "Data-center growth for scaled-2030");
  sw->add_option("--node-limit", sw_nodes, "Branch-and-bound node limit per cell");
  sw->add_option("--region-dir", sw_region_dir, "Reuse region_<delay>.json files from here");

  // mfv
  auto* mf = app.add_subcommand("mfv", "Marginal flexibility value from sweep CSVs");
  std::vector<std::string> mf_sweeps;
  double mf_delay = 2.0;
  mf->add_option("sweeps", mf_sweeps, "Sweep CSV files")->required();
  mf->add_option("--delay", mf_delay, "Delay column to use, s");

  // compare
  auto* cm = app.add_subcommand("compare", "DT-CL vs PLA vs KRL at an equal halfspace budget");
  CompareOptions cmo;
  cm->add_option("--budget", cmo.budget, "Maximum halfspaces per method");
  cm->add_option("--delay", cmo.delay_s, "Delay, s");
  cm->add_option("--node-limit", cmo.node_limit, "Branch-and-bound node limit per solve");

  // scale
  auto* sc = app.add_subcommand("scale", "Write the case with scaled data-center capacity");
  double sc_mult = 2.0;
  sc->add_option("--multiplier", sc_mult, "Data-center capacity multiplier");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    const RegionMode mode = g.region_mode();
    const SystemCase sys = load_case(g.case_path);

    if (*ds) {
      const SystemCase c = ds_mult == 1.0 ? sys : scale_scenario(sys, ds_mult);
      const SampleGrid grid = default_grid(c, parse_list(ds_delays), g.seed, r_count, h_count);
      const auto pts = build_dataset(c, grid);
      const auto b = class_balance(pts);
      const std::string path = g.out("dataset.csv");
      save_dataset(pts, path);
      say(path);
      std::cout << pts.size() << " points, " << b.safe << " safe, " << b.unsafe << " unsafe\n";
    } else if (*tr) {
      LinearSafetyRegion r;
      if (tr_dataset.empty() && !tr_no_certify) {
        r = train_region(sys, tr_delay, g.seed, mode, tr_depth);
      } else {
        const SampleGrid grid = default_grid(sys, {tr_delay}, g.seed);
        const auto pts = tr_dataset.empty() ? build_dataset(sys, grid) : select_delay(load_dataset(tr_dataset), tr_delay);
        DtclOptions o;
        o.mode = mode;
        o.d_max = tr_depth;
        o.certify = !tr_no_certify;
        o.certify_opts.margin_hz = sys.nadir_margin_hz();
        const NadirFn nf = [&](std::span<const double> x) {
          return label_point(scenario_for(sys, {x[0], x[1], x[2]}, tr_delay), sys.nadir_limit_hz).nadir_hz;
        };
        r = train_dtcl(pts, {grid.r_cg_range.min, grid.r_dc_range.min, grid.h_range.min},
                       {grid.r_cg_range.max, grid.r_dc_range.max, grid.h_range.max}, nf, o)
                .region;
        r.metadata["delay_s"] = fmt(tr_delay);
      }
      const std::string path = g.out("region_" + fmt(tr_delay) + ".json");
      save_region(r, path);
      say(path);
      std::cout << r.halfspaces.size() << " halfspaces, " << r.leaves.size() << " leaves\n";
    } else if (*so) {
      const Profiles prof = profiles_for(sys, so_profiles, g.seed);
      std::optional<LinearSafetyRegion> region;
      if (!so_region.empty()) region = load_region(so_region);
      UcOptions uo;
      if (so_phi >= 0.0) uo.flex_share = so_phi;
      const UcModel m = build_uc(sys, prof, region ? &*region : nullptr, uo);
      if (!so_mps.empty()) {
        write_mps_file(m.milp, so_mps);
        say(so_mps);
      }
      SolveResult r;
      if (!g.external_solver.empty()) {
        r = solve_external(m.milp, g.external_solver, g.out("external"), so_time);
      } else {
        SolveOptions opt;
        opt.node_limit = so_nodes;
        opt.time_limit_s = so_time;
        r = solve_milp(m.milp, opt);
      }
      const UcSolution s = extract_solution(m, r);
      std::cout << "status " << to_string(s.status) << "\n";
      if (s.status != UcStatus::kOptimal && s.status != UcStatus::kFeasible) {
        std::cout << s.message << "\n";
        return 2;
      }
      std::string sched = "period,unit,commit,dispatch_mw,ffr_mw\n";
      for (int t = 0; t < m.idx.horizon; ++t) {
        for (size_t i = 0; i < sys.generators.size(); ++i) {
          sched += std::to_string(t) + "," + sys.generators[i].id + "," + std::to_string(s.commitment[i][t]) +
                   "," + fmt(s.dispatch[i][t]) + "," + fmt(s.gen_ffr[i][t]) + "\n";
        }
      }
      const std::string sp = g.out("schedule.csv");
      csv::write_text(sp, sched);
      say(sp);
      std::string per = "period,r_gen_mw,r_dc_mw,h_sys,curtailment_mw,nadir_hz,rocof_hz_s,secure\n";
      const auto checks = recheck_security(sys, s, so_delay);
      int secure = 0;
      for (const auto& pc : checks) {
        const int t = pc.period;
        secure += pc.ok();
        per += std::to_string(t) + "," + fmt(s.r_gen[t]) + "," + fmt(s.r_dc[t]) + "," + fmt(s.h_sys[t]) + "," +
               fmt(s.curtailment[t]) + "," + fmt(pc.nadir_hz) + "," + fmt(pc.rocof) + "," +
               (pc.ok() ? "1" : "0") + "\n";
      }
      const std::string pp = g.out("periods.csv");
      csv::write_text(pp, per);
      say(pp);
      std::printf("cost %.2f (quadratic %.2f), wind share %.4f, secure periods %d/%zu, %ld nodes, %.2f s\n",
                  s.pwl_cost, s.quadratic_cost, wind_share(m, s), secure, checks.size(), r.nodes, r.seconds);
    } else if (*sw) {
      SweepSpec spec;
      spec.scenario = parse_scenario(sw_scenario);
      if (!sw_shares.empty()) spec.flex_shares = parse_list(sw_shares);
      if (!sw_delays.empty()) spec.delays = parse_list(sw_delays);
      spec.dc_multiplier = sw_mult;
      spec.profile_seed = g.seed;
      spec.data_seed = g.seed;
      spec.mode = mode;
      spec.node_limit = sw_nodes;
      spec.external_solver = g.external_solver;
      spec.work_dir = g.out("work");
      if (!sw_region_dir.empty()) {
        for (double d : spec.delays) {
          const fs::path p = fs::path(sw_region_dir) / ("region_" + fmt(d) + ".json");
          if (fs::exists(p)) spec.regions[d] = load_region(p.string());
        }
      }
      const SweepResult r = run_sweep(sys, spec);
      const std::string path = g.out("sweep_" + r.scenario + ".csv");
      csv::write_text(path, sweep_csv(r));
      say(path);
      write_sweep_plots(g, r);
    } else if (*mf) {
      std::string out = "scenario,phi_i,phi_j,delay_s,mfv\n";
      std::vector<std::pair<std::string, std::vector<std::pair<double, double>>>> curves;
      for (const auto& file : mf_sweeps) {
        std::ostringstream text;
        for (const auto& l : csv::read_lines(file)) text << l << "\n";
        const SweepResult r = parse_sweep_csv(text.str());
        std::vector<double> shares;
        for (const auto& c : r.cells) {
          if (c.delay_s == mf_delay) shares.push_back(c.flex_share);
        }
        std::vector<std::pair<double, double>> pts;
        for (size_t i = 0; i + 1 < shares.size(); ++i) {
          const double v = compute_mfv(r, shares[i], shares[i + 1], mf_delay);
          out += r.scenario + "," + fmt(shares[i]) + "," + fmt(shares[i + 1]) + "," + fmt(mf_delay) + "," +
                 fmt(v) + "\n";
          pts.push_back({0.5 * (shares[i] + shares[i + 1]), v});
          std::printf("%-12s %3.0f-%3.0f%%  %.1f per %%\n", r.scenario.c_str(), 100 * shares[i],
                      100 * shares[i + 1], v);
        }
        curves.push_back({r.scenario, pts});
      }
      const std::string path = g.out("mfv.csv");
      csv::write_text(path, out);
      say(path);
      write_series(g.out("mfv.dat"), "MFV vs bracket midpoint", curves);
    } else if (*cm) {
      cmo.profile_seed = g.seed;
      const auto train = build_dataset(sys, default_grid(sys, {cmo.delay_s}, g.seed));
      const auto held = build_dataset(sys, default_grid(sys, {cmo.delay_s}, g.seed + 1000, 30, 15));
      const auto rows = compare_methods(sys, train, held, cmo);
      const std::string path = g.out("compare.csv");
      csv::write_text(path, compare_csv(rows));
      say(path);
      for (const auto& r : rows) {
        std::printf("%-5s %s halfspaces %3d  pass %.4f  NL error %.5f  cost %.1f  solve %.1f s\n",
                    r.method.c_str(), r.ok ? "ok    " : "failed", r.constraints, r.pass_rate, r.avg_nl_error,
                    r.total_cost, r.solve_seconds);
      }
    } else if (*sc) {
      const SystemCase s = scale_scenario(sys, sc_mult);
      const std::string path = g.out(s.name + ".json");
      save_case(s, path);
      say(path);
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
