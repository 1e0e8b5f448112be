#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <map>
#include <sstream>

#include "fsuc/csv.hpp"
#include "fsuc/error.hpp"
#include "fsuc/milpsolve.hpp"

namespace fsuc {

namespace {

std::string shell_quote(const std::string& s) {
  std::string out = "'";
  for (char ch : s) {
    if (ch == '\'') {
      out += "'\\''";
    } else {
      out += ch;
    }
  }
  return out + "'";
}

}  // namespace

SolveResult solve_external(const MilpModel& m, const std::string& solver_path, const std::string& work_dir,
                           double time_limit_s) {
  namespace fs = std::filesystem;
  SolveResult res;
  const auto t0 = std::chrono::steady_clock::now();
  MpsNames names;
  std::error_code ec;
  fs::create_directories(work_dir, ec);
  const std::string mps = (fs::path(work_dir) / "model.mps").string();
  const std::string sol = (fs::path(work_dir) / "solution.txt").string();
  try {
    write_mps_file(m, mps, &names);
  } catch (const Error& e) {
    res.message = e.what();
    return res;
  }
  fs::remove(sol, ec);

  // The limit is passed through the environment; solvers may ignore it.
  const std::string cmd = "FSUC_TIME_LIMIT=" + csv::format_double(time_limit_s) + " " + shell_quote(solver_path) +
                          " " + shell_quote(mps) + " " + shell_quote(sol);
  const int rc = std::system(cmd.c_str());
  res.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if (rc != 0) {
    res.message = "external solver exited with status " + std::to_string(rc);
    return res;
  }
  if (!fs::exists(sol)) {
    res.message = "external solver wrote no solution file";
    return res;
  }

  std::map<std::string, int> index;
  for (int j = 0; j < m.num_vars(); ++j) index[names.var[j]] = j;
  res.x.assign(m.num_vars(), 0.0);  // absent columns are taken as zero
  std::string declared;
  try {
    int lineno = 0;
    for (const auto& l : csv::read_lines(sol)) {
      ++lineno;
      std::istringstream in(l);
      std::string name, value;
      if (!(in >> name) || name[0] == '#') continue;
      if (!(in >> value)) throw ParseError("solution line " + std::to_string(lineno), "missing value");
      if (name == "status") {
        declared = value;
        continue;
      }
      if (name == "objective") continue;
      auto it = index.find(name);
      if (it == index.end()) {
        throw ParseError("solution line " + std::to_string(lineno), "unknown variable '" + name + "'");
      }
      res.x[it->second] = csv::parse_double(value, "solution line " + std::to_string(lineno));
    }
  } catch (const Error& e) {
    res.message = e.what();
    res.x.clear();
    return res;
  }

  if (declared == "infeasible") {
    res.status = MilpStatus::kInfeasible;
    res.x.clear();
    return res;
  }
  const double viol = m.max_violation(res.x);
  const double frac = m.max_fractionality(res.x);
  if (viol > 1e-6 * std::max(1.0, [&] {
        double s = 0.0;
        for (const auto& c : m.cons()) s = std::max(s, std::abs(c.rhs));
        return s;
      }()) || frac > 1e-6) {
    res.message = "external solution violates the model (violation " + csv::format_double(viol) +
                  ", fractionality " + csv::format_double(frac) + ")";
    return res;
  }
  res.objective = m.objective(res.x);
  res.best_bound = res.objective;
  if (declared == "optimal") {
    res.status = MilpStatus::kOptimal;
  } else if (res.seconds > time_limit_s) {
    res.status = MilpStatus::kTimeLimit;
  } else {
    res.status = MilpStatus::kFeasible;
  }
  res.message = "external: " + solver_path;
  return res;
}

}  // namespace fsuc
