#pragma once

#include <Eigen/SparseCore>
#include <chrono>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "fsuc/basis_lu.hpp"
#include "fsuc/milp_model.hpp"

namespace fsuc {

// ---------------------------------------------------------------------- LP

// min c.x + offset  s.t.  row_lo <= A x <= row_hi,  col_lo <= x <= col_hi.
struct LpProblem {
  Eigen::SparseMatrix<double> A;  // rows x cols, column-major
  std::vector<double> c, col_lo, col_hi, row_lo, row_hi;
  double offset = 0.0;

  int rows() const { return static_cast<int>(A.rows()); }
  int cols() const { return static_cast<int>(A.cols()); }
};

// Continuous relaxation of a MILP.
LpProblem lp_relaxation(const MilpModel& m);

enum class LpStatus { kOptimal, kInfeasible, kUnbounded, kIterationLimit, kNumerical };
const char* to_string(LpStatus s);

struct LpResult {
  LpStatus status = LpStatus::kNumerical;
  double objective = 0.0;
  std::vector<double> x;             // structural values
  std::vector<double> row_activity;  // A x
  std::vector<double> duals;         // one per row
  std::vector<double> reduced_costs; // one per column
  int iterations = 0;
};

struct LpOptions {
  int max_iterations = 200000;
  int refactor_interval = 64;
  double primal_tol = 1e-9;
  double dual_tol = 1e-9;
  double pivot_tol = 1e-9;
  bool scale = true;
};

// Bounded dual simplex on [A -I][x; s] = 0 with logical s carrying the row
// bounds. Dual steepest-edge pricing, bound-flipping ratio test, sparse LU
// with product-form updates. Infinite bounds are replaced by a large box;
// a solution resting on that box reports kUnbounded.
class DualSimplex {
 public:
  explicit DualSimplex(const LpProblem& p, const LpOptions& opt = {});

  LpResult solve();

  // Bounds in the caller's (unscaled) units.
  void set_col_bounds(int j, double lo, double hi);
  double col_lower(int j) const;
  double col_upper(int j) const;

  struct Basis {
    std::vector<int> head;               // basic variable per row
    std::vector<std::int8_t> status;     // per variable: 0 basic, 1 lower, 2 upper
  };
  Basis basis() const;
  void set_basis(const Basis& b);

 private:
  enum : std::int8_t { kBasic = 0, kAtLower = 1, kAtUpper = 2 };

  bool refactor();
  void compute_primal();
  void compute_duals();
  void restore_dual_feasibility();
  void ftran(Eigen::VectorXd& v) const;
  void btran(Eigen::VectorXd& v) const;
  void add_column(int j, double scale, Eigen::VectorXd& v) const;
  double column_dot(int j, const Eigen::VectorXd& rho) const;
  bool boxed(int j) const;
  LpStatus iterate(int& iters);

  LpOptions opt_;
  int n_, m_;
  using RowMajor = Eigen::SparseMatrix<double, Eigen::RowMajor>;
  Eigen::SparseMatrix<double> A_;  // scaled
  RowMajor At_;                    // same, row-wise
  std::vector<double> row_scale_, col_scale_;
  std::vector<double> c_, c_orig_, lo_, hi_;  // size n + m, scaled
  std::vector<bool> art_lo_, art_hi_;
  double offset_;

  std::vector<int> head_;
  std::vector<int> pos_;  // row of basic var, -1 otherwise
  std::vector<std::int8_t> status_;
  std::vector<double> x_, d_;
  std::vector<double> dse_;

  BasisLU lu_;
  struct Eta {
    int r;
    double pivot;
    std::vector<std::pair<int, double>> col;  // off-pivot entries
  };
  std::vector<Eta> etas_;
  bool factored_ = false;
  bool perturbed_ = false;
};

LpResult solve_lp(const LpProblem& p, const LpOptions& opt = {});

// ----------------------------------------------------------------- MILP

enum class MilpStatus { kOptimal, kFeasible, kInfeasible, kUnbounded, kTimeLimit, kNodeLimit, kError };
const char* to_string(MilpStatus s);

struct SolveOptions {
  double mip_gap = 1e-4;         // relative
  double time_limit_s = 300.0;
  long node_limit = 1000000;
  double integrality_tol = 1e-6;
  bool log = false;
  // Diving and sub-MIP (RENS/RINS) primal heuristics.
  bool heuristics = true;
  // Optional starting incumbent (checked for feasibility before use).
  std::optional<std::vector<double>> initial_solution;
  LpOptions lp;
};

struct SolveResult {
  MilpStatus status = MilpStatus::kError;
  double objective = 0.0;
  double best_bound = 0.0;
  double gap = 0.0;
  std::vector<double> x;
  long nodes = 0;
  long lp_iterations = 0;
  double seconds = 0.0;
  std::string message;
};

// Best-bound branch and bound with depth-first plunging and warm-started
// dual simplex at every node.
SolveResult solve_milp(const MilpModel& m, const SolveOptions& opt = {});

// -------------------------------------------------------------------- MPS

struct MpsNames {
  std::vector<std::string> var;  // exported name per variable
  std::vector<std::string> con;  // exported name per row
};

// Fixed-format sections; names longer than 8 characters or containing
// blanks are replaced by C<index> / R<index> (mapping in `names`).
std::string write_mps(const MilpModel& m, MpsNames* names = nullptr);
void write_mps_file(const MilpModel& m, const std::string& path, MpsNames* names = nullptr);
// Whitespace-separated reader for NAME/ROWS/COLUMNS/RHS/RANGES/BOUNDS/
// ENDATA with MARKER integer blocks and BV/LI/UI/FR/MI/PL/FX bounds.
MilpModel read_mps(const std::string& text);
MilpModel read_mps_file(const std::string& path);

// Runs `<solver> <model.mps> <solution.txt>`; the solver writes one
// `name value` pair per line. Returns kError with a message on failure.
SolveResult solve_external(const MilpModel& m, const std::string& solver_path,
                           const std::string& work_dir, double time_limit_s = 300.0);

}  // namespace fsuc
