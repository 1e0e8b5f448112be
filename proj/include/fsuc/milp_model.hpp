#pragma once

#include <limits>
#include <map>
#include <string>
#include <vector>

namespace fsuc {

inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

enum class VarKind { kContinuous, kBinary, kInteger };
enum class Sense { kLe, kGe, kEq };

struct Variable {
  std::string name;
  VarKind kind = VarKind::kContinuous;
  double lower = 0.0;
  double upper = kInfinity;
  double cost = 0.0;

  bool is_integer() const { return kind != VarKind::kContinuous; }
};

struct Term {
  int var = 0;
  double coef = 0.0;
};

struct Constraint {
  std::string name;
  std::vector<Term> terms;  // sorted by var, no duplicates, no zeros
  Sense sense = Sense::kLe;
  double rhs = 0.0;
};

// Minimization MILP: min c.x + offset subject to rows and bounds.
class MilpModel {
 public:
  std::string name = "model";
  double objective_offset = 0.0;

  int add_var(const std::string& name, VarKind kind, double lower, double upper, double cost = 0.0);
  // Merges duplicate variables and drops zero coefficients.
  int add_con(const std::string& name, std::vector<Term> terms, Sense sense, double rhs);

  const std::vector<Variable>& vars() const { return vars_; }
  const std::vector<Constraint>& cons() const { return cons_; }
  Variable& var(int j) { return vars_.at(j); }
  int num_vars() const { return static_cast<int>(vars_.size()); }
  int num_cons() const { return static_cast<int>(cons_.size()); }
  // -1 when absent.
  int find_var(const std::string& name) const;
  int find_con(const std::string& name) const;

  double objective(const std::vector<double>& x) const;
  // Largest bound or row violation of x.
  double max_violation(const std::vector<double>& x) const;
  // Largest distance of an integer variable from the nearest integer.
  double max_fractionality(const std::vector<double>& x) const;

  // Throws ValidationError on dangling indices, non-finite coefficients,
  // lower > upper, or binaries outside [0, 1].
  void validate() const;

 private:
  std::vector<Variable> vars_;
  std::vector<Constraint> cons_;
  std::map<std::string, int> var_index_;
  std::map<std::string, int> con_index_;
};

}  // namespace fsuc
