#include "fsuc/milp_model.hpp"

#include <algorithm>
#include <cmath>

#include "fsuc/error.hpp"

namespace fsuc {

int MilpModel::add_var(const std::string& name, VarKind kind, double lower, double upper, double cost) {
  if (var_index_.count(name)) throw ValidationError(name, "duplicate variable name");
  if (kind == VarKind::kBinary) {
    lower = std::max(lower, 0.0);
    upper = std::min(upper, 1.0);
  }
  const int j = num_vars();
  vars_.push_back({name, kind, lower, upper, cost});
  var_index_[name] = j;
  return j;
}

int MilpModel::add_con(const std::string& name, std::vector<Term> terms, Sense sense, double rhs) {
  if (con_index_.count(name)) throw ValidationError(name, "duplicate constraint name");
  std::sort(terms.begin(), terms.end(), [](const Term& a, const Term& b) { return a.var < b.var; });
  std::vector<Term> merged;
  for (const auto& t : terms) {
    if (!merged.empty() && merged.back().var == t.var) {
      merged.back().coef += t.coef;
    } else {
      merged.push_back(t);
    }
  }
  std::erase_if(merged, [](const Term& t) { return t.coef == 0.0; });
  const int i = num_cons();
  cons_.push_back({name, std::move(merged), sense, rhs});
  con_index_[name] = i;
  return i;
}

int MilpModel::find_var(const std::string& name) const {
  auto it = var_index_.find(name);
  return it == var_index_.end() ? -1 : it->second;
}

int MilpModel::find_con(const std::string& name) const {
  auto it = con_index_.find(name);
  return it == con_index_.end() ? -1 : it->second;
}

double MilpModel::objective(const std::vector<double>& x) const {
  double f = objective_offset;
  for (size_t j = 0; j < vars_.size(); ++j) f += vars_[j].cost * x[j];
  return f;
}

double MilpModel::max_violation(const std::vector<double>& x) const {
  double v = 0.0;
  for (size_t j = 0; j < vars_.size(); ++j) {
    v = std::max({v, vars_[j].lower - x[j], x[j] - vars_[j].upper});
  }
  for (const auto& c : cons_) {
    double a = 0.0;
    for (const auto& t : c.terms) a += t.coef * x[t.var];
    if (c.sense != Sense::kGe) v = std::max(v, a - c.rhs);
    if (c.sense != Sense::kLe) v = std::max(v, c.rhs - a);
  }
  return v;
}

double MilpModel::max_fractionality(const std::vector<double>& x) const {
  double f = 0.0;
  for (size_t j = 0; j < vars_.size(); ++j) {
    if (vars_[j].is_integer()) f = std::max(f, std::abs(x[j] - std::round(x[j])));
  }
  return f;
}

void MilpModel::validate() const {
  for (const auto& v : vars_) {
    if (std::isnan(v.lower) || std::isnan(v.upper) || !std::isfinite(v.cost)) {
      throw ValidationError(v.name, "non-finite bound or cost");
    }
    if (v.lower > v.upper) throw ValidationError(v.name, "lower > upper");
    if (v.kind == VarKind::kBinary && (v.lower < 0.0 || v.upper > 1.0)) {
      throw ValidationError(v.name, "binary bounds outside [0, 1]");
    }
  }
  for (const auto& c : cons_) {
    if (!std::isfinite(c.rhs)) throw ValidationError(c.name, "non-finite right-hand side");
    for (const auto& t : c.terms) {
      if (t.var < 0 || t.var >= num_vars()) throw ValidationError(c.name, "references undeclared variable");
      if (!std::isfinite(t.coef)) throw ValidationError(c.name, "non-finite coefficient");
    }
  }
}

}  // namespace fsuc
