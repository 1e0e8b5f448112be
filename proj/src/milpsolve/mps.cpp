#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <set>
#include <sstream>

#include "fsuc/csv.hpp"
#include "fsuc/error.hpp"
#include "fsuc/milpsolve.hpp"

namespace fsuc {

namespace {

constexpr const char* kObjRow = "COST";

bool valid_name(const std::string& s) {
  if (s.empty() || s.size() > 8 || s[0] == '$' || s[0] == '*') return false;
  return std::none_of(s.begin(), s.end(), [](unsigned char ch) { return std::isspace(ch) || ch == '\''; });
}

// Keeps short, blank-free names; everything else becomes <prefix><index>,
// skipping over any generated name already taken.
std::vector<std::string> export_names(const std::vector<std::string>& in, char prefix,
                                      const std::set<std::string>& reserved) {
  std::vector<std::string> out(in.size());
  std::set<std::string> used(reserved);
  std::vector<bool> keep(in.size(), false);
  for (size_t i = 0; i < in.size(); ++i) {
    if (valid_name(in[i]) && !used.count(in[i])) {
      keep[i] = true;
      used.insert(in[i]);
      out[i] = in[i];
    }
  }
  for (size_t i = 0; i < in.size(); ++i) {
    if (keep[i]) continue;
    std::string cand = prefix + std::to_string(i);
    for (char alt = 'A'; used.count(cand) || cand.size() > 8; ++alt) {
      if (alt > 'Z') throw Error("mps: cannot generate a unique name for '" + in[i] + "'");
      cand = std::string(1, alt) + std::to_string(i);
    }
    used.insert(cand);
    out[i] = cand;
  }
  return out;
}

std::string pad(const std::string& s, size_t w) {
  return s.size() >= w ? s : s + std::string(w - s.size(), ' ');
}

// Fixed-format data line: fields at columns 2, 5, 15, 25. Long numbers
// spill past column 36 rather than losing digits.
std::string line(const std::string& f1, const std::string& f2, const std::string& f3 = "",
                 const std::string& f4 = "") {
  std::string s = " " + pad(f1, 2) + " " + pad(f2, 8);
  if (!f3.empty() || !f4.empty()) s += "  " + pad(f3, 8);
  if (!f4.empty()) s += "  " + f4;
  while (!s.empty() && s.back() == ' ') s.pop_back();
  return s + "\n";
}

std::string num(double v) { return csv::format_double(v); }

}  // namespace

std::string write_mps(const MilpModel& m, MpsNames* names) {
  m.validate();
  std::vector<std::string> vn, cn;
  for (const auto& v : m.vars()) vn.push_back(v.name);
  for (const auto& c : m.cons()) cn.push_back(c.name);
  MpsNames map{export_names(vn, 'C', {}), export_names(cn, 'R', {kObjRow})};

  std::ostringstream o;
  o << "NAME          " << (valid_name(m.name) ? m.name : std::string("MODEL")) << "\n";
  for (size_t j = 0; j < vn.size(); ++j) {
    if (map.var[j] != vn[j]) o << "* column " << map.var[j] << " = " << vn[j] << "\n";
  }
  for (size_t i = 0; i < cn.size(); ++i) {
    if (map.con[i] != cn[i]) o << "* row " << map.con[i] << " = " << cn[i] << "\n";
  }

  o << "ROWS\n" << line("N", kObjRow);
  for (int i = 0; i < m.num_cons(); ++i) {
    const auto s = m.cons()[i].sense;
    o << line(s == Sense::kLe ? "L" : s == Sense::kGe ? "G" : "E", map.con[i]);
  }

  std::vector<std::vector<std::pair<int, double>>> cols(m.num_vars());
  for (int i = 0; i < m.num_cons(); ++i) {
    for (const auto& t : m.cons()[i].terms) cols[t.var].push_back({i, t.coef});
  }
  o << "COLUMNS\n";
  bool in_int = false;
  for (int j = 0; j < m.num_vars(); ++j) {
    const auto& v = m.vars()[j];
    if (v.is_integer() != in_int) {
      in_int = v.is_integer();
      o << "    MARKER                 'MARKER'                 " << (in_int ? "'INTORG'" : "'INTEND'")
        << "\n";
    }
    // Every column appears at least once so that empty columns survive.
    if (v.cost != 0.0 || cols[j].empty()) o << line("", map.var[j], kObjRow, num(v.cost));
    for (const auto& [i, a] : cols[j]) o << line("", map.var[j], map.con[i], num(a));
  }
  if (in_int) o << "    MARKER                 'MARKER'                 'INTEND'\n";

  o << "RHS\n";
  if (m.objective_offset != 0.0) o << line("", "RHS", kObjRow, num(-m.objective_offset));
  for (int i = 0; i < m.num_cons(); ++i) {
    if (m.cons()[i].rhs != 0.0) o << line("", "RHS", map.con[i], num(m.cons()[i].rhs));
  }

  std::ostringstream b;
  for (int j = 0; j < m.num_vars(); ++j) {
    const auto& v = m.vars()[j];
    const auto& n = map.var[j];
    if (v.kind == VarKind::kBinary && v.lower == 0.0 && v.upper == 1.0) {
      b << line("BV", "BND", n);
      continue;
    }
    const bool lo_inf = std::isinf(v.lower), hi_inf = std::isinf(v.upper);
    if (v.lower == v.upper) {
      b << line("FX", "BND", n, num(v.lower));
    } else if (lo_inf && hi_inf) {
      b << line("FR", "BND", n);
    } else {
      if (lo_inf) {
        b << line("MI", "BND", n);
      } else if (v.lower != 0.0) {
        b << line("LO", "BND", n, num(v.lower));
      }
      // Integer columns always state their upper bound: some readers
      // default an unbounded integer column to [0, 1].
      if (!hi_inf) {
        b << line("UP", "BND", n, num(v.upper));
      } else if (v.is_integer()) {
        b << line("PL", "BND", n);
      }
    }
  }
  const std::string bounds = b.str();
  if (!bounds.empty()) o << "BOUNDS\n" << bounds;
  o << "ENDATA\n";
  if (names) *names = std::move(map);
  return o.str();
}

void write_mps_file(const MilpModel& m, const std::string& path, MpsNames* names) {
  csv::write_text(path, write_mps(m, names));
}

namespace {

std::vector<std::string> tokens(const std::string& s) {
  std::istringstream in(s);
  std::vector<std::string> out;
  for (std::string t; in >> t;) out.push_back(t);
  return out;
}

double mps_number(std::string t, const std::string& where) {
  if (!t.empty() && t[0] == '+') t.erase(0, 1);
  return csv::parse_double(t, where);
}

struct Row {
  std::string name;
  char type;
  double rhs = 0.0;
  std::optional<double> range;
};

struct Col {
  std::string name;
  VarKind kind = VarKind::kContinuous;
  double lo = 0.0, hi = kInfinity, cost = 0.0;
  std::vector<std::pair<int, double>> entries;
};

}  // namespace

MilpModel read_mps(const std::string& text) {
  MilpModel m;
  std::string section;
  std::string obj_name;
  bool maximize = false;
  double obj_rhs = 0.0;
  std::vector<Row> rows;
  std::map<std::string, int> row_index;
  std::vector<Col> cols;
  std::map<std::string, int> col_index;
  bool in_int = false;

  std::istringstream in(text);
  std::string raw;
  int lineno = 0;
  auto find_col = [&](const std::string& n, const std::string& where) {
    auto it = col_index.find(n);
    if (it == col_index.end()) throw ParseError(where, "unknown column '" + n + "'");
    return it->second;
  };
  // Returns -1 for the objective row.
  auto find_row = [&](const std::string& n, const std::string& where) {
    if (n == obj_name) return -1;
    auto it = row_index.find(n);
    if (it == row_index.end()) throw ParseError(where, "unknown row '" + n + "'");
    return it->second;
  };

  while (std::getline(in, raw)) {
    ++lineno;
    if (!raw.empty() && raw.back() == '\r') raw.pop_back();
    if (raw.empty() || raw[0] == '*') continue;
    const std::string where = "line " + std::to_string(lineno);
    auto tk = tokens(raw);
    if (tk.empty()) continue;

    if (!std::isspace(static_cast<unsigned char>(raw[0]))) {
      section = tk[0];
      if (section == "NAME") {
        if (tk.size() > 1) m.name = tk[1];
      } else if (section == "OBJSENSE" && tk.size() > 1) {
        maximize = tk[1] == "MAX" || tk[1] == "MAXIMIZE";
      } else if (section == "ENDATA") {
        break;
      } else if (section != "ROWS" && section != "COLUMNS" && section != "RHS" && section != "RANGES" &&
                 section != "BOUNDS" && section != "OBJSENSE") {
        throw ParseError(where, "unknown section '" + section + "'");
      }
      continue;
    }

    if (section == "OBJSENSE") {
      maximize = tk[0] == "MAX" || tk[0] == "MAXIMIZE";
    } else if (section == "ROWS") {
      if (tk.size() != 2 || tk[0].size() != 1) throw ParseError(where, "expected '<type> <row>'");
      const char t = static_cast<char>(std::toupper(static_cast<unsigned char>(tk[0][0])));
      if (t == 'N') {
        if (obj_name.empty()) obj_name = tk[1];  // later free rows are ignored
        continue;
      }
      if (t != 'L' && t != 'G' && t != 'E') throw ParseError(where, "bad row type '" + tk[0] + "'");
      if (row_index.count(tk[1])) throw ParseError(where, "duplicate row '" + tk[1] + "'");
      row_index[tk[1]] = static_cast<int>(rows.size());
      rows.push_back({tk[1], t, 0.0, std::nullopt});
    } else if (section == "COLUMNS") {
      if (tk.size() >= 3 && tk[1] == "'MARKER'") {
        if (tk[2] == "'INTORG'") {
          in_int = true;
        } else if (tk[2] == "'INTEND'") {
          in_int = false;
        } else {
          throw ParseError(where, "bad marker '" + tk[2] + "'");
        }
        continue;
      }
      if (tk.size() != 3 && tk.size() != 5) throw ParseError(where, "expected '<col> <row> <value> ...'");
      int j;
      auto it = col_index.find(tk[0]);
      if (it == col_index.end()) {
        j = static_cast<int>(cols.size());
        col_index[tk[0]] = j;
        Col c;
        c.name = tk[0];
        if (in_int) c.kind = VarKind::kInteger;
        cols.push_back(c);
      } else {
        j = it->second;
      }
      for (size_t k = 1; k + 1 < tk.size(); k += 2) {
        const double a = mps_number(tk[k + 1], where);
        const int r = find_row(tk[k], where);
        if (r < 0) {
          cols[j].cost += a;
        } else {
          cols[j].entries.push_back({r, a});
        }
      }
    } else if (section == "RHS" || section == "RANGES") {
      // Optional set name in front.
      const size_t first = (tk.size() % 2 == 1) ? 1 : 0;
      if (tk.size() < 2) throw ParseError(where, "expected '[set] <row> <value>'");
      for (size_t k = first; k + 1 < tk.size(); k += 2) {
        const double v = mps_number(tk[k + 1], where);
        const int r = find_row(tk[k], where);
        if (section == "RHS") {
          if (r < 0) {
            obj_rhs = v;
          } else {
            rows[r].rhs = v;
          }
        } else {
          if (r < 0) throw ParseError(where, "range on the objective row");
          rows[r].range = v;
        }
      }
    } else if (section == "BOUNDS") {
      const std::string type = tk[0];
      const bool valueless = type == "FR" || type == "MI" || type == "PL" || type == "BV";
      std::string col;
      std::optional<double> val;
      if (valueless) {
        if (tk.size() < 2 || tk.size() > 4) throw ParseError(where, "bad bound line");
        col = tk.size() == 2 ? tk[1] : tk[2];
      } else {
        if (tk.size() == 3) {
          col = tk[1];
          val = mps_number(tk[2], where);
        } else if (tk.size() == 4) {
          col = tk[2];
          val = mps_number(tk[3], where);
        } else {
          throw ParseError(where, "bad bound line");
        }
      }
      Col& c = cols[find_col(col, where)];
      if (type == "UP") {
        c.hi = *val;
      } else if (type == "LO") {
        c.lo = *val;
      } else if (type == "FX") {
        c.lo = c.hi = *val;
      } else if (type == "FR") {
        c.lo = -kInfinity;
        c.hi = kInfinity;
      } else if (type == "MI") {
        c.lo = -kInfinity;
      } else if (type == "PL") {
        c.hi = kInfinity;
      } else if (type == "BV") {
        c.kind = VarKind::kBinary;
        c.lo = 0.0;
        c.hi = 1.0;
      } else if (type == "LI" || type == "UI") {
        c.kind = VarKind::kInteger;
        (type == "LI" ? c.lo : c.hi) = *val;
      } else {
        throw ParseError(where, "unknown bound type '" + type + "'");
      }
    } else {
      throw ParseError(where, "data outside a section");
    }
  }
  if (obj_name.empty()) throw ParseError("ROWS", "no objective row");

  const double sign = maximize ? -1.0 : 1.0;
  m.objective_offset = -sign * obj_rhs;
  for (const auto& c : cols) m.add_var(c.name, c.kind, c.lo, c.hi, sign * c.cost);
  std::vector<std::vector<Term>> terms(rows.size());
  for (size_t j = 0; j < cols.size(); ++j) {
    for (const auto& [r, a] : cols[j].entries) terms[r].push_back({static_cast<int>(j), a});
  }
  for (size_t i = 0; i < rows.size(); ++i) {
    const Row& r = rows[i];
    if (!r.range) {
      m.add_con(r.name, terms[i], r.type == 'L' ? Sense::kLe : r.type == 'G' ? Sense::kGe : Sense::kEq, r.rhs);
      continue;
    }
    // A ranged row becomes a pair of one-sided rows.
    const double R = *r.range;
    double lo, hi;
    if (r.type == 'L') {
      lo = r.rhs - std::abs(R);
      hi = r.rhs;
    } else if (r.type == 'G') {
      lo = r.rhs;
      hi = r.rhs + std::abs(R);
    } else {
      lo = R < 0 ? r.rhs + R : r.rhs;
      hi = R < 0 ? r.rhs : r.rhs + R;
    }
    m.add_con(r.name, terms[i], Sense::kGe, lo);
    m.add_con(r.name + "_rng", terms[i], Sense::kLe, hi);
  }
  m.validate();
  return m;
}

MilpModel read_mps_file(const std::string& path) {
  std::string text;
  for (const auto& l : csv::read_lines(path)) text += l + "\n";
  return read_mps(text);
}

}  // namespace fsuc
