#include "fsuc/sysmodel.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

#include <json.hpp>

#include "fsuc/csv.hpp"
#include "fsuc/error.hpp"
#include "fsuc/rng.hpp"

namespace fsuc {

using nlohmann::json;

double SystemCase::conventional_capacity() const {
  double s = 0.0;
  for (const auto& g : generators) s += g.p_max;
  return s;
}

double SystemCase::dc_peak() const {
  double s = 0.0;
  for (const auto& d : data_centers) s += d.peak_mw;
  return s;
}

double SystemCase::peak_demand() const { return base_load_mw + dc_peak(); }

namespace {

void require(bool ok, const std::string& field, const std::string& what) {
  if (!ok) throw ValidationError(field, what);
}

bool finite(double v) { return std::isfinite(v); }

}  // namespace

void validate(const SystemCase& c) {
  require(!c.generators.empty(), "generators", "at least one generator required");
  for (size_t i = 0; i < c.generators.size(); ++i) {
    const auto& g = c.generators[i];
    const std::string f = "generators[" + std::to_string(i) + "]";
    for (double v : {g.p_min, g.p_max, g.ramp_up, g.ramp_down, g.inertia_const, g.cost_quad,
                     g.cost_lin, g.cost_fix, g.ffr_capacity, g.ffr_start, g.ffr_full}) {
      require(finite(v), f, "non-finite value");
    }
    require(g.p_min >= 0.0, f + ".p_min", "must be >= 0");
    require(g.p_min <= g.p_max, f + ".p_min", "p_min > p_max");
    require(g.ramp_up > 0.0, f + ".ramp_up", "must be > 0");
    require(g.ramp_down > 0.0, f + ".ramp_down", "must be > 0");
    require(g.min_up >= 1, f + ".min_up", "must be >= 1");
    require(g.min_down >= 1, f + ".min_down", "must be >= 1");
    require(g.inertia_const >= 0.0, f + ".inertia_const", "must be >= 0");
    require(g.cost_quad >= 0.0, f + ".cost_quad", "must be >= 0 (convex cost)");
    require(g.ffr_capacity >= 0.0, f + ".ffr_capacity", "must be >= 0");
    require(g.ffr_start >= 0.0, f + ".ffr_start", "must be >= 0");
    require(g.ffr_start < g.ffr_full, f + ".ffr_start", "ffr_start must precede ffr_full");
  }
  for (size_t i = 0; i < c.data_centers.size(); ++i) {
    const auto& d = c.data_centers[i];
    const std::string f = "data_centers[" + std::to_string(i) + "]";
    require(finite(d.peak_mw) && d.peak_mw > 0.0, f + ".peak_mw", "must be > 0");
    require(d.flexible_share >= 0.0 && d.flexible_share <= 1.0, f + ".flexible_share",
            "must lie in [0, 1]");
    require(d.ffr_start >= 0.0, f + ".ffr_start", "must be >= 0");
    require(d.ffr_start < d.ffr_full, f + ".ffr_start", "ffr_start must precede ffr_full");
    require(d.gamma_lin >= 0.0 && d.gamma_quad >= 0.0, f + ".gamma", "must be >= 0");
  }
  require(finite(c.wind_capacity_mw) && c.wind_capacity_mw >= 0.0, "wind_capacity_mw",
          "must be >= 0");
  require(finite(c.base_load_mw) && c.base_load_mw >= 0.0, "system.base_load_mw", "must be >= 0");
  require(c.horizon >= 1, "system.horizon", "must be >= 1");
  require(c.period_hours > 0.0, "system.period_hours", "must be > 0");
  require(c.f0 == 50.0 || c.f0 == 60.0, "system.f0", "must be 50 or 60");
  require(c.damping >= 0.0, "system.damping", "must be >= 0");
  require(c.dP_L_max >= 0.0, "system.dP_L_max", "must be >= 0");
  require(c.load_inertia_const >= 0.0, "system.load_inertia_const", "must be >= 0");
  require(c.rocof_max > 0.0, "system.rocof_max", "must be > 0");
  require(c.nadir_limit_hz < c.f0, "system.nadir_limit_hz", "must be below f0");
  require(c.deadband_hz >= 0.0, "system.deadband_hz", "must be >= 0");
  require(c.qss_xi >= 0.0 && c.qss_lambda >= 0.0, "system.qss", "coefficients must be >= 0");
  require(c.fleet_scale > 0.0, "fleet_scale", "must be > 0");
}

void validate(const Profiles& p, int horizon) {
  auto check = [&](const std::vector<double>& v, const char* name, bool open_low) {
    require(static_cast<int>(v.size()) == horizon, name, "length differs from horizon");
    for (size_t t = 0; t < v.size(); ++t) {
      bool ok = std::isfinite(v[t]) && v[t] <= 1.0 && (open_low ? v[t] > 0.0 : v[t] >= 0.0);
      require(ok, std::string(name) + "[" + std::to_string(t) + "]", "out of bounds");
    }
  };
  check(p.dc_alpha, "dc_alpha", false);
  check(p.wind_cf, "wind_cf", false);
  check(p.load_factor, "load_factor", true);
}

// ---------------------------------------------------------------------------
// Case file

namespace {

// Translates a byte offset into "line N" for parse errors.
std::string line_of(const std::string& text, size_t byte) {
  size_t line = 1;
  for (size_t i = 0; i < std::min(byte, text.size()); ++i) {
    if (text[i] == '\n') ++line;
  }
  return "line " + std::to_string(line);
}

double number(const json& obj, const char* key, const std::string& path, bool required = true,
              double fallback = 0.0) {
  auto it = obj.find(key);
  if (it == obj.end()) {
    if (!required) return fallback;
    throw ParseError(path + "." + key, "missing field");
  }
  if (!it->is_number()) throw ParseError(path + "." + key, "expected a number");
  return it->get<double>();
}

int integer(const json& obj, const char* key, const std::string& path) {
  auto it = obj.find(key);
  if (it == obj.end()) throw ParseError(path + "." + key, "missing field");
  if (!it->is_number_integer()) throw ParseError(path + "." + key, "expected an integer");
  return it->get<int>();
}

std::string text_field(const json& obj, const char* key, const std::string& path) {
  auto it = obj.find(key);
  if (it == obj.end()) throw ParseError(path + "." + key, "missing field");
  if (!it->is_string()) throw ParseError(path + "." + key, "expected a string");
  return it->get<std::string>();
}

const json& array_field(const json& obj, const char* key) {
  auto it = obj.find(key);
  if (it == obj.end()) throw ParseError(key, "missing field");
  if (!it->is_array()) throw ParseError(key, "expected an array");
  return *it;
}

}  // namespace

SystemCase parse_case(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(line_of(text, e.byte == 0 ? 0 : e.byte - 1), e.what());
  }
  if (!doc.is_object()) throw ParseError("line 1", "case document must be an object");

  SystemCase c;
  if (doc.contains("name") && doc["name"].is_string()) c.name = doc["name"].get<std::string>();

  const json& gens = array_field(doc, "generators");
  for (size_t i = 0; i < gens.size(); ++i) {
    const std::string p = "generators[" + std::to_string(i) + "]";
    const json& j = gens[i];
    if (!j.is_object()) throw ParseError(p, "expected an object");
    Generator g;
    g.id = text_field(j, "id", p);
    g.p_min = number(j, "p_min", p);
    g.p_max = number(j, "p_max", p);
    g.ramp_up = number(j, "ramp_up", p);
    g.ramp_down = number(j, "ramp_down", p);
    g.min_up = integer(j, "min_up", p);
    g.min_down = integer(j, "min_down", p);
    g.inertia_const = number(j, "inertia_const", p);
    g.cost_quad = number(j, "cost_quad", p);
    g.cost_lin = number(j, "cost_lin", p);
    g.cost_fix = number(j, "cost_fix", p);
    g.ffr_capacity = number(j, "ffr_capacity", p);
    g.ffr_start = number(j, "ffr_start", p);
    g.ffr_full = number(j, "ffr_full", p);
    c.generators.push_back(std::move(g));
  }

  c.wind_capacity_mw = number(doc, "wind_capacity_mw", "case");

  const json& dcs = array_field(doc, "data_centers");
  for (size_t i = 0; i < dcs.size(); ++i) {
    const std::string p = "data_centers[" + std::to_string(i) + "]";
    const json& j = dcs[i];
    if (!j.is_object()) throw ParseError(p, "expected an object");
    DataCenter d;
    d.id = text_field(j, "id", p);
    d.peak_mw = number(j, "peak_mw", p);
    d.flexible_share = number(j, "flexible_share", p);
    d.ffr_start = number(j, "ffr_start", p);
    d.ffr_full = number(j, "ffr_full", p);
    d.gamma_lin = number(j, "gamma_lin", p);
    d.gamma_quad = number(j, "gamma_quad", p);
    c.data_centers.push_back(std::move(d));
  }

  auto sit = doc.find("system");
  if (sit == doc.end() || !sit->is_object()) throw ParseError("system", "missing object");
  const json& s = *sit;
  c.f0 = number(s, "f0", "system");
  c.damping = number(s, "damping", "system");
  c.dP_L_max = number(s, "dP_L_max", "system");
  c.rocof_max = number(s, "rocof_max", "system");
  c.nadir_limit_hz = number(s, "nadir_limit_hz", "system");
  c.deadband_hz = number(s, "deadband_hz", "system");
  c.qss_xi = number(s, "qss_xi", "system");
  c.qss_lambda = number(s, "qss_lambda", "system");
  c.load_inertia_const = number(s, "load_inertia_const", "system");
  c.horizon = integer(s, "horizon", "system");
  c.period_hours = number(s, "period_hours", "system");
  c.base_load_mw = number(s, "base_load_mw", "system");
  c.fleet_scale = number(doc, "fleet_scale", "case", false, 1.0);

  validate(c);
  return c;
}

SystemCase load_case(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open case file " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  try {
    return parse_case(ss.str());
  } catch (const ParseError& e) {
    throw ParseError(path + ": " + e.where(), std::string(e.what()).substr(e.where().size() + 2));
  }
}

std::string serialize_case(const SystemCase& c) {
  json doc;
  doc["name"] = c.name;
  json gens = json::array();
  for (const auto& g : c.generators) {
    gens.push_back({{"id", g.id},
                    {"p_min", g.p_min},
                    {"p_max", g.p_max},
                    {"ramp_up", g.ramp_up},
                    {"ramp_down", g.ramp_down},
                    {"min_up", g.min_up},
                    {"min_down", g.min_down},
                    {"inertia_const", g.inertia_const},
                    {"cost_quad", g.cost_quad},
                    {"cost_lin", g.cost_lin},
                    {"cost_fix", g.cost_fix},
                    {"ffr_capacity", g.ffr_capacity},
                    {"ffr_start", g.ffr_start},
                    {"ffr_full", g.ffr_full}});
  }
  doc["generators"] = std::move(gens);
  doc["wind_capacity_mw"] = c.wind_capacity_mw;
  json dcs = json::array();
  for (const auto& d : c.data_centers) {
    dcs.push_back({{"id", d.id},
                   {"peak_mw", d.peak_mw},
                   {"flexible_share", d.flexible_share},
                   {"ffr_start", d.ffr_start},
                   {"ffr_full", d.ffr_full},
                   {"gamma_lin", d.gamma_lin},
                   {"gamma_quad", d.gamma_quad}});
  }
  doc["data_centers"] = std::move(dcs);
  doc["system"] = {{"f0", c.f0},
                   {"damping", c.damping},
                   {"dP_L_max", c.dP_L_max},
                   {"rocof_max", c.rocof_max},
                   {"nadir_limit_hz", c.nadir_limit_hz},
                   {"deadband_hz", c.deadband_hz},
                   {"qss_xi", c.qss_xi},
                   {"qss_lambda", c.qss_lambda},
                   {"load_inertia_const", c.load_inertia_const},
                   {"horizon", c.horizon},
                   {"period_hours", c.period_hours},
                   {"base_load_mw", c.base_load_mw}};
  doc["fleet_scale"] = c.fleet_scale;
  return doc.dump(2) + "\n";
}

void save_case(const SystemCase& c, const std::string& path) {
  csv::write_text(path, serialize_case(c));
}

// ---------------------------------------------------------------------------
// Profiles

Profiles generate_profiles(const SystemCase& c, std::uint64_t seed) {
  constexpr double kTwoPi = 2.0 * std::numbers::pi;
  Rng rng(seed);
  Profiles p;
  const int n = std::max(c.horizon, 1);
  p.dc_alpha.resize(n);
  p.wind_cf.resize(n);
  p.load_factor.resize(n);
  for (int t = 0; t < n; ++t) {
    const double hour = static_cast<double>(t % 24);
    // Data-center utilisation peaks early afternoon, wind peaks at night,
    // other demand peaks in the early evening.
    double alpha = 0.72 + 0.18 * std::cos(kTwoPi * (hour - 14.0) / 24.0) + 0.02 * rng.normal();
    double wind = 0.42 + 0.14 * std::cos(kTwoPi * (hour - 3.0) / 24.0) + 0.04 * rng.normal();
    double load = 0.80 + 0.16 * std::cos(kTwoPi * (hour - 18.0) / 24.0) + 0.015 * rng.normal();
    p.dc_alpha[t] = std::clamp(alpha, 0.0, 1.0);
    p.wind_cf[t] = std::clamp(wind, 0.0, 1.0);
    p.load_factor[t] = std::clamp(load, 0.05, 1.0);
  }
  return p;
}

std::string serialize_profiles(const Profiles& p) {
  std::string out = "t,dc_alpha,wind_cf,load_factor\n";
  for (int t = 0; t < p.horizon(); ++t) {
    out += std::to_string(t) + "," + csv::format_double(p.dc_alpha[t]) + "," +
           csv::format_double(p.wind_cf[t]) + "," + csv::format_double(p.load_factor[t]) + "\n";
  }
  return out;
}

Profiles parse_profiles(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || csv::trim(line) != "t,dc_alpha,wind_cf,load_factor") {
    throw ParseError("line 1", "expected header t,dc_alpha,wind_cf,load_factor");
  }
  Profiles p;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (csv::trim(line).empty()) continue;
    const std::string where = "line " + std::to_string(lineno);
    auto cols = csv::split(csv::trim(line));
    if (cols.size() != 4) throw ParseError(where, "expected 4 columns");
    if (csv::parse_int(cols[0], where) != p.horizon()) throw ParseError(where, "t out of sequence");
    p.dc_alpha.push_back(csv::parse_double(cols[1], where));
    p.wind_cf.push_back(csv::parse_double(cols[2], where));
    p.load_factor.push_back(csv::parse_double(cols[3], where));
  }
  validate(p, p.horizon());
  return p;
}

void save_profiles(const Profiles& p, const std::string& path) {
  csv::write_text(path, serialize_profiles(p));
}

Profiles load_profiles(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open profiles file " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_profiles(ss.str());
}

double dc_load_at(const SystemCase& c, const Profiles& p, int t) {
  if (t < 0 || t >= p.horizon()) {
    throw DomainError("period " + std::to_string(t) + " outside [0, " +
                      std::to_string(p.horizon()) + ")");
  }
  return p.dc_alpha[t] * c.dc_peak();
}

double other_load_at(const SystemCase& c, const Profiles& p, int t) {
  if (t < 0 || t >= p.horizon()) throw DomainError("period out of range");
  return p.load_factor[t] * c.base_load_mw;
}

double wind_available_at(const SystemCase& c, const Profiles& p, int t) {
  if (t < 0 || t >= p.horizon()) throw DomainError("period out of range");
  return p.wind_cf[t] * c.wind_capacity_mw;
}

}  // namespace fsuc
