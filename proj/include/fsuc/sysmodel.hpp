#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace fsuc {

// Thermal unit. Costs follow cost_quad * P^2 + cost_lin * P + cost_fix per
// hour when committed. FFR ramps from 0 at ffr_start to ffr_capacity at
// ffr_full (seconds after the deadband is reached).
struct Generator {
  std::string id;
  double p_min = 0.0;
  double p_max = 0.0;
  double ramp_up = 0.0;    // MW per period
  double ramp_down = 0.0;  // MW per period
  int min_up = 1;          // periods
  int min_down = 1;        // periods
  double inertia_const = 0.0;  // s
  double cost_quad = 0.0;  // $/MW^2h
  double cost_lin = 0.0;   // $/MWh
  double cost_fix = 0.0;   // $/h
  double ffr_capacity = 0.0;  // MW
  double ffr_start = 0.0;     // s
  double ffr_full = 1.0;      // s

  bool operator==(const Generator&) const = default;
};

// Data center whose batch share can be shed for fast frequency response.
struct DataCenter {
  std::string id;
  double peak_mw = 0.0;
  double flexible_share = 0.0;  // phi in [0, 1]
  double ffr_start = 0.0;       // s
  double ffr_full = 1.0;        // s
  double gamma_lin = 0.0;       // $/MWh of reserved FFR
  double gamma_quad = 0.0;      // $/MW^2h

  bool operator==(const DataCenter&) const = default;
};

struct SystemCase {
  std::string name;
  std::vector<Generator> generators;
  double wind_capacity_mw = 0.0;
  std::vector<DataCenter> data_centers;
  double base_load_mw = 0.0;  // non-DC peak load
  int horizon = 24;
  double period_hours = 1.0;
  double f0 = 50.0;
  double damping = 0.0;            // D, per-unit load change per Hz
  double dP_L_max = 0.0;           // largest credible loss, MW
  double load_inertia_const = 0.0; // H_L^max, s
  double rocof_max = 1.0;          // Hz/s
  double nadir_limit_hz = 49.2;    // absolute frequency
  double deadband_hz = 0.0;
  double qss_xi = 0.0;
  double qss_lambda = 0.0;
  // Replication factor applied to the generator fleet by scale_scenario.
  double fleet_scale = 1.0;

  bool operator==(const SystemCase&) const = default;

  double conventional_capacity() const;
  double dc_peak() const;
  // Base load plus data-center peak; used as D^peak and as the damping
  // demand P_D in frequency studies.
  double peak_demand() const;
  // Largest admissible frequency deviation below nominal, Hz (> 0).
  double nadir_margin_hz() const { return f0 - nadir_limit_hz; }
};

struct Profiles {
  std::vector<double> dc_alpha;
  std::vector<double> wind_cf;
  std::vector<double> load_factor;

  int horizon() const { return static_cast<int>(dc_alpha.size()); }
  bool operator==(const Profiles&) const = default;
};

// Throws ValidationError naming the first offending field.
void validate(const SystemCase& c);
void validate(const Profiles& p, int horizon);

// Case file I/O (JSON document, see data/benchmark_case.json).
SystemCase parse_case(const std::string& text);
SystemCase load_case(const std::string& path);
std::string serialize_case(const SystemCase& c);
void save_case(const SystemCase& c, const std::string& path);

// Seeded synthetic daily shapes. Period t is treated as hour (t mod 24) of
// a day; the result depends only on (c.horizon, seed).
Profiles generate_profiles(const SystemCase& c, std::uint64_t seed);

// CSV with header t,dc_alpha,wind_cf,load_factor.
std::string serialize_profiles(const Profiles& p);
Profiles parse_profiles(const std::string& text);
void save_profiles(const Profiles& p, const std::string& path);
Profiles load_profiles(const std::string& path);

// alpha_t times the summed data-center peak.
double dc_load_at(const SystemCase& c, const Profiles& p, int t);
double other_load_at(const SystemCase& c, const Profiles& p, int t);
double wind_available_at(const SystemCase& c, const Profiles& p, int t);

}  // namespace fsuc
