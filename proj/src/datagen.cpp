#include "fsuc/datagen.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>
#include <sstream>

#include "fsuc/csv.hpp"
#include "fsuc/error.hpp"
#include "fsuc/rng.hpp"

namespace fsuc {

void validate(const SampleGrid& g) {
  auto axis = [](const AxisRange& a, const char* name) {
    if (a.count < 2) throw ValidationError(name, "count must be >= 2");
    if (!(a.min < a.max)) throw ValidationError(name, "min must be < max");
  };
  axis(g.h_range, "h_range");
  axis(g.r_cg_range, "r_cg_range");
  axis(g.r_dc_range, "r_dc_range");
  if (g.delays.empty()) throw ValidationError("delays", "at least one delay required");
  for (double d : g.delays) {
    if (!(d > 0.0)) throw ValidationError("delays", "delays must be > 0");
  }
}

SampleGrid default_grid(const SystemCase& c, std::vector<double> delays, std::uint64_t seed,
                        int r_count, int h_count) {
  std::vector<int> all_on(c.generators.size(), 1);
  const double h_max = system_inertia(c, all_on);
  const double h_min = std::min(c.dP_L_max / (2.0 * c.rocof_max), 0.5 * h_max);
  double r_cg = 0.0;
  for (const auto& g : c.generators) r_cg += g.ffr_capacity;
  SampleGrid g;
  g.h_range = {h_min, h_max, h_count};
  g.r_cg_range = {0.0, r_cg, r_count};
  g.r_dc_range = {0.0, c.dc_peak(), r_count};
  g.delays = std::move(delays);
  g.seed = seed;
  return g;
}

std::vector<LabeledPoint> build_dataset(const SystemCase& c, const SampleGrid& grid) {
  validate(grid);
  const int nh = grid.h_range.count, ng = grid.r_cg_range.count, nd = grid.r_dc_range.count;
  const size_t cells = static_cast<size_t>(nh) * ng * nd;

  // Jitter once per cell so all delays share operating points.
  Rng rng(grid.seed);
  std::vector<Features> base(cells);
  auto coord = [](const AxisRange& a, int i, double u) {
    return a.min + (i + u) * (a.max - a.min) / a.count;
  };
  size_t k = 0;
  for (int ih = 0; ih < nh; ++ih) {
    for (int ig = 0; ig < ng; ++ig) {
      for (int id = 0; id < nd; ++id, ++k) {
        const double uh = rng.uniform(), ug = rng.uniform(), ud = rng.uniform();
        base[k] = {coord(grid.r_cg_range, ig, ug), coord(grid.r_dc_range, id, ud),
                   coord(grid.h_range, ih, uh)};
      }
    }
  }

  std::vector<LabeledPoint> out;
  out.reserve(cells * grid.delays.size());
  size_t failures = 0;
  for (double delay : grid.delays) {
    for (const auto& x : base) {
      LabeledPoint p{x, 0, delay};
      try {
        auto res = label_point(scenario_for(c, to_operating_point(x), delay), c.nadir_limit_hz);
        p.y = res.label == Safety::kSafe ? 1 : 0;
      } catch (const Error& e) {
        ++failures;
        p.y = 0;
      }
      out.push_back(p);
    }
  }
  if (failures > 0) {
    std::clog << "warning: " << failures << " grid points failed to simulate; labelled unsafe\n";
  }
  return out;
}

std::vector<LabeledPoint> select_delay(const std::vector<LabeledPoint>& pts, double delay_s) {
  std::vector<LabeledPoint> out;
  for (const auto& p : pts) {
    if (p.delay_s == delay_s) out.push_back(p);
  }
  return out;
}

ClassBalance class_balance(const std::vector<LabeledPoint>& pts) {
  ClassBalance b;
  for (const auto& p : pts) (p.y == 1 ? b.safe : b.unsafe)++;
  if (!pts.empty() && b.single_class()) {
    std::clog << "warning: dataset contains a single class (" << (b.safe ? "safe" : "unsafe")
              << "); the slope tree degenerates to one leaf\n";
  }
  return b;
}

std::string serialize_dataset(const std::vector<LabeledPoint>& pts) {
  std::string out = "r_gen_mw,r_dc_mw,h_sys,delay_s,label\n";
  for (const auto& p : pts) {
    out += csv::format_double(p.x[0]) + "," + csv::format_double(p.x[1]) + "," +
           csv::format_double(p.x[2]) + "," + csv::format_double(p.delay_s) + "," +
           std::to_string(p.y) + "\n";
  }
  return out;
}

std::vector<LabeledPoint> parse_dataset(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || csv::trim(line) != "r_gen_mw,r_dc_mw,h_sys,delay_s,label") {
    throw ParseError("row 0", "expected header r_gen_mw,r_dc_mw,h_sys,delay_s,label");
  }
  std::vector<LabeledPoint> out;
  size_t row = 0;
  while (std::getline(in, line)) {
    ++row;
    if (csv::trim(line).empty()) continue;
    const std::string where = "row " + std::to_string(row);
    auto cols = csv::split(csv::trim(line));
    if (cols.size() != 5) throw ParseError(where, "expected 5 columns");
    LabeledPoint p;
    for (int i = 0; i < 3; ++i) {
      p.x[i] = csv::parse_double(cols[i], where);
      if (!std::isfinite(p.x[i])) throw ParseError(where, "non-finite feature");
    }
    p.delay_s = csv::parse_double(cols[3], where);
    const long long y = csv::parse_int(cols[4], where);
    if (y != 0 && y != 1) throw ParseError(where, "label must be 0 or 1");
    p.y = static_cast<int>(y);
    out.push_back(p);
  }
  return out;
}

void save_dataset(const std::vector<LabeledPoint>& pts, const std::string& path) {
  csv::write_text(path, serialize_dataset(pts));
}

std::vector<LabeledPoint> load_dataset(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open dataset " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_dataset(ss.str());
}

std::vector<NadirSample> nadir_samples(const SystemCase& c, const std::vector<LabeledPoint>& pts) {
  std::vector<NadirSample> out;
  out.reserve(pts.size());
  for (const auto& p : pts) {
    auto res = label_point(scenario_for(c, to_operating_point(p.x), p.delay_s), c.nadir_limit_hz);
    out.push_back({p.x, res.nadir_hz});
  }
  return out;
}

}  // namespace fsuc
