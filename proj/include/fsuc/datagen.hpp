#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "fsuc/freqsim.hpp"
#include "fsuc/sysmodel.hpp"

namespace fsuc {

struct AxisRange {
  double min = 0.0;
  double max = 1.0;
  int count = 2;
};

struct SampleGrid {
  AxisRange h_range;
  AxisRange r_cg_range;
  AxisRange r_dc_range;
  std::vector<double> delays;  // DC ramp durations t_c - t_a, s
  std::uint64_t seed = 0;
};

void validate(const SampleGrid& g);

// Grid spanning the operating space a UC schedule of `c` can reach:
// inertia from the RoCoF floor to all units committed, generator FFR up to
// the fleet total, DC FFR up to the summed data-center peak.
SampleGrid default_grid(const SystemCase& c, std::vector<double> delays = {1.0, 2.0, 5.0, 10.0},
                        std::uint64_t seed = 1, int r_count = 50, int h_count = 20);

// Feature order matches the nadir constraint: (R_gen, R_DC, H).
using Features = std::array<double, 3>;

struct LabeledPoint {
  Features x{};
  int y = 0;  // 1 safe, 0 unsafe
  double delay_s = 0.0;

  bool operator==(const LabeledPoint&) const = default;
};

inline OperatingPoint to_operating_point(const Features& x) { return {x[0], x[1], x[2]}; }

// One jittered point per grid cell per delay, labelled by the simulator.
// Order: delay, then H, R_gen, R_DC cell index. Jitter depends only on the
// seed and cell index, so every delay sees the same operating points.
std::vector<LabeledPoint> build_dataset(const SystemCase& c, const SampleGrid& grid);

// Points of a single delay, in dataset order.
std::vector<LabeledPoint> select_delay(const std::vector<LabeledPoint>& pts, double delay_s);

struct ClassBalance {
  size_t safe = 0;
  size_t unsafe = 0;
  bool single_class() const { return safe == 0 || unsafe == 0; }
};
// Logs a warning when only one class is present.
ClassBalance class_balance(const std::vector<LabeledPoint>& pts);

// CSV with header r_gen_mw,r_dc_mw,h_sys,delay_s,label.
std::string serialize_dataset(const std::vector<LabeledPoint>& pts);
std::vector<LabeledPoint> parse_dataset(const std::string& text);
void save_dataset(const std::vector<LabeledPoint>& pts, const std::string& path);
std::vector<LabeledPoint> load_dataset(const std::string& path);

// Continuous nadir deviation (Hz, <= 0) for each point, used by the
// regression baselines.
struct NadirSample {
  Features x{};
  double nadir_hz = 0.0;
};
std::vector<NadirSample> nadir_samples(const SystemCase& c, const std::vector<LabeledPoint>& pts);

}  // namespace fsuc
