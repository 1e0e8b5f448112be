// Cross-check of the built-in branch and bound against HiGHS through the
// external-solver protocol. Skipped (exit 77) when highspy is unavailable.
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>

#include "fsuc/ucmodel.hpp"
#include "support/fixtures.hpp"

using namespace fsuc;

int main() {
  if (std::system("python3 -c 'import highspy' >/dev/null 2>&1") != 0) {
    std::puts("highspy not importable; skipping");
    return 77;
  }
  const std::string adapter = std::string(FSUC_TOOLS_DIR) + "/highs_solver.py";
  const std::string dir = (std::filesystem::temp_directory_path() / "fsuc_highs").string();
  int bad = 0;
  for (int seed : {1, 2, 3}) {
    const SystemCase c = fixtures::small_case(8);
    const UcModel uc = build_uc(c, generate_profiles(c, seed), nullptr);
    SolveOptions o;
    o.mip_gap = 1e-9;
    const auto ours = solve_milp(uc.milp, o);
    const auto ref = solve_external(uc.milp, adapter, dir, 60);
    const bool ok = ours.status == MilpStatus::kOptimal && ref.status == MilpStatus::kOptimal &&
                    std::abs(ours.objective - ref.objective) <= 1e-6 * std::max(1.0, std::abs(ref.objective));
    std::printf("seed %d: ours %.9g (%s) highs %.9g (%s) %s\n", seed, ours.objective, to_string(ours.status),
                ref.objective, to_string(ref.status), ok ? "ok" : ref.message.c_str());
    bad += !ok;
  }
  std::filesystem::remove_all(dir);
  return bad == 0 ? 0 : 1;
}
