#include "fsuc/error.hpp"
#include "fsuc/learner.hpp"

namespace fsuc {

DtclResult train_dtcl(const std::vector<LabeledPoint>& pts, const std::vector<double>& box_lo,
                      const std::vector<double>& box_hi, const NadirFn& nadir, const DtclOptions& opt) {
  if (pts.empty()) throw ValidationError("dataset", "must be non-empty");
  const Eigen::MatrixXd X = feature_matrix(pts);
  const std::vector<int> y = labels(pts);
  DtclResult out;
  out.tree = build_slope_tree(X, y, 0, opt.d_max, opt.n_min, opt.logistic);
  out.region = collect_conditions(*out.tree, opt.mode, &X, &y);
  out.region.box_lo = box_lo;
  out.region.box_hi = box_hi;
  out.tighten_shifts = tighten_on_data(out.region, X, y);
  if (opt.relax && opt.mode == RegionMode::kConjunctive) relax_on_data(out.region, X, y);
  if (opt.certify) out.certify = certify_region(out.region, nadir, opt.certify_opts);
  out.region.metadata["method"] = "dtcl";
  out.region.metadata["d_max"] = std::to_string(opt.d_max);
  out.region.metadata["tree_nodes"] = std::to_string(count_internal(*out.tree));
  return out;
}

}  // namespace fsuc
