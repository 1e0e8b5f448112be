#pragma once

#include <Eigen/Dense>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "fsuc/datagen.hpp"
#include "fsuc/freqsim.hpp"

namespace fsuc {

// ---------------------------------------------------------------- logistic

struct LogisticModel {
  Eigen::VectorXd a;  // raw-feature weights
  double c = 0.0;
  bool converged = false;
  int iterations = 0;

  double score(std::span<const double> x) const;
};

struct LogisticOptions {
  int max_iter = 100;
  double tol = 1e-8;
  double l2 = 1e-4;
  bool balance_classes = true;
};

// Regularized IRLS on standardized features. Throws Error("degenerate node")
// when only one class is present.
LogisticModel fit_logistic(const Eigen::MatrixXd& X, const std::vector<int>& y,
                           const LogisticOptions& opt = {});

// --------------------------------------------------------------- slope tree

struct SlopeTreeNode {
  LogisticModel model;  // empty on leaves
  std::unique_ptr<SlopeTreeNode> left;   // f(x) < 0
  std::unique_ptr<SlopeTreeNode> right;  // f(x) >= 0
  std::optional<Safety> leaf_label;
  size_t n_samples = 0;
  size_t n_safe = 0;
  int depth = 0;

  bool is_leaf() const { return leaf_label.has_value(); }
};

// Nodes that stop (depth, size, purity, failed fit, empty side) become
// leaves labelled by majority; ties go to unsafe. Returns nullptr only for
// empty input.
std::unique_ptr<SlopeTreeNode> build_slope_tree(const Eigen::MatrixXd& X, const std::vector<int>& y,
                                                int depth, int d_max, int n_min,
                                                const LogisticOptions& opt = {});

Safety predict(const SlopeTreeNode& root, std::span<const double> x);
int count_internal(const SlopeTreeNode& root);
int tree_depth(const SlopeTreeNode& root);
double accuracy(const SlopeTreeNode& root, const Eigen::MatrixXd& X, const std::vector<int>& y);

// Largest depth whose full tree has no more than `budget` split nodes.
int depth_for_budget(int budget);

// ------------------------------------------------------------------ region

enum class RegionMode { kConjunctive, kDisjunctive };

struct Halfspace {
  std::vector<double> theta;
  double bias = 0.0;

  double eval(std::span<const double> x) const;
  bool operator==(const Halfspace&) const = default;
};

// theta . x + bias >= 0 for every halfspace (conjunctive), or for every
// halfspace of at least one leaf set (disjunctive). `box_lo`/`box_hi` bound
// the feature space the region was trained on.
struct LinearSafetyRegion {
  RegionMode mode = RegionMode::kConjunctive;
  std::vector<std::string> features;
  std::vector<Halfspace> halfspaces;
  std::vector<std::vector<int>> leaves;
  std::vector<double> box_lo, box_hi;
  std::map<std::string, std::string> metadata;

  bool contains(std::span<const double> x) const;
  size_t dim() const;
  bool operator==(const LinearSafetyRegion&) const = default;
};

// Conjunctive facets face their safe-majority side: among the node's own
// samples, or among (X, y) when given.
LinearSafetyRegion collect_conditions(const SlopeTreeNode& root, RegionMode mode,
                                      const Eigen::MatrixXd* X = nullptr,
                                      const std::vector<int>* y = nullptr);

// Shifts halfspace biases until no unsafe training point is inside.
// Returns the number of shifts.
int tighten_on_data(LinearSafetyRegion& r, const Eigen::MatrixXd& X, const std::vector<int>& y);

// Moves each conjunctive facet outward until it touches the first unsafe
// training point not already cut off by another facet; facets no unsafe
// point leans on are pushed outside the feature box.
int relax_on_data(LinearSafetyRegion& r, const Eigen::MatrixXd& X, const std::vector<int>& y);

// Nadir oracle: returns the simulated nadir deviation (Hz) at x.
using NadirFn = std::function<double(std::span<const double>)>;

struct CertifyOptions {
  int grid = 25;        // boundary probes per axis pair
  int max_passes = 60;
  double margin_hz = 0.8;
};

struct CertifyReport {
  int passes = 0;
  int shifts = 0;
  size_t probes_checked = 0;
  bool certified = false;
};

// Probes the region's vertices and its lower boundary along every feature
// axis with the simulator; an unsafe probe pulls the nearest facet inward to
// the first safe point along its normal. Requires the feature box.
CertifyReport certify_region(LinearSafetyRegion& r, const NadirFn& nadir, const CertifyOptions& opt);

// Disjunctive region accepting x when any part does. Parts must share the
// feature list and box.
LinearSafetyRegion union_regions(const std::vector<LinearSafetyRegion>& parts);

std::string serialize_region(const LinearSafetyRegion& r);
LinearSafetyRegion parse_region(const std::string& text);
void save_region(const LinearSafetyRegion& r, const std::string& path);
LinearSafetyRegion load_region(const std::string& path);

// Smallest value of feature `axis` inside region and box when the other
// features are fixed at `x`; nullopt when the line misses the region.
std::optional<double> lower_boundary(const LinearSafetyRegion& r, std::span<const double> x, int axis);

// Vertices of {halfspaces of `members`} intersected with the box.
std::vector<std::vector<double>> region_vertices(const LinearSafetyRegion& r,
                                                 const std::vector<int>& members);

// --------------------------------------------------------------- baselines

// Least-squares plane  nadir ~ w . x + b  (minimum-norm when rank deficient).
struct Plane {
  std::vector<double> w;
  double b = 0.0;
  double eval(std::span<const double> x) const;
};
Plane fit_plane(const Eigen::MatrixXd& X, const Eigen::VectorXd& y);

struct PiecewisePlaneModel {
  std::string method;
  std::vector<Plane> planes;
  // PLA: uniform cells; KRL: nearest centroid in standardized space.
  std::vector<int> cells_per_feature;
  std::vector<double> lo, hi;
  std::vector<std::vector<double>> centroids;  // standardized coordinates
  std::vector<double> mean, scale;
  std::vector<std::string> notes;

  int piece_for(std::span<const double> x) const;
  double predict(std::span<const double> x) const;
  // Conjunction of plane(x) + margin >= 0 over all pieces.
  LinearSafetyRegion region(double margin_hz) const;
};

// Per-feature segment counts whose product is n (largest prime factors to
// the feature with fewest segments).
std::vector<int> split_segments(int n, int dims);

PiecewisePlaneModel fit_pla(const Eigen::MatrixXd& X, const Eigen::VectorXd& nadir, int n_segments);
PiecewisePlaneModel fit_krl(const Eigen::MatrixXd& X, const Eigen::VectorXd& nadir, int k,
                            std::uint64_t seed, int max_iter = 100);

// -------------------------------------------------------------- evaluation

struct RegionMetrics {
  size_t accepted = 0;
  size_t accepted_safe = 0;
  size_t safe_total = 0;
  double pass_rate = 1.0;   // accepted_safe / accepted
  double coverage = 0.0;    // accepted_safe / safe_total
  bool degenerate = false;  // nothing accepted
  size_t boundary_points = 0;
  double avg_nl_error = 0.0;
  double max_nl_error = 0.0;
  std::string note;
};

// Pass rate over `pts`; NL error |nadir + margin| / margin at the projection
// of every point onto its nearest facet of the region surface.
RegionMetrics evaluate_region(const LinearSafetyRegion& r, const std::vector<LabeledPoint>& pts,
                              const NadirFn& nadir, double margin_hz);

// Convenience: design matrix and labels from labeled points.
Eigen::MatrixXd feature_matrix(const std::vector<LabeledPoint>& pts);
std::vector<int> labels(const std::vector<LabeledPoint>& pts);

}  // namespace fsuc

namespace fsuc {

// ---------------------------------------------------------------- pipeline

struct DtclOptions {
  int d_max = 6;
  int n_min = 20;
  RegionMode mode = RegionMode::kConjunctive;
  bool relax = true;
  bool certify = true;
  CertifyOptions certify_opts;
  LogisticOptions logistic;
};

struct DtclResult {
  std::unique_ptr<SlopeTreeNode> tree;
  LinearSafetyRegion region;
  int tighten_shifts = 0;
  CertifyReport certify;
};

// Tree -> region -> data tightening -> (relaxation) -> (simulator
// certification) for one delay's labelled points.
DtclResult train_dtcl(const std::vector<LabeledPoint>& pts, const std::vector<double>& box_lo,
                      const std::vector<double>& box_hi, const NadirFn& nadir, const DtclOptions& opt);

}  // namespace fsuc
