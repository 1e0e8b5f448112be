#include <algorithm>

#include "fsuc/error.hpp"
#include "fsuc/learner.hpp"

namespace fsuc {

namespace {

std::unique_ptr<SlopeTreeNode> make_leaf(size_t n, size_t n_safe, int depth) {
  auto node = std::make_unique<SlopeTreeNode>();
  node->n_samples = n;
  node->n_safe = n_safe;
  node->depth = depth;
  node->leaf_label = 2 * n_safe > n ? Safety::kSafe : Safety::kUnsafe;
  return node;
}

Eigen::MatrixXd take_rows(const Eigen::MatrixXd& X, const std::vector<Eigen::Index>& idx) {
  Eigen::MatrixXd out(idx.size(), X.cols());
  for (size_t i = 0; i < idx.size(); ++i) out.row(i) = X.row(idx[i]);
  return out;
}

}  // namespace

std::unique_ptr<SlopeTreeNode> build_slope_tree(const Eigen::MatrixXd& X, const std::vector<int>& y,
                                                int depth, int d_max, int n_min,
                                                const LogisticOptions& opt) {
  if (d_max < 1) throw ValidationError("d_max", "must be >= 1");
  if (n_min < 1) throw ValidationError("n_min", "must be >= 1");
  const size_t n = y.size();
  if (n == 0) return nullptr;
  const size_t n_safe = static_cast<size_t>(std::count(y.begin(), y.end(), 1));
  if (depth >= d_max || n < static_cast<size_t>(n_min) || n_safe == 0 || n_safe == n) {
    return make_leaf(n, n_safe, depth);
  }

  LogisticModel m;
  try {
    m = fit_logistic(X, y, opt);
  } catch (const Error&) {
    return make_leaf(n, n_safe, depth);
  }

  std::vector<Eigen::Index> li, ri;
  for (Eigen::Index i = 0; i < X.rows(); ++i) {
    Eigen::VectorXd row = X.row(i);
    (m.score(std::span<const double>(row.data(), row.size())) < 0.0 ? li : ri).push_back(i);
  }
  if (li.empty() || ri.empty()) return make_leaf(n, n_safe, depth);

  std::vector<int> yl, yr;
  for (auto i : li) yl.push_back(y[i]);
  for (auto i : ri) yr.push_back(y[i]);

  auto node = std::make_unique<SlopeTreeNode>();
  node->model = std::move(m);
  node->n_samples = n;
  node->n_safe = n_safe;
  node->depth = depth;
  node->left = build_slope_tree(take_rows(X, li), yl, depth + 1, d_max, n_min, opt);
  node->right = build_slope_tree(take_rows(X, ri), yr, depth + 1, d_max, n_min, opt);
  return node;
}

Safety predict(const SlopeTreeNode& root, std::span<const double> x) {
  const SlopeTreeNode* node = &root;
  while (!node->is_leaf()) {
    node = node->model.score(x) < 0.0 ? node->left.get() : node->right.get();
  }
  return *node->leaf_label;
}

int count_internal(const SlopeTreeNode& root) {
  if (root.is_leaf()) return 0;
  return 1 + count_internal(*root.left) + count_internal(*root.right);
}

int tree_depth(const SlopeTreeNode& root) {
  if (root.is_leaf()) return 0;
  return 1 + std::max(tree_depth(*root.left), tree_depth(*root.right));
}

double accuracy(const SlopeTreeNode& root, const Eigen::MatrixXd& X, const std::vector<int>& y) {
  if (y.empty()) return 1.0;
  size_t ok = 0;
  for (Eigen::Index i = 0; i < X.rows(); ++i) {
    Eigen::VectorXd row = X.row(i);
    const int p = predict(root, std::span<const double>(row.data(), row.size())) == Safety::kSafe;
    ok += p == y[i];
  }
  return static_cast<double>(ok) / y.size();
}

int depth_for_budget(int budget) {
  if (budget < 1) throw ValidationError("budget", "must be >= 1");
  int d = 0;
  while ((2 << d) - 1 <= budget) ++d;
  return d;
}

}  // namespace fsuc
