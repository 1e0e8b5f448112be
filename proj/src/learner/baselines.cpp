#include <algorithm>
#include <cmath>
#include <limits>

#include "fsuc/error.hpp"
#include "fsuc/learner.hpp"
#include "fsuc/rng.hpp"

namespace fsuc {

double Plane::eval(std::span<const double> x) const {
  double s = b;
  for (size_t j = 0; j < w.size(); ++j) s += w[j] * x[j];
  return s;
}

Plane fit_plane(const Eigen::MatrixXd& X, const Eigen::VectorXd& y) {
  const Eigen::Index n = X.rows(), d = X.cols();
  Plane p;
  p.w.assign(d, 0.0);
  if (n == 0) return p;
  // Centre and scale for conditioning, then map back.
  Eigen::VectorXd mu = X.colwise().mean();
  Eigen::VectorXd sd(d);
  for (Eigen::Index j = 0; j < d; ++j) {
    sd[j] = std::sqrt((X.col(j).array() - mu[j]).square().mean());
    if (!(sd[j] > 0.0)) sd[j] = 1.0;
  }
  Eigen::MatrixXd A(n, d + 1);
  for (Eigen::Index j = 0; j < d; ++j) A.col(j) = (X.col(j).array() - mu[j]) / sd[j];
  A.col(d).setOnes();
  Eigen::VectorXd z = A.completeOrthogonalDecomposition().solve(y);
  p.b = z[d];
  for (Eigen::Index j = 0; j < d; ++j) {
    p.w[j] = z[j] / sd[j];
    p.b -= z[j] * mu[j] / sd[j];
  }
  return p;
}

std::vector<int> split_segments(int n, int dims) {
  if (n < 1) throw ValidationError("n_segments", "must be >= 1");
  if (dims < 1) throw ValidationError("dims", "must be >= 1");
  std::vector<int> factors;
  for (int p = 2, m = n; m > 1;) {
    if (m % p == 0) {
      factors.push_back(p);
      m /= p;
    } else {
      ++p;
    }
  }
  std::sort(factors.rbegin(), factors.rend());
  std::vector<int> counts(dims, 1);
  for (int f : factors) {
    auto it = std::min_element(counts.begin(), counts.end());
    *it *= f;
  }
  return counts;
}

int PiecewisePlaneModel::piece_for(std::span<const double> x) const {
  if (!centroids.empty()) {
    int best = 0;
    double bd = std::numeric_limits<double>::infinity();
    for (size_t c = 0; c < centroids.size(); ++c) {
      double dist = 0.0;
      for (size_t j = 0; j < mean.size(); ++j) dist += std::pow((x[j] - mean[j]) / scale[j] - centroids[c][j], 2);
      if (dist < bd) {
        bd = dist;
        best = static_cast<int>(c);
      }
    }
    return best;
  }
  int idx = 0;
  for (size_t j = 0; j < cells_per_feature.size(); ++j) {
    const int nj = cells_per_feature[j];
    const double span = hi[j] - lo[j];
    int k = span > 0.0 ? static_cast<int>(std::floor((x[j] - lo[j]) / span * nj)) : 0;
    k = std::clamp(k, 0, nj - 1);
    idx = idx * nj + k;
  }
  return idx;
}

double PiecewisePlaneModel::predict(std::span<const double> x) const {
  return planes[piece_for(x)].eval(x);
}

LinearSafetyRegion PiecewisePlaneModel::region(double margin_hz) const {
  LinearSafetyRegion r;
  r.mode = RegionMode::kConjunctive;
  const size_t d = planes.empty() ? 0 : planes.front().w.size();
  r.features = d == 3 ? std::vector<std::string>{"r_gen_mw", "r_dc_mw", "h_sys"} : std::vector<std::string>{};
  for (size_t j = 0; r.features.size() < d; ++j) r.features.push_back("x" + std::to_string(j));
  for (const auto& p : planes) r.halfspaces.push_back({p.w, p.b + margin_hz});
  r.metadata["method"] = method;
  for (size_t i = 0; i < notes.size(); ++i) r.metadata["note" + std::to_string(i)] = notes[i];
  return r;
}

PiecewisePlaneModel fit_pla(const Eigen::MatrixXd& X, const Eigen::VectorXd& nadir, int n_segments) {
  if (X.rows() == 0) throw ValidationError("samples", "must be non-empty");
  const int d = static_cast<int>(X.cols());
  PiecewisePlaneModel m;
  m.method = "pla";
  m.cells_per_feature = split_segments(n_segments, d);
  for (int j = 0; j < d; ++j) {
    m.lo.push_back(X.col(j).minCoeff());
    m.hi.push_back(X.col(j).maxCoeff());
  }

  std::vector<std::vector<Eigen::Index>> members(n_segments);
  for (Eigen::Index i = 0; i < X.rows(); ++i) {
    Eigen::VectorXd row = X.row(i);
    members[m.piece_for(std::span<const double>(row.data(), d))].push_back(i);
  }
  m.planes.resize(n_segments);
  std::vector<bool> fitted(n_segments, false);
  for (int c = 0; c < n_segments; ++c) {
    if (members[c].empty()) continue;
    Eigen::MatrixXd Xc(members[c].size(), d);
    Eigen::VectorXd yc(members[c].size());
    for (size_t i = 0; i < members[c].size(); ++i) {
      Xc.row(i) = X.row(members[c][i]);
      yc[i] = nadir[members[c][i]];
    }
    m.planes[c] = fit_plane(Xc, yc);
    fitted[c] = true;
  }

  auto coords = [&](int c) {
    std::vector<int> out(d);
    for (int j = d - 1; j >= 0; --j) {
      out[j] = c % m.cells_per_feature[j];
      c /= m.cells_per_feature[j];
    }
    return out;
  };
  for (int c = 0; c < n_segments; ++c) {
    if (fitted[c]) continue;
    const auto cc = coords(c);
    int best = -1;
    long bd = std::numeric_limits<long>::max();
    for (int o = 0; o < n_segments; ++o) {
      if (!fitted[o]) continue;
      const auto oc = coords(o);
      long dist = 0;
      for (int j = 0; j < d; ++j) dist += static_cast<long>(cc[j] - oc[j]) * (cc[j] - oc[j]);
      if (dist < bd) {
        bd = dist;
        best = o;
      }
    }
    m.planes[c] = m.planes[best];
    m.notes.push_back("cell " + std::to_string(c) + " empty; inherited plane of cell " + std::to_string(best));
  }
  return m;
}

PiecewisePlaneModel fit_krl(const Eigen::MatrixXd& X, const Eigen::VectorXd& nadir, int k,
                            std::uint64_t seed, int max_iter) {
  const Eigen::Index n = X.rows(), d = X.cols();
  if (k < 1) throw ValidationError("k", "must be >= 1");
  if (n < k) throw ValidationError("samples", "need at least k samples");
  PiecewisePlaneModel m;
  m.method = "krl";
  m.mean.resize(d);
  m.scale.resize(d);
  Eigen::MatrixXd Z(n, d);
  for (Eigen::Index j = 0; j < d; ++j) {
    m.mean[j] = X.col(j).mean();
    double sd = std::sqrt((X.col(j).array() - m.mean[j]).square().mean());
    m.scale[j] = sd > 0.0 ? sd : 1.0;
    Z.col(j) = (X.col(j).array() - m.mean[j]) / m.scale[j];
  }

  // k-means++ seeding.
  Rng rng(seed);
  std::vector<Eigen::VectorXd> cent;
  cent.push_back(Z.row(rng.below(n)).transpose());
  Eigen::VectorXd d2(n);
  for (Eigen::Index i = 0; i < n; ++i) d2[i] = (Z.row(i).transpose() - cent[0]).squaredNorm();
  while (static_cast<int>(cent.size()) < k) {
    const double total = d2.sum();
    Eigen::Index pick = 0;
    if (total > 0.0) {
      double u = rng.uniform() * total, acc = 0.0;
      pick = n - 1;
      for (Eigen::Index i = 0; i < n; ++i) {
        acc += d2[i];
        if (acc > u) {
          pick = i;
          break;
        }
      }
    } else {
      pick = rng.below(n);
    }
    cent.push_back(Z.row(pick).transpose());
    for (Eigen::Index i = 0; i < n; ++i) d2[i] = std::min(d2[i], (Z.row(i).transpose() - cent.back()).squaredNorm());
  }

  std::vector<int> assign(n, -1);
  auto nearest = [&](Eigen::Index i, double* dist) {
    int best = 0;
    double bd = std::numeric_limits<double>::infinity();
    for (int c = 0; c < k; ++c) {
      const double dd = (Z.row(i).transpose() - cent[c]).squaredNorm();
      if (dd < bd) {
        bd = dd;
        best = c;
      }
    }
    if (dist) *dist = bd;
    return best;
  };
  for (int it = 0; it < max_iter; ++it) {
    bool changed = false;
    for (Eigen::Index i = 0; i < n; ++i) {
      const int c = nearest(i, nullptr);
      changed |= c != assign[i];
      assign[i] = c;
    }
    std::vector<Eigen::VectorXd> sum(k, Eigen::VectorXd::Zero(d));
    std::vector<int> count(k, 0);
    for (Eigen::Index i = 0; i < n; ++i) {
      sum[assign[i]] += Z.row(i).transpose();
      ++count[assign[i]];
    }
    for (int c = 0; c < k; ++c) {
      if (count[c] > 0) {
        cent[c] = sum[c] / count[c];
        continue;
      }
      Eigen::Index far = 0;
      double fd = -1.0;
      for (Eigen::Index i = 0; i < n; ++i) {
        const double dd = (Z.row(i).transpose() - cent[assign[i]]).squaredNorm();
        if (dd > fd) {
          fd = dd;
          far = i;
        }
      }
      cent[c] = Z.row(far).transpose();
      m.notes.push_back("iteration " + std::to_string(it) + ": cluster " + std::to_string(c) +
                        " empty; re-seeded from sample " + std::to_string(far));
      changed = true;
    }
    if (!changed) break;
  }
  for (Eigen::Index i = 0; i < n; ++i) assign[i] = nearest(i, nullptr);

  for (int c = 0; c < k; ++c) m.centroids.emplace_back(cent[c].data(), cent[c].data() + d);
  if (k == 1) {
    m.planes.push_back(fit_plane(X, nadir));
    return m;
  }
  for (int c = 0; c < k; ++c) {
    std::vector<Eigen::Index> idx;
    for (Eigen::Index i = 0; i < n; ++i) {
      if (assign[i] == c) idx.push_back(i);
    }
    Eigen::MatrixXd Xc(idx.size(), d);
    Eigen::VectorXd yc(idx.size());
    for (size_t i = 0; i < idx.size(); ++i) {
      Xc.row(i) = X.row(idx[i]);
      yc[i] = nadir[idx[i]];
    }
    m.planes.push_back(fit_plane(Xc, yc));
  }
  return m;
}

}  // namespace fsuc
