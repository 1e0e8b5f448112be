#include "fsuc/basis_lu.hpp"

#include <algorithm>
#include <cmath>

namespace fsuc {

namespace {

constexpr double kThreshold = 0.1;   // |pivot| >= kThreshold * column max
constexpr double kAbsPivot = 1e-11;
constexpr double kDrop = 1e-14;
constexpr int kSearch = 4;           // candidates examined past the first hit

}  // namespace

bool BasisLU::factor(int m, const std::vector<Column>& cols) {
  m_ = m;
  l_.clear();
  u_.clear();
  std::vector<std::vector<std::pair<int, double>>> R(m);
  std::vector<std::vector<int>> C(m);
  for (int j = 0; j < m; ++j) {
    for (const auto& [i, v] : cols[j]) {
      if (v == 0.0) continue;
      R[i].push_back({j, v});
      C[j].push_back(i);
    }
  }
  std::vector<char> row_on(m, 1), col_on(m, 1);
  // Lazy count buckets: an entry is live when its count still matches.
  std::vector<std::vector<int>> rowb(m + 1), colb(m + 1);
  for (int i = 0; i < m; ++i) rowb[R[i].size()].push_back(i);
  for (int j = 0; j < m; ++j) colb[C[j].size()].push_back(j);
  if (!rowb[0].empty() || !colb[0].empty()) return false;

  auto value = [&](int i, int j) {
    for (const auto& [c, v] : R[i]) {
      if (c == j) return v;
    }
    return 0.0;
  };
  auto col_max = [&](int j) {
    double mx = 0.0;
    for (int i : C[j]) mx = std::max(mx, std::abs(value(i, j)));
    return mx;
  };

  std::vector<int> spos(m, -1);
  size_t min_count = 1;
  for (int step = 0; step < m; ++step) {
    int bp = -1, bq = -1;
    double bmerit = 0.0, bval = 0.0;
    int found = 0;
    size_t lowest_live = m + 1;
    for (size_t c = std::max<size_t>(min_count, 1); c <= static_cast<size_t>(m); ++c) {
      // Every entry left in higher buckets has merit >= (c-1)^2.
      if (bp >= 0 && bmerit <= double(c - 1) * double(c - 1)) break;
      if (bp >= 0 && found >= kSearch) break;
      auto& cb = colb[c];
      for (size_t k = 0; k < cb.size();) {
        const int j = cb[k];
        if (!col_on[j] || C[j].size() != c) {
          cb[k] = cb.back();
          cb.pop_back();
          continue;
        }
        ++k;
        lowest_live = std::min(lowest_live, c);
        const double mx = col_max(j);
        for (int i : C[j]) {
          const double a = value(i, j);
          if (std::abs(a) < kThreshold * mx || std::abs(a) < kAbsPivot) continue;
          const double merit = double(R[i].size() - 1) * double(c - 1);
          if (bp < 0 || merit < bmerit || (merit == bmerit && std::abs(a) > std::abs(bval))) {
            bp = i, bq = j, bmerit = merit, bval = a;
          }
        }
        if (bp >= 0 && ++found >= kSearch) break;
      }
      if (bp >= 0 && found >= kSearch) break;
      auto& rb = rowb[c];
      for (size_t k = 0; k < rb.size();) {
        const int i = rb[k];
        if (!row_on[i] || R[i].size() != c) {
          rb[k] = rb.back();
          rb.pop_back();
          continue;
        }
        ++k;
        lowest_live = std::min(lowest_live, c);
        for (const auto& [j, a] : R[i]) {
          if (std::abs(a) < kAbsPivot || std::abs(a) < kThreshold * col_max(j)) continue;
          const double merit = double(c - 1) * double(C[j].size() - 1);
          if (bp < 0 || merit < bmerit || (merit == bmerit && std::abs(a) > std::abs(bval))) {
            bp = i, bq = j, bmerit = merit, bval = a;
          }
        }
        if (bp >= 0 && ++found >= kSearch) break;
      }
    }
    if (bp < 0) return false;
    min_count = lowest_live;

    const int p = bp, q = bq;
    const double piv = bval;
    row_on[p] = 0;
    col_on[q] = 0;
    URow ur{p, q, piv, {}};
    for (const auto& [j, v] : R[p]) {
      if (j == q) continue;
      ur.rest.push_back({j, v});
      auto& cj = C[j];
      cj.erase(std::find(cj.begin(), cj.end(), p));
    }
    Eta eta{p, {}};
    for (int i : C[q]) {
      if (i == p) continue;
      auto& ri = R[i];
      size_t at = 0;
      while (ri[at].first != q) ++at;
      const double l = ri[at].second / piv;
      ri[at] = ri.back();
      ri.pop_back();
      eta.l.push_back({i, l});
      for (size_t k = 0; k < ri.size(); ++k) spos[ri[k].first] = static_cast<int>(k);
      for (const auto& [j, v] : ur.rest) {
        if (spos[j] >= 0) {
          ri[spos[j]].second -= l * v;
        } else {
          spos[j] = static_cast<int>(ri.size());
          ri.push_back({j, -l * v});
          C[j].push_back(i);
        }
      }
      for (size_t k = 0; k < ri.size();) {
        spos[ri[k].first] = -1;
        if (std::abs(ri[k].second) < kDrop) {
          auto& cj = C[ri[k].first];
          cj.erase(std::find(cj.begin(), cj.end(), i));
          colb[cj.size()].push_back(ri[k].first);
          min_count = std::min(min_count, cj.size());
          ri[k] = ri.back();
          ri.pop_back();
        } else {
          ++k;
        }
      }
      if (ri.empty()) return false;
      rowb[ri.size()].push_back(i);
      min_count = std::min(min_count, ri.size());
    }
    C[q].clear();
    for (const auto& [j, v] : ur.rest) {
      if (C[j].empty()) return false;
      colb[C[j].size()].push_back(j);
      min_count = std::min(min_count, C[j].size());
    }
    R[p].clear();
    if (!eta.l.empty()) l_.push_back(std::move(eta));
    u_.push_back(std::move(ur));
  }
  work_.assign(m, 0.0);
  return true;
}

size_t BasisLU::nnz() const {
  size_t n = u_.size();
  for (const auto& e : l_) n += e.l.size();
  for (const auto& u : u_) n += u.rest.size();
  return n;
}

void BasisLU::ftran(double* v) const {
  for (const auto& e : l_) {
    const double xp = v[e.p];
    if (xp == 0.0) continue;
    for (const auto& [i, l] : e.l) v[i] -= l * xp;
  }
  double* x = work_.data();
  for (auto it = u_.rbegin(); it != u_.rend(); ++it) {
    double s = v[it->p];
    for (const auto& [j, u] : it->rest) s -= u * x[j];
    x[it->q] = s / it->piv;
  }
  std::copy(x, x + m_, v);
}

void BasisLU::btran(double* c) const {
  double* z = work_.data();
  for (const auto& u : u_) {
    const double zp = c[u.q] / u.piv;
    z[u.p] = zp;
    if (zp == 0.0) continue;
    for (const auto& [j, val] : u.rest) c[j] -= val * zp;
  }
  for (auto it = l_.rbegin(); it != l_.rend(); ++it) {
    double s = z[it->p];
    for (const auto& [i, l] : it->l) s -= l * z[i];
    z[it->p] = s;
  }
  std::copy(z, z + m_, c);
}

}  // namespace fsuc
