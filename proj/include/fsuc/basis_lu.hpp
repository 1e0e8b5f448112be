#pragma once

#include <utility>
#include <vector>

namespace fsuc {

// Sparse LU of a square simplex basis by right-looking Markowitz
// elimination with threshold pivoting. Slack-heavy bases reduce to a
// small nucleus, so factorization and solves stay close to O(nnz).
class BasisLU {
 public:
  using Column = std::vector<std::pair<int, double>>;  // (row, value)

  // Returns false when the matrix is numerically singular.
  bool factor(int m, const std::vector<Column>& cols);

  // B x = v; v is indexed by row, the result by column.
  void ftran(double* v) const;
  // B^T y = c; c is indexed by column, the result by row.
  void btran(double* c) const;

  int size() const { return m_; }
  size_t nnz() const;

 private:
  struct Eta {
    int p;  // pivot row
    std::vector<std::pair<int, double>> l;  // (row, multiplier)
  };
  struct URow {
    int p, q;  // pivot row and column
    double piv;
    std::vector<std::pair<int, double>> rest;  // (column, value), later pivots only
  };
  int m_ = 0;
  std::vector<Eta> l_;
  std::vector<URow> u_;
  mutable std::vector<double> work_;
};

}  // namespace fsuc
