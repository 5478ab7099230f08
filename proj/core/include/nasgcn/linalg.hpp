#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <vector>

namespace nasgcn {

template <class Scalar>
using RowMatrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <class Scalar>
using ColVector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

/// Compressed sparse row matrix with sorted column indices per row.
struct CsrMatrix {
  std::int64_t rows = 0;
  std::int64_t cols = 0;
  std::vector<std::int64_t> row_ptr{0};
  std::vector<std::int32_t> col_idx;
  std::vector<double> values;

  std::int64_t nnz() const { return static_cast<std::int64_t>(col_idx.size()); }
  /// Value at (r, c), 0 when not stored. Binary search within the row.
  double at(std::int64_t r, std::int64_t c) const;
  bool is_symmetric(double tol = 0.0) const;

  /// out = this * in. Each output row is accumulated in column order, so the
  /// result does not depend on how rows are scheduled.
  template <class Scalar>
  void multiply(const RowMatrix<Scalar>& in, RowMatrix<Scalar>& out) const {
    out.resize(rows, in.cols());
    for (std::int64_t r = 0; r < rows; ++r) {
      auto dst = out.row(r);
      dst.setZero();
      for (std::int64_t k = row_ptr[r]; k < row_ptr[r + 1]; ++k) {
        dst.noalias() += static_cast<Scalar>(values[k]) * in.row(col_idx[k]);
      }
    }
  }

  template <class Scalar>
  ColVector<Scalar> multiply(const ColVector<Scalar>& in) const {
    ColVector<Scalar> out(rows);
    for (std::int64_t r = 0; r < rows; ++r) {
      Scalar acc = 0;
      for (std::int64_t k = row_ptr[r]; k < row_ptr[r + 1]; ++k) {
        acc += static_cast<Scalar>(values[k]) * in[col_idx[k]];
      }
      out[r] = acc;
    }
    return out;
  }
};

}  // namespace nasgcn
