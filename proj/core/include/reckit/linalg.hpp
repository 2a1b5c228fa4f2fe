#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace reckit {

/// Minimal row-major dense matrix. The systems solved in this library are
/// tiny (latent dimension or feature count on a side), so no BLAS backing.
struct DenseMatrix {
  int rows = 0;
  int cols = 0;
  std::vector<double> data;

  DenseMatrix() = default;
  DenseMatrix(int r, int c) : rows(r), cols(c), data(static_cast<std::size_t>(r) * c, 0.0) {}

  double& at(int r, int c) { return data[static_cast<std::size_t>(r) * cols + c]; }
  double at(int r, int c) const { return data[static_cast<std::size_t>(r) * cols + c]; }
  std::span<const double> row(int r) const {
    return {data.data() + static_cast<std::size_t>(r) * cols, static_cast<std::size_t>(cols)};
  }
};

/// Solves A x = b for symmetric positive-definite A in place via Cholesky.
/// Returns false when A is not positive definite (within pivot tolerance).
bool cholesky_solve(DenseMatrix a, std::vector<double> b, std::vector<double>& out);

/// Ridge least squares with an implicit leading intercept column.
/// Minimizes sum_i (y_i - w0 - w.x_i)^2 + lambda * |w|^2 (intercept is not
/// penalized). Returns [w0, w...]. Throws SingularSystem when the normal
/// equations are not solvable.
std::vector<double> ridge_fit(const DenseMatrix& x, std::span<const double> y, double lambda);

double dot(std::span<const double> a, std::span<const double> b);

}  // namespace reckit
