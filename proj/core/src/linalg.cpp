#include "reckit/linalg.hpp"

#include <cmath>

#include "reckit/errors.hpp"

namespace reckit {

bool cholesky_solve(DenseMatrix a, std::vector<double> b, std::vector<double>& out) {
  const int n = a.rows;
  if (n != a.cols || static_cast<int>(b.size()) != n) return false;

  // In-place lower-triangular factorization.
  for (int j = 0; j < n; ++j) {
    double diag = a.at(j, j);
    for (int k = 0; k < j; ++k) diag -= a.at(j, k) * a.at(j, k);
    if (!(diag > 1e-300)) return false;
    const double root = std::sqrt(diag);
    a.at(j, j) = root;
    for (int i = j + 1; i < n; ++i) {
      double v = a.at(i, j);
      for (int k = 0; k < j; ++k) v -= a.at(i, k) * a.at(j, k);
      a.at(i, j) = v / root;
    }
  }

  // Forward then backward substitution.
  for (int i = 0; i < n; ++i) {
    double v = b[i];
    for (int k = 0; k < i; ++k) v -= a.at(i, k) * b[k];
    b[i] = v / a.at(i, i);
  }
  for (int i = n - 1; i >= 0; --i) {
    double v = b[i];
    for (int k = i + 1; k < n; ++k) v -= a.at(k, i) * b[k];
    b[i] = v / a.at(i, i);
  }
  out = std::move(b);
  return true;
}

std::vector<double> ridge_fit(const DenseMatrix& x, std::span<const double> y, double lambda) {
  if (static_cast<int>(y.size()) != x.rows) throw DimensionError("ridge_fit: row count mismatch");
  const int p = x.cols + 1;  // leading intercept

  DenseMatrix gram(p, p);
  std::vector<double> rhs(static_cast<std::size_t>(p), 0.0);
  for (int r = 0; r < x.rows; ++r) {
    const auto row = x.row(r);
    gram.at(0, 0) += 1.0;
    rhs[0] += y[r];
    for (int i = 0; i < x.cols; ++i) {
      gram.at(i + 1, 0) += row[i];
      gram.at(0, i + 1) += row[i];
      rhs[static_cast<std::size_t>(i) + 1] += row[i] * y[r];
      for (int j = 0; j < x.cols; ++j) gram.at(i + 1, j + 1) += row[i] * row[j];
    }
  }
  for (int i = 1; i < p; ++i) gram.at(i, i) += lambda;

  std::vector<double> solution;
  if (!cholesky_solve(std::move(gram), std::move(rhs), solution)) {
    throw SingularSystem("ridge_fit: normal equations are singular");
  }
  return solution;
}

double dot(std::span<const double> a, std::span<const double> b) {
  double sum = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) sum += a[i] * b[i];
  return sum;
}

}  // namespace reckit
