#pragma once

#include <vector>

#include "snap/core.hpp"

namespace snap::detail {

/// Lawson-Hanson active-set solver for min ||C mu - y|| subject to mu >= 0.
inline Vector nnls(const Matrix& C, const Vector& y, double tol = 1e-12,
                   int max_outer = 0) {
  const Index n = C.cols();
  Vector mu = Vector::Zero(n);
  if (n == 0) return mu;
  if (max_outer <= 0) max_outer = static_cast<int>(3 * n + 10);

  std::vector<bool> passive(static_cast<size_t>(n), false);
  const double scale = std::max(1.0, C.norm() * y.norm());

  auto solve_passive = [&](Vector& z) {
    std::vector<Index> idx;
    for (Index j = 0; j < n; ++j)
      if (passive[static_cast<size_t>(j)]) idx.push_back(j);
    z.setZero(n);
    if (idx.empty()) return;
    Matrix Cp(C.rows(), static_cast<Index>(idx.size()));
    for (size_t k = 0; k < idx.size(); ++k) Cp.col(static_cast<Index>(k)) = C.col(idx[k]);
    Vector zp = Cp.completeOrthogonalDecomposition().solve(y);
    for (size_t k = 0; k < idx.size(); ++k) z[idx[k]] = zp[static_cast<Index>(k)];
  };

  for (int outer = 0; outer < max_outer; ++outer) {
    Vector w = C.transpose() * (y - C * mu);
    Index best = -1;
    double best_w = tol * scale;
    for (Index j = 0; j < n; ++j) {
      if (!passive[static_cast<size_t>(j)] && w[j] > best_w) {
        best_w = w[j];
        best = j;
      }
    }
    if (best < 0) break;
    passive[static_cast<size_t>(best)] = true;

    for (int inner = 0; inner < 3 * n + 10; ++inner) {
      Vector z;
      solve_passive(z);
      bool all_positive = true;
      for (Index j = 0; j < n; ++j)
        if (passive[static_cast<size_t>(j)] && z[j] <= 0.0) all_positive = false;
      if (all_positive) {
        mu = z;
        break;
      }
      double alpha = 1.0;
      for (Index j = 0; j < n; ++j) {
        if (passive[static_cast<size_t>(j)] && z[j] <= 0.0) {
          const double denom = mu[j] - z[j];
          if (denom > 0.0) alpha = std::min(alpha, mu[j] / denom);
        }
      }
      mu += alpha * (z - mu);
      for (Index j = 0; j < n; ++j) {
        if (passive[static_cast<size_t>(j)] && mu[j] <= tol) {
          passive[static_cast<size_t>(j)] = false;
          mu[j] = 0.0;
        }
      }
    }
  }
  return mu;
}

}  // namespace snap::detail
