#pragma once

// Independent reference computations used by the tests. None of these call
// into the library's algorithms; they work from first principles so that a
// shared bug cannot make both sides agree.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <vector>

namespace oracle {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

/// Euclidean projection onto {x : A x <= b} by enumerating every row subset of
/// size <= d, projecting onto the affine hull {A_S x = b_S} and keeping the
/// nearest feasible candidate. The true projection lies in the candidate set
/// (take S = its active rows), and every feasible candidate is at least as far.
inline std::optional<Vec> project_bruteforce(const Mat& A, const Vec& b, const Vec& v,
                                             double feas_tol = 1e-9) {
  const int m = static_cast<int>(A.rows());
  const int d = static_cast<int>(A.cols());
  std::optional<Vec> best;
  double best_dist = std::numeric_limits<double>::infinity();
  auto consider = [&](const Vec& x) {
    if (m > 0 && ((A * x - b).array() > feas_tol * (1.0 + b.array().abs())).any()) return;
    const double dist = (x - v).norm();
    if (dist < best_dist) {
      best_dist = dist;
      best = x;
    }
  };
  consider(v);
  std::vector<int> idx;
  std::function<void(int)> rec = [&](int start) {
    if (!idx.empty()) {
      const int s = static_cast<int>(idx.size());
      Mat As(s, d);
      Vec bs(s);
      for (int r = 0; r < s; ++r) {
        As.row(r) = A.row(idx[static_cast<size_t>(r)]);
        bs[r] = b[idx[static_cast<size_t>(r)]];
      }
      // x = v - As^T y with As As^T y = As v - bs (least-norm correction).
      const Mat G = As * As.transpose();
      const Vec y = G.completeOrthogonalDecomposition().solve(As * v - bs);
      const Vec x = v - As.transpose() * y;
      if ((As * x - bs).norm() <= 1e-9 * (1.0 + bs.norm())) consider(x);
    }
    if (static_cast<int>(idx.size()) == d) return;
    for (int j = start; j < m; ++j) {
      idx.push_back(j);
      rec(j + 1);
      idx.pop_back();
    }
  };
  rec(0);
  return best;
}

/// Sort-based projection onto the probability simplex.
inline Vec project_simplex_sort(const Vec& v) {
  std::vector<double> u(v.data(), v.data() + v.size());
  std::sort(u.rbegin(), u.rend());
  double cum = 0.0, theta = 0.0;
  for (size_t j = 0; j < u.size(); ++j) {
    cum += u[j];
    const double t = (cum - 1.0) / static_cast<double>(j + 1);
    if (u[j] - t > 0.0) theta = t;
  }
  return (v.array() - theta).max(0.0).matrix();
}

/// Dense symmetric eigen-decomposition; returns (lambda_min, unit eigenvector).
inline std::pair<double, Vec> min_eig(const Mat& H) {
  Eigen::SelfAdjointEigenSolver<Mat> es(0.5 * (H + H.transpose()));
  return {es.eigenvalues()[0], es.eigenvectors().col(0)};
}

/// Null-space basis of M via the SVD of M (rows of M are constraints).
inline Mat null_space(const Mat& M, Eigen::Index d, double tol = 1e-10) {
  if (M.rows() == 0) return Mat::Identity(d, d);
  Eigen::JacobiSVD<Mat> svd(M, Eigen::ComputeFullV);
  const Vec s = svd.singularValues();
  Eigen::Index r = 0;
  for (Eigen::Index i = 0; i < s.size(); ++i)
    if (s[i] > tol * s[0]) ++r;
  return svd.matrixV().rightCols(d - r);
}

/// Central-difference gradient.
inline Vec fd_gradient(const std::function<double(const Vec&)>& f, const Vec& x, double h) {
  Vec g(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    Vec xp = x, xm = x;
    xp[i] += h;
    xm[i] -= h;
    g[i] = (f(xp) - f(xm)) / (2.0 * h);
  }
  return g;
}

/// Global minimum of 1/2 x^T Q x + c^T x over a box, by enumerating which
/// coordinates sit at the lower bound, upper bound, or float free; the free
/// block solves Q_FF x_F = -(c_F + Q_FB x_B). Exact for any Q (each face's
/// stationary points are covered; faces with singular Q_FF are skipped and
/// their minima then lie on lower-dimensional faces).
inline std::pair<Vec, double> box_qp_global_min(const Mat& Q, const Vec& c, const Vec& lo,
                                                const Vec& hi) {
  const int d = static_cast<int>(c.size());
  int total = 1;
  for (int i = 0; i < d; ++i) total *= 3;
  Vec best_x = lo;
  double best_f = std::numeric_limits<double>::infinity();
  for (int code = 0; code < total; ++code) {
    std::vector<int> state(static_cast<size_t>(d));
    int t = code;
    for (int i = 0; i < d; ++i) {
      state[static_cast<size_t>(i)] = t % 3;
      t /= 3;
    }
    Vec x = Vec::Zero(d);
    std::vector<int> fr;
    for (int i = 0; i < d; ++i) {
      if (state[static_cast<size_t>(i)] == 0) x[i] = lo[i];
      else if (state[static_cast<size_t>(i)] == 1) x[i] = hi[i];
      else fr.push_back(i);
    }
    if (!fr.empty()) {
      const int k = static_cast<int>(fr.size());
      Mat QF(k, k);
      Vec rhs(k);
      for (int a = 0; a < k; ++a) {
        double s = c[fr[static_cast<size_t>(a)]];
        for (int j = 0; j < d; ++j)
          if (state[static_cast<size_t>(j)] != 2) s += Q(fr[static_cast<size_t>(a)], j) * x[j];
        rhs[a] = -s;
        for (int bb = 0; bb < k; ++bb) QF(a, bb) = Q(fr[static_cast<size_t>(a)], fr[static_cast<size_t>(bb)]);
      }
      Eigen::FullPivLU<Mat> lu(QF);
      if (!lu.isInvertible()) continue;
      const Vec xf = lu.solve(rhs);
      bool inside = true;
      for (int a = 0; a < k; ++a) {
        const int i = fr[static_cast<size_t>(a)];
        if (xf[a] < lo[i] - 1e-12 || xf[a] > hi[i] + 1e-12) inside = false;
        x[i] = xf[a];
      }
      if (!inside) continue;
    }
    const double f = 0.5 * x.dot(Q * x) + c.dot(x);
    if (f < best_f) {
      best_f = f;
      best_x = x;
    }
  }
  return {best_x, best_f};
}

}  // namespace oracle
