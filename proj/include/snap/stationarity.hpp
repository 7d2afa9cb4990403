#pragma once

// First- and second-order optimality measurements: proximal gradient,
// projected gradient, restricted Hessian spectrum, KKT multipliers with strict
// complementarity, and a brute-force check of the feasible-direction
// second-order condition on tiny instances.

#include <functional>
#include <optional>
#include <vector>

#include "snap/core.hpp"
#include "snap/nnls.hpp"
#include "snap/oracle.hpp"
#include "snap/poly.hpp"

namespace snap {

/// g(x) = (pi_X(x - alpha grad f(x)) - x) / alpha.
inline Vector prox_gradient(const ProblemInstance& problem, const Vector& x, double alpha) {
  if (!(alpha > 0.0)) throw ParameterError("prox_gradient: alpha must be positive");
  const Vector step = x - alpha * problem.gradient(x);
  return (project_feasible(problem.feasible, step) - x) / alpha;
}

/// Same as prox_gradient with a precomputed gradient.
inline Vector prox_gradient_from(const Polyhedron& poly, const Vector& x, const Vector& grad,
                                 double alpha) {
  return (project_feasible(poly, x - alpha * grad) - x) / alpha;
}

/// q(x) = P(x) grad f(x).
inline Vector projected_gradient(const ProblemInstance& problem, const FreeSpaceBasis& basis,
                                 const Vector& x) {
  return basis.project(problem.gradient(x));
}

struct RestrictedEigen {
  std::optional<double> value;  ///< empty when the free space is {0}
  Vector vector;                ///< Z u for the unit minimizer u; zero when vacuous

  bool vacuous() const { return !value.has_value(); }
};

/// Z^T H(x) Z assembled with k Hessian-vector products.
inline Matrix restricted_hessian(const ProblemInstance& problem, const Matrix& Z, const Vector& x) {
  if (!problem.oracle.has_hessian())
    throw CapabilityError(
        "restricted Hessian needs Hessian-vector products; use the gradient-only SP-GD oracle");
  const Index k = Z.cols();
  Matrix HZ(Z.rows(), k);
  for (Index j = 0; j < k; ++j) HZ.col(j) = problem.oracle.hess_vec(x, Z.col(j));
  Matrix M = Z.transpose() * HZ;
  return 0.5 * (M + M.transpose());
}

/// Exact smallest eigenpair of the Hessian restricted to the free space.
inline RestrictedEigen restricted_min_eig(const ProblemInstance& problem,
                                          const FreeSpaceBasis& basis, const Vector& x) {
  RestrictedEigen out;
  out.vector = Vector::Zero(problem.dim());
  if (basis.free_dim() == 0) {
    if (!problem.oracle.has_hessian())
      throw CapabilityError("restricted_min_eig: problem has no Hessian-vector product");
    return out;
  }
  const Matrix Z = basis.basis();
  const Matrix M = restricted_hessian(problem, Z, x);
  Eigen::SelfAdjointEigenSolver<Matrix> es(M);
  out.value = es.eigenvalues()[0];
  out.vector = Z * es.eigenvectors().col(0);
  return out;
}

struct KktResult {
  Vector multipliers;          ///< one entry per active constraint, in aset order
  double residual = 0.0;       ///< ||grad f + sum mu_j A_j||
  bool kkt = false;            ///< residual <= kkt_tol
  bool sc_holds = false;       ///< kkt and every active multiplier > sc_tol
  double min_active_multiplier = std::numeric_limits<double>::infinity();
  bool negative_multiplier = false;  ///< unconstrained fit needed mu_j < -1e-10
};

/// Recovers multipliers by a nonnegative least-squares fit of -grad f over the
/// active rows and tests strict complementarity.
inline KktResult kkt_and_sc(const ProblemInstance& problem, const Vector& x, const ActiveSet& aset,
                            double kkt_tol = 1e-6, double sc_tol = 1e-8) {
  const Vector g = problem.gradient(x);
  KktResult out;
  const Index na = aset.size();
  if (na == 0) {
    out.multipliers = Vector();
    out.residual = g.norm();
    out.kkt = out.residual <= kkt_tol;
    out.sc_holds = out.kkt;
    return out;
  }
  Matrix C(problem.dim(), na);
  for (Index r = 0; r < na; ++r) C.col(r) = problem.feasible.A().row(aset.active[static_cast<size_t>(r)]).transpose();
  const Vector ls = C.completeOrthogonalDecomposition().solve(-g);
  Vector mu;
  if (ls.minCoeff() >= -1e-10 && (C * ls + g).norm() <= kkt_tol) {
    mu = ls.cwiseMax(0.0);
  } else {
    out.negative_multiplier = ls.minCoeff() < -1e-10;
    mu = detail::nnls(C, -g);
  }
  mu = (mu.array() + 0.0).matrix();  // normalizes -0
  out.multipliers = mu;
  out.residual = (g + C * mu).norm();
  out.kkt = out.residual <= kkt_tol;
  out.min_active_multiplier = mu.minCoeff();
  out.sc_holds = out.kkt && out.min_active_multiplier > sc_tol;
  return out;
}

struct StationarityReport {
  double fosp1_gap = 0.0;
  std::optional<double> restricted_min_eig;  ///< empty: vacuous (free space is {0})
  bool sosp1 = false;
  std::optional<Vector> multipliers;  ///< present only when kkt_residual <= kkt_tol
  double kkt_residual = 0.0;
  bool sc_holds = false;
  double min_active_multiplier = std::numeric_limits<double>::infinity();
  Index active_count = 0;
  Index free_dim = 0;
  double f = 0.0;
};

struct CheckOptions {
  double active_tol = kActiveTol;
  double rank_tol = kRankTol;
  double kkt_tol = 1e-6;
  double sc_tol = 1e-8;
};

/// Full first/second-order report at x. alpha <= 0 selects 1/L1.
inline StationarityReport check_sosp1(const ProblemInstance& problem, const Vector& x, double eps_G,
                                      double eps_H, double alpha = 0.0,
                                      const CheckOptions& opt = {}) {
  if (alpha <= 0.0) alpha = 1.0 / problem.oracle.L1;
  StationarityReport rep;
  const ActiveSet aset = active_set(problem.feasible, x, opt.active_tol);
  const FreeSpaceBasis basis = free_space_basis(problem.feasible, aset, opt.rank_tol);
  rep.f = problem.value(x);
  rep.fosp1_gap = prox_gradient(problem, x, alpha).norm();
  rep.active_count = aset.size();
  rep.free_dim = basis.free_dim();
  if (basis.free_dim() > 0) rep.restricted_min_eig = restricted_min_eig(problem, basis, x).value;
  rep.sosp1 = rep.fosp1_gap <= eps_G && (!rep.restricted_min_eig || *rep.restricted_min_eig >= -eps_H);
  const KktResult kkt = kkt_and_sc(problem, x, aset, opt.kkt_tol, opt.sc_tol);
  rep.kkt_residual = kkt.residual;
  if (kkt.kkt) rep.multipliers = kkt.multipliers;
  rep.sc_holds = kkt.sc_holds;
  rep.min_active_multiplier = kkt.min_active_multiplier;
  return rep;
}

struct Sosp2Result {
  bool fosp2 = false;
  bool sosp2 = false;
  double min_linear = 0.0;     ///< min grad^T (x - x*) over feasible x with ||x - x*|| <= 1
  double min_quadratic = 0.0;  ///< min (x - x*)^T H (x - x*) over the orthogonal slice
  std::optional<Vector> witness;  ///< most violating point of the second-order test
};

inline constexpr Index kSosp2MaxDim = 4;

namespace detail {

/// Global minimum of z^T H z over {z : C z <= e, g^T z = 0} (a bounded polytope)
/// by enumerating faces: on each face the quadratic is either strictly convex,
/// with its stationary point as the only candidate, or its minimum lies on a
/// smaller face.
inline std::pair<double, Vector> min_quadratic_on_slice(const Matrix& H, const Matrix& C, const Vector& e,
                                                        const Vector& g) {
  const Index d = H.rows(), m = C.rows();
  const bool slice = g.norm() > 1e-12;
  double best = 0.0;
  Vector arg = Vector::Zero(d);
  std::vector<Index> pick;
  auto visit = [&] {
    const Index k = static_cast<Index>(pick.size()) + (slice ? 1 : 0);
    Matrix E(k, d);
    Vector rhs(k);
    Index r = 0;
    if (slice) {
      E.row(r) = g.transpose() / g.norm();
      rhs[r++] = 0.0;
    }
    for (Index j : pick) {
      E.row(r) = C.row(j);
      rhs[r++] = e[j];
    }
    Vector z0 = Vector::Zero(d);
    Matrix N = Matrix::Identity(d, d);
    if (k > 0) {
      Eigen::CompleteOrthogonalDecomposition<Matrix> cod(E);
      cod.setThreshold(1e-10);
      if (cod.rank() < k) return;  // dependent rows: the same face appears with fewer rows
      z0 = cod.solve(rhs);
      Eigen::JacobiSVD<Matrix> svd(E, Eigen::ComputeFullV);
      N = svd.matrixV().rightCols(d - k);
    }
    Vector z = z0;
    if (N.cols() > 0) {
      const Matrix Hr = N.transpose() * H * N;
      Eigen::LLT<Matrix> llt(Hr);
      if (llt.info() != Eigen::Success || Hr.diagonal().minCoeff() <= 1e-12) return;
      z = z0 - N * llt.solve(N.transpose() * H * z0);
    }
    if (slice && std::abs(g.dot(z)) > 1e-10 * g.norm()) return;
    if (m > 0 && ((C * z - e).array() > 1e-9 * (1.0 + e.array().abs())).any()) return;
    const double q = z.dot(H * z);
    if (q < best) {
      best = q;
      arg = z;
    }
  };
  const Index depth_cap = d - (slice ? 1 : 0);
  std::function<void(Index)> rec = [&](Index start) {
    visit();
    if (static_cast<Index>(pick.size()) == depth_cap) return;
    for (Index j = start; j < m; ++j) {
      pick.push_back(j);
      rec(j + 1);
      pick.pop_back();
    }
  };
  rec(0);
  return {best, arg};
}

}  // namespace detail

/// First-order part: grid over x* + [-1, 1]^d (grid_n points per axis plus the
/// offset 0) and the vertices of the polyhedron inside that window. Second-order
/// part: exact minimum of the quadratic form over feasible x in the same window
/// with grad^T (x - x*) = 0.
inline Sosp2Result check_sosp2_bruteforce(const ProblemInstance& problem, const Vector& xs,
                                          double eps_G, double eps_H, int grid_n = 64) {
  const Index d = problem.dim();
  if (d > kSosp2MaxDim)
    throw CapabilityError("check_sosp2_bruteforce supports d <= " + std::to_string(kSosp2MaxDim));
  if (!problem.oracle.has_hessian())
    throw CapabilityError("check_sosp2_bruteforce needs Hessian-vector products");
  if (grid_n < 2) throw ParameterError("grid_n must be >= 2");
  const Polyhedron& poly = problem.feasible;
  const Vector g = problem.gradient(xs);
  Matrix H(d, d);
  for (Index j = 0; j < d; ++j) H.col(j) = problem.oracle.hess_vec(xs, Vector::Unit(d, j));
  H = (0.5 * (H + H.transpose())).eval();

  std::vector<double> offsets;
  for (int i = 0; i < grid_n; ++i) offsets.push_back(-1.0 + 2.0 * i / (grid_n - 1));
  offsets.push_back(0.0);

  Sosp2Result out;
  auto consider = [&](const Vector& x) {
    if (!poly.contains(x)) return;
    const Vector dx = x - xs;
    if (dx.norm() <= 1.0 + 1e-12) out.min_linear = std::min(out.min_linear, g.dot(dx));
  };

  const auto n = static_cast<Index>(offsets.size());
  Index total = 1;
  for (Index i = 0; i < d; ++i) total *= n;
  Vector x(d);
  for (Index t = 0; t < total; ++t) {
    Index r = t;
    for (Index i = 0; i < d; ++i) {
      x[i] = xs[i] + offsets[static_cast<size_t>(r % n)];
      r /= n;
    }
    consider(x);
  }

  // Vertices: every d-subset of rows with a nonsingular system.
  const Index m = poly.rows();
  if (m >= d && m <= 16) {
    std::vector<Index> pick(static_cast<size_t>(d));
    std::function<void(Index, Index)> rec = [&](Index start, Index depth) {
      if (depth == d) {
        Matrix As(d, d);
        Vector bs(d);
        for (Index i = 0; i < d; ++i) {
          As.row(i) = poly.A().row(pick[static_cast<size_t>(i)]);
          bs[i] = poly.b()[pick[static_cast<size_t>(i)]];
        }
        Eigen::FullPivLU<Matrix> lu(As);
        if (!lu.isInvertible()) return;
        const Vector v = lu.solve(bs);
        if (((v - xs).cwiseAbs().array() <= 1.0 + 1e-12).all()) consider(v);
        return;
      }
      for (Index j = start; j < m; ++j) {
        pick[static_cast<size_t>(depth)] = j;
        rec(j + 1, depth + 1);
      }
    };
    rec(0, 0);
  }

  // Slice polytope in z = x - x*: A z <= b - A x*, -1 <= z <= 1.
  Matrix C(m + 2 * d, d);
  Vector e(m + 2 * d);
  C.topRows(m) = poly.A();
  e.head(m) = poly.b() - poly.apply(xs);
  C.bottomRows(2 * d) << Matrix::Identity(d, d), -Matrix::Identity(d, d);
  e.tail(2 * d).setOnes();
  const auto [q, z] = detail::min_quadratic_on_slice(H, C, e, g);
  if (q < 0.0) {
    out.min_quadratic = q;
    out.witness = Vector(xs + z);
  }

  out.fosp2 = out.min_linear >= -eps_G;
  out.sosp2 = out.fosp2 && out.min_quadratic >= -eps_H;
  return out;
}

}  // namespace snap
