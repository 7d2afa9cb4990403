#pragma once

// Negative-eigenpair oracles on the free space: shifted power iteration with
// Hessian-vector products, and subspace perturbed gradient descent (SP-GD),
// which only needs gradients.

#include <algorithm>
#include <cmath>

#include "snap/core.hpp"
#include "snap/oracle.hpp"
#include "snap/poly.hpp"

namespace snap {

enum class Flag { found, none };

inline const char* to_string(Flag f) { return f == Flag::found ? "found" : "none"; }

struct EigenPairResult {
  Flag flag = Flag::none;
  Vector direction;                ///< unit vector in the free space, zero when none
  double curvature_estimate = 0;   ///< -eps'_H <= 0, zero when none
  long evals_used = 0;             ///< gradient or Hessian-vector calls
  bool heuristic = false;          ///< estimate does not carry the formal guarantee
  int restarts = 0;                ///< SP-GD radius halvings after infeasible probes

  bool found() const { return flag == Flag::found; }
};

struct PowerIterationOptions {
  /// Upper bound on iterations; the theoretical count can be astronomically
  /// large for loose Lipschitz estimates. Zero means no cap.
  long max_iters = 20000;
};

/// ceil((8 L1 / eps_H) ln(k / delta)), at least 1.
inline long power_iteration_count(double L1, double eps_H, Index k, double delta) {
  const double n = std::ceil(8.0 * L1 / eps_H * std::log(static_cast<double>(k) / delta));
  if (!(n >= 1.0)) return 1;
  if (n > 1e15) return static_cast<long>(1e15);
  return static_cast<long>(n);
}

/// Shifted power iteration on c I - Z^T H Z with c = L1. Accepts when the
/// final Rayleigh quotient is <= -eps_H / 2.
inline EigenPairResult negative_eigen_pair_hessian(const ProblemInstance& problem, const Vector& x,
                                                   const FreeSpaceBasis& basis, double eps_H,
                                                   double delta, Rng& rng,
                                                   const PowerIterationOptions& opt = {}) {
  if (!problem.oracle.has_hessian())
    throw CapabilityError(
        "Hessian eigen oracle needs Hessian-vector products; use the SP-GD oracle instead");
  if (!(eps_H > 0.0) || !(delta > 0.0 && delta < 1.0))
    throw ParameterError("eigen oracle: need eps_H > 0 and 0 < delta < 1");
  EigenPairResult out;
  const Index d = problem.dim();
  out.direction = Vector::Zero(d);
  const Index k = basis.free_dim();
  if (k == 0) return out;

  const double c = problem.oracle.L1;
  long iters = power_iteration_count(c, eps_H, k, delta);
  if (opt.max_iters > 0) iters = std::min(iters, opt.max_iters);

  Vector u = basis.project(gaussian_vector(d, rng));
  double nu = u.norm();
  if (nu == 0.0) return out;
  u /= nu;
  Vector Hu;
  for (long t = 0; t < iters; ++t) {
    Hu = basis.project(problem.oracle.hess_vec(x, u));
    ++out.evals_used;
    Vector next = c * u - Hu;
    nu = next.norm();
    if (nu == 0.0) break;
    u = basis.project(next / nu);
    u /= u.norm();
  }
  Hu = problem.oracle.hess_vec(x, u);
  ++out.evals_used;
  const double lambda = u.dot(Hu);
  if (lambda <= -eps_H / 2.0) {
    out.flag = Flag::found;
    out.direction = u;
    out.curvature_estimate = lambda;
  }
  return out;
}

struct SpGdConfig {
  long T = 100;
  double script_F = 100.0;
  double script_R = 1e-4;
  double beta = 0.01;
  double c_hat = 51.0;
  double eps_H = 1e-3;
  double delta = 0.1;
  /// T, F, R chosen by hand instead of the theoretical formulas.
  bool practical_override = true;
  /// Halve R and redraw when a probe x + z leaves the feasible set.
  bool restart_on_infeasible_probe = true;
  int max_restarts = 30;

  void validate(double L1, bool L1_exact) const {
    if (T < 1) throw ParameterError("SP-GD: T must be >= 1");
    if (!(beta > 0.0)) throw ParameterError("SP-GD: beta must be positive");
    if (!(script_R > 0.0)) throw ParameterError("SP-GD: R must be positive");
    if (!(eps_H > 0.0) || !(delta > 0.0 && delta < 1.0))
      throw ParameterError("SP-GD: need eps_H > 0 and 0 < delta < 1");
    if (L1_exact && beta * L1 > 1.0 + 1e-12) throw ParameterError("SP-GD: beta * L1 must be <= 1");
    if (!practical_override && c_hat < 51.0) throw ParameterError("SP-GD: c_hat must be >= 51");
  }
};

/// log(d L1 / (eps_H delta)), floored at 1 so the derived constants stay finite.
inline double spgd_log_term(Index d, double L1, double eps_H, double delta) {
  return std::max(1.0, std::log(static_cast<double>(d) * L1 / (eps_H * delta)));
}

/// Constants of the SP-GD complexity bound with beta = 1/L1 and c_hat = 51.
inline SpGdConfig default_spgd_config(double L1, double L2, Index d, double eps_H, double delta) {
  if (!(eps_H > 0.0) || eps_H > L1) throw ParameterError("SP-GD: need 0 < eps_H <= L1");
  if (!(delta > 0.0 && delta < 1.0)) throw ParameterError("SP-GD: need 0 < delta < 1");
  SpGdConfig cfg;
  cfg.beta = 1.0 / L1;
  cfg.c_hat = 51.0;
  cfg.eps_H = eps_H;
  cfg.delta = delta;
  cfg.practical_override = false;
  const double lg = spgd_log_term(d, L1, eps_H, delta);
  cfg.T = static_cast<long>(std::ceil(cfg.c_hat * lg / (cfg.beta * eps_H) + 1.0));
  cfg.script_F = std::pow(eps_H, 3) / (L2 * L2 * std::pow(cfg.c_hat, 5) * std::pow(lg, 3));
  cfg.script_R = eps_H * eps_H / (L1 * L2 * std::pow(cfg.c_hat, 4) * lg * lg);
  return cfg;
}

namespace detail {

inline bool probe_feasible(const Polyhedron& poly, const ActiveSet& aset, const Vector& p) {
  const Vector r = poly.apply(p) - poly.b();
  for (Index i : aset.inactive) {
    const double slack = r[i];
    if (slack > aset.tol * (1.0 + std::abs(poly.b()[i]))) return false;
  }
  return true;
}

}  // namespace detail

/// SP-GD: gradient-difference power iteration from a random point of the
/// radius-R sphere in the free space, with the projector frozen at x.
inline EigenPairResult sp_gd(const ProblemInstance& problem, const Vector& x,
                             const FreeSpaceBasis& basis, const SpGdConfig& cfg, Rng& rng,
                             const ActiveSet* aset_hint = nullptr) {
  cfg.validate(problem.oracle.L1, problem.oracle.exact_lipschitz);
  EigenPairResult out;
  const Index d = problem.dim();
  out.direction = Vector::Zero(d);
  out.heuristic = cfg.practical_override;
  if (basis.free_dim() == 0) return out;

  const ActiveSet aset = aset_hint ? *aset_hint : active_set(problem.feasible, x);
  const Vector q0 = basis.project(problem.gradient(x));
  const double f0 = problem.value(x);
  ++out.evals_used;
  double R = cfg.script_R;

  for (int attempt = 0; attempt <= cfg.max_restarts; ++attempt) {
    Vector z = basis.project(gaussian_vector(d, rng));
    const double zn = z.norm();
    if (zn == 0.0) return out;
    z *= R / zn;
    bool feasible = true;
    for (long tau = 0; tau < cfg.T; ++tau) {
      const Vector probe = x + z;
      if (cfg.restart_on_infeasible_probe && !detail::probe_feasible(problem.feasible, aset, probe)) {
        feasible = false;
        break;
      }
      z -= cfg.beta * (basis.project(problem.gradient(probe)) - q0);
      ++out.evals_used;
      if (!z.allFinite()) return out;
    }
    if (feasible && cfg.restart_on_infeasible_probe &&
        !detail::probe_feasible(problem.feasible, aset, x + z))
      feasible = false;
    if (!feasible) {
      R *= 0.5;
      ++out.restarts;
      continue;
    }
    const double decrease = problem.value(x + z) - f0 - q0.dot(z);
    ++out.evals_used;
    const double zn_final = z.norm();
    if (decrease <= -1.5 * cfg.script_F && zn_final > 0.0) {
      out.flag = Flag::found;
      out.direction = basis.project(z / zn_final);
      out.direction /= out.direction.norm();
      out.curvature_estimate =
          -cfg.eps_H / (4.0 * cfg.c_hat * spgd_log_term(d, problem.oracle.L1, cfg.eps_H, cfg.delta));
    }
    return out;
  }
  return out;
}

}  // namespace snap
