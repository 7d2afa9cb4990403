#pragma once

// Step selection along a free-space direction: jump to the largest feasible
// step when it decreases f, otherwise halve until the sufficient-descent test
// f(x + a d) <= f(x) + rho(a) / 2 holds.

#include <optional>
#include <string>

#include "snap/core.hpp"
#include "snap/oracle.hpp"
#include "snap/poly.hpp"

namespace snap {

enum class DirectionKind { gradient, curvature };

/// gradient: -a ||q||^2; curvature: -a^2 eps' / 4.
inline double compute_rho(DirectionKind kind, double alpha, double q_norm_sq, double eps_H_prime) {
  if (alpha < 0.0) throw ParameterError("compute_rho: alpha must be >= 0");
  if (kind == DirectionKind::gradient) return -alpha * q_norm_sq;
  return -alpha * alpha * eps_H_prime / 4.0;
}

struct LineSearchOutcome {
  Vector x_next;
  /// true: the maximal step was taken (boundary or 1/L1 fallback).
  bool took_max_step = false;
  double alpha_used = 0.0;
  double alpha_max = 0.0;
  std::optional<Index> hit;  ///< constraint reached when the max step was bounded and taken
  double f_next = 0.0;
  long evals = 0;
  int halvings = 0;
};

inline constexpr double kStepFloor = 1e-16;

/// Snaps the coordinate hit by an axis-aligned constraint exactly onto its bound.
inline void snap_to_constraint(const Polyhedron& poly, Index j, Vector& x) {
  const Index ax = poly.axis(j);
  if (ax < 0) return;
  const double a = poly.A()(j, ax);
  x[ax] = poly.b()[j] / a;
}

/// f0 is f(x); q_norm_sq is ||q||^2 with q the projected gradient at x.
inline LineSearchOutcome line_search(const ProblemInstance& problem, const ActiveSet& aset,
                                     const Vector& x, double f0, const Vector& dir,
                                     DirectionKind kind, double q_norm_sq, double eps_H_prime,
                                     double L1) {
  if (kind == DirectionKind::curvature && !(eps_H_prime > 0.0))
    throw ParameterError("line_search: curvature steps need eps' > 0");
  const Polyhedron& poly = problem.feasible;
  const MaxStep ms = max_step(poly, aset, x, dir, L1);
  LineSearchOutcome out;
  out.alpha_max = ms.alpha_max;

  Vector trial = x + ms.alpha_max * dir;
  if (ms.hit) snap_to_constraint(poly, *ms.hit, trial);
  double ft = problem.value(trial);
  ++out.evals;
  if (ft < f0) {
    out.x_next = std::move(trial);
    out.took_max_step = true;
    out.alpha_used = ms.alpha_max;
    out.hit = ms.hit;
    out.f_next = ft;
    return out;
  }
  double alpha = ms.alpha_max;
  const double floor = kStepFloor * ms.alpha_max;
  while (true) {
    alpha *= 0.5;
    ++out.halvings;
    if (alpha < floor)
      throw LineSearchError("line search reached the step floor " + std::to_string(floor) +
                            " without sufficient descent");
    trial = x + alpha * dir;
    ft = problem.value(trial);
    ++out.evals;
    if (ft <= f0 + 0.5 * compute_rho(kind, alpha, q_norm_sq, eps_H_prime)) break;
  }
  out.x_next = std::move(trial);
  out.alpha_used = alpha;
  out.f_next = ft;
  return out;
}

}  // namespace snap
