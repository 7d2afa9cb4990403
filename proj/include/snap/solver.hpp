#pragma once

// Main solver loop: negative-curvature gradient projection with its
// simplified variant, plus projected-gradient baselines. Every iteration is
// traced for invariant checks and plotting.

#include <chrono>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "snap/core.hpp"
#include "snap/line_search.hpp"
#include "snap/negative_curvature.hpp"
#include "snap/oracle.hpp"
#include "snap/poly.hpp"
#include "snap/stationarity.hpp"

namespace snap {

enum class Variant { snap, snap_simplified, pgd, pgd_ls };
enum class OracleKind { hessian, spgd };

inline const char* to_string(Variant v) {
  switch (v) {
    case Variant::snap: return "snap";
    case Variant::snap_simplified: return "snap-simplified";
    case Variant::pgd: return "pgd";
    case Variant::pgd_ls: return "pgd-ls";
  }
  return "?";
}

inline Variant parse_variant(const std::string& s) {
  for (auto v : {Variant::snap, Variant::snap_simplified, Variant::pgd, Variant::pgd_ls})
    if (s == to_string(v)) return v;
  throw ParameterError("unknown algorithm '" + s + "'");
}

inline const char* to_string(OracleKind k) { return k == OracleKind::hessian ? "hessian" : "spgd"; }

inline OracleKind parse_oracle_kind(const std::string& s) {
  if (s == "hessian") return OracleKind::hessian;
  if (s == "spgd") return OracleKind::spgd;
  throw ParameterError("unknown oracle '" + s + "' (expected hessian or spgd)");
}

struct SolverConfig {
  Variant variant = Variant::snap;
  OracleKind oracle = OracleKind::hessian;
  double eps_G = 1e-3;
  double eps_H = 1e-3;
  double alpha_pi = 0.0;  ///< <= 0: 1/L1, refreshed with the Lipschitz estimate
  double delta = 0.1;
  long r_th = 0;
  long max_iter = 100000;
  /// Keep iterating after certification (oracle none -> PGD step, baselines ignore eps_G).
  bool no_stop = false;
  SpGdConfig spgd;
  /// Use default_spgd_config(L1, L2, d, eps_H, delta) instead of `spgd`.
  bool spgd_theoretical = false;
  PowerIterationOptions power;
  std::uint64_t seed = 0;
  double active_tol = kActiveTol;
  double rank_tol = kRankTol;
  /// Re-check certified points with the exact restricted spectrum when possible.
  bool verify_certificate = true;

  void validate(const ObjectiveOracle& o) const {
    if (!(eps_G > 0.0) || !(eps_H > 0.0)) throw ParameterError("eps_G and eps_H must be positive");
    if (r_th < 0) throw ParameterError("r_th must be >= 0");
    if (max_iter < 0) throw ParameterError("max_iter must be >= 0");
    if (!(delta > 0.0 && delta < 1.0)) throw ParameterError("delta must lie in (0, 1)");
    if (o.exact_lipschitz && alpha_pi > 0.0 && alpha_pi * o.L1 > 1.0 + 1e-12 &&
        variant != Variant::pgd_ls)
      throw ParameterError("alpha_pi * L1 must be <= 1");
  }
};

enum class StepKind { pgd, ncd_grad, ncd_curv, boundary, oracle_call, final_point };

inline const char* to_string(StepKind k) {
  switch (k) {
    case StepKind::pgd: return "PGD";
    case StepKind::ncd_grad: return "NCD-grad";
    case StepKind::ncd_curv: return "NCD-curv";
    case StepKind::boundary: return "boundary";
    case StepKind::oracle_call: return "oracle-call";
    case StepKind::final_point: return "final";
  }
  return "?";
}

/// State at x^(r) and the action taken there.
struct TraceRecord {
  long iter = 0;
  double elapsed_s = 0.0;
  double f = 0.0;
  double fosp1_gap = 0.0;
  StepKind step_kind = StepKind::pgd;
  double alpha = 0.0;
  std::optional<double> curvature_est;  ///< set whenever the eigen oracle ran
  Index active_count = 0;
  Index free_dim = 0;

  // In-memory extras for invariant checks.
  bool oracle_consulted = false;
  bool oracle_found = false;
  double direction_norm = 0.0;   ///< oracle direction norm when found
  double direction_drift = 0.0;  ///< max_j |A_j v| / ||A_j|| over active rows when found
  std::optional<bool> line_search_max;  ///< NCD steps: took the maximal step
  bool boundary_hit = false;
  bool gradient_direction = false;
  double infeasibility = 0.0;  ///< max(0, max_j A_j x - b_j) at x^(r)
};

enum class Status { sosp1_certified, fosp1_reached, max_iter, line_search_failure };

inline const char* to_string(Status s) {
  switch (s) {
    case Status::sosp1_certified: return "SOSP1-certified";
    case Status::fosp1_reached: return "FOSP1-reached";
    case Status::max_iter: return "max-iter";
    case Status::line_search_failure: return "line-search-failure";
  }
  return "?";
}

struct SolveResult {
  Vector x_final;  ///< best iterate (equals the last one for monotone runs)
  Vector x_last;
  Status status = Status::max_iter;
  std::vector<TraceRecord> trace;
  long iterations = 0;
  long oracle_calls = 0;
  double wall_time = 0.0;
  double f_final = 0.0;  ///< f at x_last
  double f_best = 0.0;   ///< f at x_final
  double L1 = 0.0;
  double L2 = 0.0;
  std::optional<bool> certificate_verified;
  std::string message;
};

struct DirectionChoice {
  Vector direction;
  DirectionKind kind = DirectionKind::curvature;
};

/// Flips v so that q^T v <= 0, then picks -q when the gradient step promises
/// at least the curvature step's descent.
inline DirectionChoice select_direction(const Vector& q, const Vector& v, double eps_H_prime,
                                        double L1, double L2) {
  DirectionChoice out;
  Vector w = v;
  double qv = q.dot(w);
  if (qv > 0.0) {
    w = -w;
    qv = -qv;
  }
  const double lhs = (L1 * eps_H_prime / L2) * qv -
                     63.0 * L1 * eps_H_prime * eps_H_prime * eps_H_prime / (128.0 * L2 * L2);
  if (lhs >= -q.squaredNorm()) {
    out.direction = -q;
    out.kind = DirectionKind::gradient;
  } else {
    out.direction = std::move(w);
    out.kind = DirectionKind::curvature;
  }
  return out;
}

/// x+ = pi_X(x - alpha grad f(x)).
inline Vector pgd_step(const ProblemInstance& problem, const Vector& x, double alpha_pi) {
  return project_feasible(problem.feasible, x - alpha_pi * problem.gradient(x));
}

namespace detail {

inline double max_drift(const Polyhedron& poly, const ActiveSet& aset, const Vector& v) {
  double worst = 0.0;
  for (Index j : aset.active)
    worst = std::max(worst, std::abs(poly.row_dot(j, v)) / poly.row_norm(j));
  return worst;
}

class LipschitzTracker {
 public:
  LipschitzTracker(ObjectiveOracle& o, const Vector& x1) : o_(o) {
    if (o_.ball_bounds) update(10.0 * x1.norm());
  }
  /// Returns true when the estimate changed.
  bool observe(const Vector& x) {
    if (!o_.ball_bounds) return false;
    const double n = x.norm();
    if (n <= radius_) return false;
    update(10.0 * n);
    return true;
  }

 private:
  void update(double r) {
    radius_ = r;
    const LipschitzBounds b = o_.ball_bounds(r);
    o_.L1 = std::max(b.L1, kLipschitzFloor);
    o_.L2 = std::max(b.L2, kLipschitzFloor);
  }
  ObjectiveOracle& o_;
  double radius_ = 0.0;
};

}  // namespace detail

/// Runs the configured variant from x1 (projected onto the feasible set first).
inline SolveResult solve(const ProblemInstance& problem_in, const Vector& x1,
                         const SolverConfig& cfg) {
  using Clock = std::chrono::steady_clock;
  const auto t0 = Clock::now();
  auto elapsed = [&] { return std::chrono::duration<double>(Clock::now() - t0).count(); };

  if (x1.size() != problem_in.dim()) throw ParameterError("solve: x1 has the wrong dimension");
  ProblemInstance problem = problem_in;  // local Lipschitz estimates
  cfg.validate(problem.oracle);
  const Polyhedron& poly = problem.feasible;
  const Index d = problem.dim();

  Vector x = poly.contains(x1, cfg.active_tol) ? x1 : project_feasible(poly, x1);
  detail::LipschitzTracker lip(problem.oracle, x);
  auto alpha_pi = [&] { return cfg.alpha_pi > 0.0 ? cfg.alpha_pi : 1.0 / problem.oracle.L1; };
  if (cfg.oracle == OracleKind::hessian && !problem.oracle.has_hessian() &&
      (cfg.variant == Variant::snap || cfg.variant == Variant::snap_simplified))
    throw CapabilityError("the Hessian eigen oracle needs Hessian-vector products; use --oracle spgd");

  Rng rng(cfg.seed);
  SolveResult res;
  bool flag_alpha_max = true;  // initial flag: maximal step
  long r_last = 0;

  double f = problem.value(x);
  Vector best_x = x;
  double best_f = f;

  auto finish = [&](Status st) {
    res.status = st;
    res.x_last = x;
    res.f_final = f;
    res.x_final = best_x;
    res.f_best = best_f;
    res.L1 = problem.oracle.L1;
    res.L2 = problem.oracle.L2;
    res.wall_time = elapsed();
    return res;
  };

  for (long r = 1;; ++r) {
    lip.observe(x);
    const ActiveSet aset = active_set(poly, x, cfg.active_tol);
    const FreeSpaceBasis basis = free_space_basis(poly, aset, cfg.rank_tol);
    const Vector grad = problem.gradient(x);
    const double a_pi = alpha_pi();
    const Vector x_pgd = project_feasible(poly, x - a_pi * grad);
    const double gap = (x_pgd - x).norm() / a_pi;

    TraceRecord rec;
    rec.iter = r;
    rec.f = f;
    rec.fosp1_gap = gap;
    rec.active_count = aset.size();
    rec.free_dim = basis.free_dim();
    if (poly.rows() > 0) rec.infeasibility = std::max(0.0, (poly.apply(x) - poly.b()).maxCoeff());

    if (r > cfg.max_iter) {
      rec.step_kind = StepKind::final_point;
      rec.elapsed_s = elapsed();
      res.trace.push_back(rec);
      res.iterations = r - 1;
      return finish(Status::max_iter);
    }

    auto take_pgd = [&] {
      rec.step_kind = StepKind::pgd;
      rec.alpha = a_pi;
      x = x_pgd;
      f = problem.value(x);
    };

    const bool is_snap = cfg.variant == Variant::snap || cfg.variant == Variant::snap_simplified;
    try {
      if (cfg.variant == Variant::pgd) {
        if (gap <= cfg.eps_G && !cfg.no_stop) {
          rec.step_kind = StepKind::final_point;
          rec.elapsed_s = elapsed();
          res.trace.push_back(rec);
          res.iterations = r - 1;
          return finish(Status::fosp1_reached);
        }
        take_pgd();
      } else if (cfg.variant == Variant::pgd_ls) {
        if (gap <= cfg.eps_G && !cfg.no_stop) {
          rec.step_kind = StepKind::final_point;
          rec.elapsed_s = elapsed();
          res.trace.push_back(rec);
          res.iterations = r - 1;
          return finish(Status::fosp1_reached);
        }
        double alpha = 1.0;
        while (true) {
          const Vector xp = project_feasible(poly, x - alpha * grad);
          const double gp = (xp - x).norm() / alpha;
          const double fp = problem.value(xp);
          if (fp <= f - 1e-4 * alpha * gp * gp) {
            x = xp;
            f = fp;
            break;
          }
          alpha *= 0.5;
          if (alpha < kStepFloor) throw LineSearchError("pgd-ls: Armijo backtracking hit the step floor");
        }
        rec.step_kind = StepKind::pgd;
        rec.alpha = alpha;
      } else if (is_snap) {
        const bool gate =
            gap <= cfg.eps_G && (cfg.variant == Variant::snap_simplified || flag_alpha_max ||
                                 r - r_last >= cfg.r_th);
        if (!gate) {
          take_pgd();
        } else {
          EigenPairResult ep;
          if (cfg.oracle == OracleKind::hessian) {
            ep = negative_eigen_pair_hessian(problem, x, basis, cfg.eps_H, cfg.delta, rng, cfg.power);
          } else {
            SpGdConfig sc = cfg.spgd_theoretical
                                ? default_spgd_config(problem.oracle.L1, problem.oracle.L2, d,
                                                      cfg.eps_H, cfg.delta)
                                : cfg.spgd;
            if (!cfg.spgd_theoretical) {
              sc.eps_H = cfg.eps_H;
              sc.delta = cfg.delta;
            }
            ep = sp_gd(problem, x, basis, sc, rng, &aset);
          }
          ++res.oracle_calls;
          rec.oracle_consulted = true;
          rec.curvature_est = ep.curvature_estimate;
          if (!ep.found()) {
            if (!cfg.no_stop) {
              rec.step_kind = StepKind::oracle_call;
              rec.elapsed_s = elapsed();
              res.trace.push_back(rec);
              res.iterations = r - 1;
              if (cfg.verify_certificate && problem.oracle.has_hessian()) {
                const auto rep = check_sosp1(problem, x, cfg.eps_G, cfg.eps_H, a_pi,
                                             CheckOptions{cfg.active_tol, cfg.rank_tol});
                res.certificate_verified = rep.sosp1;
              }
              return finish(Status::sosp1_certified);
            }
            take_pgd();
            flag_alpha_max = false;
            r_last = r;
          } else {
            rec.oracle_found = true;
            rec.direction_norm = ep.direction.norm();
            rec.direction_drift = detail::max_drift(poly, aset, ep.direction);
            const Vector q = basis.project(grad);
            const double eps_prime = -ep.curvature_estimate;
            DirectionChoice dc;
            if (cfg.variant == Variant::snap) {
              dc = select_direction(q, ep.direction, eps_prime, problem.oracle.L1, problem.oracle.L2);
            } else {
              dc.direction = q.dot(ep.direction) > 0.0 ? Vector(-ep.direction) : ep.direction;
              dc.kind = DirectionKind::curvature;
            }
            rec.gradient_direction = dc.kind == DirectionKind::gradient;
            if (dc.direction.norm() == 0.0) {
              // q = 0 and the gradient direction won: nothing to move along.
              dc.direction = q.dot(ep.direction) > 0.0 ? Vector(-ep.direction) : ep.direction;
              dc.kind = DirectionKind::curvature;
              rec.gradient_direction = false;
            }
            const LineSearchOutcome ls = line_search(problem, aset, x, f, dc.direction, dc.kind,
                                                     q.squaredNorm(), eps_prime, problem.oracle.L1);
            rec.alpha = ls.alpha_used;
            rec.line_search_max = ls.took_max_step;
            rec.boundary_hit = ls.took_max_step && ls.hit.has_value();
            rec.step_kind = rec.boundary_hit ? StepKind::boundary
                            : dc.kind == DirectionKind::gradient ? StepKind::ncd_grad
                                                                 : StepKind::ncd_curv;
            x = ls.x_next;
            f = ls.f_next;
            flag_alpha_max = ls.took_max_step;
            if (!ls.took_max_step) r_last = r;
          }
        }
      }
    } catch (const LineSearchError& e) {
      rec.step_kind = StepKind::final_point;
      rec.elapsed_s = elapsed();
      res.trace.push_back(rec);
      res.iterations = r - 1;
      res.message = e.what();
      return finish(Status::line_search_failure);
    }
    rec.elapsed_s = elapsed();
    res.trace.push_back(rec);
    if (f <= best_f) {
      best_f = f;
      best_x = x;
    }
  }
}

}  // namespace snap
