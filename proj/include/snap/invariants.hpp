#pragma once

// Runtime checks over a solver trace: monotone descent, feasibility, oracle
// gating, boundary streak length and oracle direction quality.

#include <algorithm>
#include <sstream>
#include <string>
#include <vector>

#include "snap/solver.hpp"

namespace snap {

struct InvariantReport {
  std::vector<std::string> violations;
  long max_boundary_streak = 0;
  bool ok() const { return violations.empty(); }
};

struct InvariantOptions {
  bool expect_monotone = true;
  double monotone_rel_tol = 1e-12;
  double feasibility_tol = 1e-8;
  double unit_tol = 1e-10;
  double drift_tol = 1e-8;
  Index dim = 0;          ///< d
  Index constraints = 0;  ///< m
};

/// Monotone descent is guaranteed for the line-search variants and for PGD
/// with a step no larger than 1/L1.
inline bool monotone_expected(const SolverConfig& cfg, double L1) {
  switch (cfg.variant) {
    case Variant::snap:
    case Variant::snap_simplified:
    case Variant::pgd:
      return cfg.alpha_pi <= 0.0 || cfg.alpha_pi * L1 <= 1.0 + 1e-12;
    case Variant::pgd_ls:
      return true;
  }
  return true;
}

inline InvariantReport check_trace_invariants(const SolveResult& res, const SolverConfig& cfg,
                                              const InvariantOptions& opt) {
  InvariantReport rep;
  auto fail = [&](long iter, const std::string& what) {
    if (rep.violations.size() >= 20) return;
    std::ostringstream s;
    s << "iter " << iter << ": " << what;
    rep.violations.push_back(s.str());
  };
  const auto& tr = res.trace;
  const long streak_cap = static_cast<long>(std::min(opt.dim, opt.constraints));
  long streak = 0;
  std::optional<long> last_empty_ls;  // iteration of the latest non-maximal NCD step
  bool last_ls_max = true;

  for (size_t i = 0; i < tr.size(); ++i) {
    const TraceRecord& t = tr[i];
    if (i > 0 && opt.expect_monotone) {
      const double prev = tr[i - 1].f;
      if (t.f > prev + opt.monotone_rel_tol * std::max(1.0, std::abs(prev)))
        fail(t.iter, "objective increased from " + std::to_string(prev) + " to " + std::to_string(t.f));
    }
    if (t.infeasibility > opt.feasibility_tol)
      fail(t.iter, "iterate infeasible by " + std::to_string(t.infeasibility));
    if (t.active_count < 0 || t.free_dim < 0 || t.free_dim > opt.dim)
      fail(t.iter, "inconsistent active_count/free_dim");

    if (t.oracle_consulted) {
      if (t.fosp1_gap > cfg.eps_G) fail(t.iter, "oracle consulted while gap > eps_G");
      if (cfg.variant == Variant::snap && !last_ls_max && last_empty_ls &&
          t.iter - *last_empty_ls < cfg.r_th)
        fail(t.iter, "oracle consulted within r_th of a backtracked step");
      if (t.oracle_found) {
        if (std::abs(t.direction_norm - 1.0) > opt.unit_tol)
          fail(t.iter, "oracle direction not unit norm");
        if (t.direction_drift > opt.drift_tol) fail(t.iter, "oracle direction leaves the free space");
      } else if (cfg.no_stop) {
        // Under no_stop an empty oracle answer acts like a backtracked step.
        last_ls_max = false;
        last_empty_ls = t.iter;
      }
    }
    if (t.line_search_max.has_value()) {
      last_ls_max = *t.line_search_max;
      if (!last_ls_max) last_empty_ls = t.iter;
    }
    if (t.step_kind == StepKind::boundary) {
      ++streak;
      rep.max_boundary_streak = std::max(rep.max_boundary_streak, streak);
      if (streak > streak_cap)
        fail(t.iter, "boundary streak " + std::to_string(streak) + " exceeds min(d, m)");
    } else {
      streak = 0;
    }
  }
  return rep;
}

}  // namespace snap
