// Library walkthrough on f(x) = -|x|^2 over [0, 1]^2.
//
// The origin passes the tractable first-kind test but fails the second-kind
// test. A small linear term restores strict complementarity, and SNAP then
// walks from the origin to the corner (1, 1).

#include <iostream>

#include "snap/snap.hpp"

int main() {
  using namespace snap;
  const ProblemInstance p = example1();
  const Vector origin = Vector::Zero(2);

  const auto first = check_sosp1(p, origin, 1e-6, 1e-6);
  const auto second = check_sosp2_bruteforce(p, origin, 1e-6, 1e-6);
  std::cout << "origin: SOSP1 " << std::boolalpha << first.sosp1 << ", SOSP2 " << second.sosp2
            << ", worst quadratic form " << second.min_quadratic << "\n";

  Vector q(2);
  q << -0.005, -0.005;
  const ProblemInstance perturbed = perturb_with(p, q);

  SolverConfig cfg;
  cfg.variant = Variant::snap;
  cfg.oracle = OracleKind::hessian;
  cfg.eps_G = 1e-6;
  cfg.eps_H = 1e-3;
  cfg.seed = 7;
  const SolveResult res = solve(perturbed, origin, cfg);

  std::cout << "SNAP on the perturbed problem: " << to_string(res.status) << " after " << res.iterations
            << " iterations, x = (" << res.x_final.transpose() << "), f = " << res.f_final << "\n";
  return res.status == Status::sosp1_certified ? 0 : 1;
}
