#include <gtest/gtest.h>

#include "oracles.hpp"
#include "snap/oracle.hpp"

using namespace snap;

namespace {

ProblemParams nmf_params(Index n, Index m, Index k) {
  ProblemParams p;
  p.n = n;
  p.m = m;
  p.k = k;
  p.zero_fraction = 0.0;
  return p;
}

double rel_err(const Vector& a, const Vector& b) { return (a - b).norm() / std::max(1.0, b.norm()); }

}  // namespace

TEST(Nmf, PlantedFactorsGiveZeroLoss) {
  const auto prob = make_problem(ProblemKind::nmf, nmf_params(6, 5, 2), 42);
  ASSERT_TRUE(prob.known_optimum);
  EXPECT_NEAR(prob.value(prob.known_optimum->x), 0.0, 1e-24);
  EXPECT_LE(prob.gradient(prob.known_optimum->x).norm(), 1e-12);
}

TEST(Nmf, LossMatchesDirectResidual) {
  // Rebuild the data from the planted point and compare with a direct formula.
  const Index n = 6, m = 5, k = 2;
  const auto prob = make_problem(ProblemKind::nmf, nmf_params(n, m, k), 42);
  const Vector xs = prob.known_optimum->x;
  Eigen::Map<const Matrix> X0(xs.data(), n + m, k);
  const Matrix M = X0.topRows(n) * X0.bottomRows(m).transpose();
  Rng rng(1);
  const Vector x = uniform_vector(prob.dim(), 0.0, 1.0, rng);
  Eigen::Map<const Matrix> X(x.data(), n + m, k);
  EXPECT_NEAR(prob.value(x), (X.topRows(n) * X.bottomRows(m).transpose() - M).squaredNorm(), 1e-10);
}

TEST(Nmf, GradientMatchesFiniteDifferences) {
  const auto prob = make_problem(ProblemKind::nmf, nmf_params(6, 5, 2), 7);
  Rng rng(3);
  for (int t = 0; t < 5; ++t) {
    const Vector x = uniform_vector(prob.dim(), 0.0, 1.0, rng);
    const Vector fd = oracle::fd_gradient(prob.oracle.value, x, 1e-6);
    EXPECT_LE(rel_err(prob.gradient(x), fd), 1e-5);
  }
  EXPECT_LE(fd_verify(prob, 5, 1e-6, 9).max_grad_rel_err, 1e-5);
}

TEST(Nmf, HessVecMatchesGradientDifferences) {
  const auto prob = make_problem(ProblemKind::nmf, nmf_params(6, 5, 2), 7);
  const auto rep = fd_verify(prob, 5, 1e-5, 4);
  ASSERT_TRUE(rep.max_hess_rel_err);
  EXPECT_LE(*rep.max_hess_rel_err, 1e-6);
}

TEST(PenalizedNmf, DerivativesMatchFiniteDifferences) {
  ProblemParams p = nmf_params(6, 5, 3);
  p.rho = 0.3;
  const auto prob = make_problem(ProblemKind::penalized_nmf, p, 8);
  const auto rep = fd_verify(prob, 5, 1e-6, 2);
  EXPECT_LE(rep.max_grad_rel_err, 1e-5);
  EXPECT_LE(*rep.max_hess_rel_err, 1e-4);
}

TEST(SymNmf, PlantedPointIsFeasibleAndOptimal) {
  ProblemParams p;
  p.n = 8;
  p.k = 3;
  const auto prob = make_problem(ProblemKind::sym_nmf_simplex, p, 5);
  ASSERT_TRUE(prob.known_optimum);
  EXPECT_TRUE(prob.feasible.contains(prob.known_optimum->x));
  EXPECT_NEAR(prob.value(prob.known_optimum->x), 0.0, 1e-24);
  const auto rep = fd_verify(prob, 4, 1e-6, 1);
  EXPECT_LE(rep.max_grad_rel_err, 1e-5);
  EXPECT_LE(*rep.max_hess_rel_err, 1e-4);
}

TEST(TwoLayerNn, HessVecMatchesFiniteDifferences) {
  ProblemParams p;
  p.m = 4;
  p.n = 6;
  p.k = 2;
  p.hidden = 3;
  const auto prob = make_problem(ProblemKind::two_layer_nn, p, 12);
  EXPECT_NEAR(prob.value(prob.known_optimum->x), 0.0, 1e-20);
  const auto rep = fd_verify(prob, 5, 1e-5, 6);
  EXPECT_LE(rep.max_grad_rel_err, 1e-5);
  ASSERT_TRUE(rep.max_hess_rel_err);
  EXPECT_LE(*rep.max_hess_rel_err, 1e-4);
}

TEST(BoxQp, ExampleOneValue) {
  const auto prob = example1();
  Vector x(2);
  x << 0.5, 0.5;
  EXPECT_DOUBLE_EQ(prob.value(x), -0.5);
  EXPECT_DOUBLE_EQ(prob.oracle.L1, 2.0);
  EXPECT_TRUE(prob.oracle.exact_lipschitz);
}

TEST(BoxQp, QuadraticFiniteDifferencesAreExact) {
  ProblemParams p;
  p.dim = 5;
  const auto prob = make_problem(ProblemKind::box_qp, p, 3);
  EXPECT_LE(fd_verify(prob, 10, 1e-5, 1).max_grad_rel_err, 1e-9);
}

TEST(BoxQp, ConvexOptimumMatchesEnumerationOracle) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    ProblemParams p;
    p.dim = 3;
    p.convex = true;
    const auto prob = make_problem(ProblemKind::box_qp, p, seed);
    if (!prob.known_optimum) continue;
    Matrix Q(3, 3);
    for (Index i = 0; i < 3; ++i) Q.col(i) = prob.oracle.hess_vec(Vector::Zero(3), Vector::Unit(3, i));
    const Vector c = prob.gradient(Vector::Zero(3));
    const auto [xb, fb] = oracle::box_qp_global_min(Q, c, Vector::Zero(3), Vector::Ones(3));
    EXPECT_LE((xb - prob.known_optimum->x).norm(), 1e-9);
    EXPECT_NEAR(fb, prob.known_optimum->f, 1e-12);
  }
}

TEST(RandomQp, PolyhedronHasInteriorPoint) {
  ProblemParams p;
  p.dim = 3;
  p.constraints = 5;
  const auto prob = make_problem(ProblemKind::random_qp, p, 4);
  EXPECT_EQ(prob.feasible.rows(), 5 + 6);
  const Vector x = project_feasible(prob.feasible, Vector::Zero(3));
  EXPECT_TRUE(prob.feasible.contains(x, 1e-9));
}

TEST(Perturb, ZeroScaleIsIdentity) {
  const auto base = make_problem(ProblemKind::nmf, nmf_params(4, 3, 2), 1);
  const auto pert = perturb_linear(base, 0.0, 5);
  Rng rng(8);
  for (int t = 0; t < 100; ++t) {
    const Vector x = gaussian_vector(base.dim(), rng);
    EXPECT_EQ(pert.value(x), base.value(x));
  }
}

TEST(Perturb, AddsExactlyTheStoredLinearTerm) {
  const auto base = example1();
  const auto pert = perturb_linear(base, 0.3, 17);
  ASSERT_EQ(pert.perturbation.size(), 2);
  EXPECT_NEAR(pert.perturbation.norm(), 0.3, 1e-15);
  Rng rng(2);
  for (int t = 0; t < 20; ++t) {
    const Vector x = gaussian_vector(2, rng);
    EXPECT_EQ(pert.value(x), base.value(x) + pert.perturbation.dot(x));
    EXPECT_EQ(pert.gradient(x), Vector(base.gradient(x) + pert.perturbation));
  }
}

TEST(Perturb, SameSeedSameVector) {
  const auto base = example1();
  EXPECT_EQ(perturb_linear(base, 1.0, 99).perturbation, perturb_linear(base, 1.0, 99).perturbation);
  EXPECT_NE(perturb_linear(base, 1.0, 99).perturbation, perturb_linear(base, 1.0, 100).perturbation);
}

TEST(Perturb, HessianIsUnchanged) {
  const auto base = example1();
  const auto pert = perturb_linear(base, 1.0, 3);
  const Vector v = Vector::Ones(2);
  EXPECT_EQ(pert.oracle.hess_vec(Vector::Zero(2), v), base.oracle.hess_vec(Vector::Zero(2), v));
}

TEST(InitialPoint, IsFeasibleAndScaled) {
  const auto prob = make_problem(ProblemKind::nmf, nmf_params(10, 8, 3), 2);
  const Vector x = initial_point(prob, 1e-10, 4);
  EXPECT_TRUE(prob.feasible.contains(x));
  EXPECT_LE(x.lpNorm<Eigen::Infinity>(), 1e-9);
  EXPECT_GT(x.norm(), 0.0);
}

TEST(BallBounds, CoverSampledCurvature) {
  // Sampled Rayleigh quotients on the ball must not exceed the reported L1.
  const auto prob = make_problem(ProblemKind::nmf, nmf_params(5, 4, 2), 3);
  const double r = 2.0;
  const auto bounds = prob.oracle.bounds_for_radius(r);
  Rng rng(6);
  for (int t = 0; t < 200; ++t) {
    Vector x = gaussian_vector(prob.dim(), rng);
    x *= r * std::uniform_real_distribution<>(0, 1)(rng) / x.norm();
    Vector v = gaussian_vector(prob.dim(), rng);
    v /= v.norm();
    EXPECT_LE(prob.oracle.hess_vec(x, v).norm(), bounds.L1 * (1 + 1e-12));
  }
}

TEST(Construction, RejectsBadShapesAndKinds) {
  ProblemParams p;
  p.k = 0;
  EXPECT_THROW(make_problem(ProblemKind::nmf, p, 1), ParameterError);
  EXPECT_THROW(parse_problem_kind("tensor"), ParameterError);
  EXPECT_EQ(parse_problem_kind("sym-nmf-simplex"), ProblemKind::sym_nmf_simplex);
  Matrix Q = Matrix::Identity(2, 2);
  Q(0, 1) = 1.0;
  EXPECT_THROW(make_quadratic("q", Q, Vector::Zero(2), Polyhedron::unconstrained(2)), ParameterError);
}
