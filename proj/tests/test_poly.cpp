#include <gtest/gtest.h>

#include <sstream>

#include "oracles.hpp"
#include "snap/poly.hpp"

using namespace snap;

namespace {

Vector vec(std::initializer_list<double> v) {
  Vector out(static_cast<Index>(v.size()));
  Index i = 0;
  for (double x : v) out[i++] = x;
  return out;
}

Polyhedron unit_box(Index d) { return Polyhedron::box(Vector::Zero(d), Vector::Ones(d)); }

Matrix dense_projector(const FreeSpaceBasis& fb) {
  const Index d = fb.dim();
  Matrix P(d, d);
  for (Index i = 0; i < d; ++i) P.col(i) = fb.project(Vector::Unit(d, i));
  return P;
}

}  // namespace

TEST(ActiveSet, BoundaryCoordinateOfOrthant) {
  const auto poly = Polyhedron::nonneg_orthant(2);
  const auto a = active_set(poly, vec({0.0, 0.5}));
  EXPECT_EQ(a.active, std::vector<Index>({0}));
  EXPECT_EQ(a.inactive, std::vector<Index>({1}));
}

TEST(ActiveSet, StrictInteriorIsEmpty) {
  const auto a = active_set(Polyhedron::nonneg_orthant(2), vec({0.3, 0.5}));
  EXPECT_TRUE(a.empty());
  EXPECT_EQ(a.inactive.size(), 2u);
}

TEST(ActiveSet, BoxCornerActivatesUpperBounds) {
  const auto a = active_set(unit_box(2), vec({1.0, 1.0}));
  EXPECT_EQ(a.active, std::vector<Index>({2, 3}));
}

TEST(ActiveSet, RelativeToleranceScalesWithRhs) {
  const auto poly = Polyhedron::box(Vector::Constant(1, -1e6), Vector::Constant(1, 1e6));
  // 1e-4 away from a bound of magnitude 1e6 is within 1e-9 * (1 + 1e6).
  const auto a = active_set(poly, Vector::Constant(1, 1e6 - 1e-4));
  EXPECT_EQ(a.active, std::vector<Index>({1}));
}

TEST(ActiveSet, InfeasiblePointNamesWorstConstraint) {
  const auto poly = unit_box(2);
  try {
    active_set(poly, vec({0.5, 1.7}));
    FAIL() << "expected FeasibilityError";
  } catch (const FeasibilityError& e) {
    EXPECT_EQ(e.constraint(), 3);
    EXPECT_NEAR(e.violation(), 0.7, 1e-12);
  }
}

TEST(FreeSpace, AxisAlignedRow) {
  Matrix A(1, 2);
  A << 1, 0;
  const Polyhedron poly(A, vec({1.0}));
  const auto a = active_set(poly, vec({1.0, 3.0}));
  const auto fb = free_space_basis(poly, a);
  EXPECT_EQ(fb.free_dim(), 1);
  EXPECT_TRUE(dense_projector(fb).isApprox(vec({0.0, 1.0}).asDiagonal().toDenseMatrix()));
}

TEST(FreeSpace, EmptyActiveSetGivesIdentity) {
  const auto poly = unit_box(3);
  const auto fb = free_space_basis(poly, active_set(poly, Vector::Constant(3, 0.5)));
  EXPECT_EQ(fb.free_dim(), 3);
  EXPECT_TRUE(dense_projector(fb).isApprox(Matrix::Identity(3, 3)));
}

TEST(FreeSpace, DuplicateRowsMatchSvdOracle) {
  Matrix A(2, 2);
  A << 1, 0, 1, 0;
  const Polyhedron poly(A, vec({1.0, 1.0}));
  const auto a = active_set(poly, vec({1.0, -2.0}));
  ASSERT_EQ(a.size(), 2);
  const auto fb = free_space_basis(poly, a);
  EXPECT_EQ(fb.free_dim(), 1);
  const Matrix Z = oracle::null_space(A, 2);
  EXPECT_TRUE(dense_projector(fb).isApprox(Z * Z.transpose(), 1e-12));
}

TEST(FreeSpace, GeneralRowsMatchSvdOracle) {
  Rng rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    const Index d = 4;
    Matrix A = Matrix::NullaryExpr(3, d, [&] { return std::normal_distribution<>(0, 1)(rng); });
    const Vector x0 = gaussian_vector(d, rng);
    Vector b = A * x0;
    b[2] += 1.0;  // inactive row
    const Polyhedron poly(A, b);
    const auto a = active_set(poly, x0);
    ASSERT_EQ(a.active, std::vector<Index>({0, 1}));
    const auto fb = free_space_basis(poly, a);
    const Matrix Z = oracle::null_space(A.topRows(2), d);
    EXPECT_EQ(fb.free_dim(), 2);
    EXPECT_TRUE(dense_projector(fb).isApprox(Z * Z.transpose(), 1e-10));
  }
}

TEST(FreeSpace, SimplexBlocksProjectOntoZeroSumFreeCoordinates) {
  const auto poly = Polyhedron::simplices(2, 3);
  const Vector x = vec({0.0, 0.4, 0.6, 0.2, 0.3, 0.5});
  const auto a = active_set(poly, x);
  const auto fb = free_space_basis(poly, a);
  EXPECT_EQ(fb.free_dim(), 1 + 2);
  Matrix act(a.size(), 6);
  for (Index r = 0; r < a.size(); ++r) act.row(r) = poly.A().row(a.active[static_cast<size_t>(r)]);
  const Matrix Z = oracle::null_space(act, 6);
  EXPECT_TRUE(dense_projector(fb).isApprox(Z * Z.transpose(), 1e-12));
}

TEST(ProjectFree, CoordinateProjector) {
  Matrix A(1, 2);
  A << -1, 0;
  const Polyhedron poly(A, vec({0.0}));
  const auto fb = free_space_basis(poly, active_set(poly, vec({0.0, 1.0})));
  EXPECT_TRUE(project_free(fb, vec({3.0, 4.0})).isApprox(vec({0.0, 4.0})));
}

TEST(ProjectFree, IdentityLeavesVectorAlone) {
  const auto poly = Polyhedron::unconstrained(3);
  const auto fb = free_space_basis(poly, active_set(poly, Vector::Zero(3)));
  const Vector v = vec({1.5, -2.0, 7.0});
  EXPECT_EQ(project_free(fb, v), v);
}

TEST(ProjectFree, DiagonalDirection) {
  // Z = (1,1)/sqrt2, so Z Z^T (1,0) = (0.5, 0.5).
  Matrix A(1, 2);
  A << 1, -1;
  const Polyhedron poly(A, vec({0.0}));
  const auto fb = free_space_basis(poly, active_set(poly, vec({0.3, 0.3})));
  EXPECT_TRUE(project_free(fb, vec({1.0, 0.0})).isApprox(vec({0.5, 0.5}), 1e-12));
}

TEST(ProjectFeasible, OrthantClamp) {
  EXPECT_EQ(project_feasible(Polyhedron::nonneg_orthant(2), vec({-1.0, 2.0})), vec({0.0, 2.0}));
}

TEST(ProjectFeasible, SimplexMatchesSortOracle) {
  const auto poly = Polyhedron::simplices(1, 2);
  EXPECT_TRUE(project_feasible(poly, vec({0.8, 0.8})).isApprox(vec({0.5, 0.5}), 1e-14));
  Rng rng(3);
  const auto big = Polyhedron::simplices(3, 7);
  for (int t = 0; t < 50; ++t) {
    const Vector v = 2.0 * gaussian_vector(21, rng);
    const Vector p = project_feasible(big, v);
    for (Index k = 0; k < 3; ++k)
      EXPECT_TRUE(p.segment(7 * k, 7).isApprox(oracle::project_simplex_sort(v.segment(7 * k, 7)), 1e-12));
  }
}

TEST(ProjectFeasible, SimplexAsGenericInequalities) {
  // The same set written without a structure tag takes the generic path.
  Matrix A(4, 2);
  A << -1, 0, 0, -1, 1, 1, -1, -1;
  const Polyhedron poly(A, vec({0, 0, 1, -1}));
  EXPECT_EQ(poly.structure(), Structure::generic);
  EXPECT_TRUE(project_feasible(poly, vec({0.8, 0.8})).isApprox(vec({0.5, 0.5}), 1e-9));
}

TEST(ProjectFeasible, CappedOrthantMatchesEnumerationOracle) {
  Matrix A(3, 2);
  A << 1, 1, -1, 0, 0, -1;
  const Vector b = vec({1, 0, 0});
  const Polyhedron poly(A, b);
  const Vector p = project_feasible(poly, vec({2.0, 2.0}));
  const auto ref = oracle::project_bruteforce(A, b, vec({2.0, 2.0}));
  ASSERT_TRUE(ref);
  EXPECT_TRUE(p.isApprox(*ref, 1e-9));
  EXPECT_TRUE(p.isApprox(vec({0.5, 0.5}), 1e-9));
}

TEST(ProjectFeasible, RandomPolyhedraMatchEnumerationOracle) {
  Rng rng(11);
  for (int t = 0; t < 60; ++t) {
    const Index d = 1 + t % 3, m = 1 + (t / 3) % 5;
    Matrix A = Matrix::NullaryExpr(m, d, [&] { return std::normal_distribution<>(0, 1)(rng); });
    const Vector x0 = gaussian_vector(d, rng);
    const Vector b = A * x0 + uniform_vector(m, 0.0, 1.0, rng);
    const Polyhedron poly(A, b);
    const Vector v = 3.0 * gaussian_vector(d, rng);
    const auto ref = oracle::project_bruteforce(A, b, v);
    ASSERT_TRUE(ref);
    EXPECT_LE((project_feasible(poly, v) - *ref).norm(), 1e-6) << "trial " << t;
  }
}

TEST(ProjectFeasible, EmptySetRaises) {
  Matrix A(2, 1);
  A << 1, -1;
  const Polyhedron poly(A, vec({-1.0, -1.0}));  // x <= -1 and x >= 1
  EXPECT_THROW(project_feasible(poly, vec({0.0})), ProjectionError);
}

TEST(ProjectFeasible, ActiveSetMethodMatchesEnumerationOracle) {
  Rng rng(12);
  for (int t = 0; t < 300; ++t) {
    const Index d = 1 + t % 4, m = 1 + (t / 4) % 6;
    Matrix A = Matrix::NullaryExpr(m, d, [&] { return std::normal_distribution<>(0, 1)(rng); });
    if (t % 5 == 0) A.row(m - 1) = A.row(0) * 1.0000001;  // nearly parallel rows
    const Vector x0 = gaussian_vector(d, rng);
    const Vector b = A * x0 + uniform_vector(m, 0.0, 1.0, rng);
    const Polyhedron poly(A, b);
    const Vector v = 3.0 * gaussian_vector(d, rng);
    const auto ref = oracle::project_bruteforce(A, b, v);
    ASSERT_TRUE(ref);
    EXPECT_LE((detail::project_active_set(poly, v, kProjectionTol) - *ref).norm(), 1e-6) << "trial " << t;
  }
}

TEST(ProjectFeasible, ActiveSetMethodDetectsEmptySet) {
  Matrix A(3, 2);
  A << 1, 0, -1, 0, 0, 1;
  const Polyhedron poly(A, vec({-1.0, -1.0, 5.0}));  // x1 <= -1 and x1 >= 1
  EXPECT_THROW(detail::project_active_set(poly, vec({0.0, 0.0}), kProjectionTol), ProjectionError);
}

TEST(MaxStep, SingleBindingRay) {
  const auto poly = unit_box(2);
  const Vector x = vec({0.5, 0.5});
  const auto ms = max_step(poly, active_set(poly, x), x, vec({1.0, 0.0}), 1.0);
  EXPECT_TRUE(ms.bounded);
  EXPECT_DOUBLE_EQ(ms.alpha_max, 0.5);
  EXPECT_EQ(ms.hit, 2);
}

TEST(MaxStep, LowerBoundOfOrthant) {
  const auto poly = Polyhedron::nonneg_orthant(2);
  const Vector x = vec({0.5, 0.5});
  const auto ms = max_step(poly, active_set(poly, x), x, vec({-1.0, 0.0}), 1.0);
  EXPECT_DOUBLE_EQ(ms.alpha_max, 0.5);
  EXPECT_EQ(ms.hit, 0);
}

TEST(MaxStep, UnboundedRayFallsBackToInverseL1) {
  const auto poly = Polyhedron::nonneg_orthant(2);
  const Vector x = vec({0.5, 0.5});
  const auto ms = max_step(poly, active_set(poly, x), x, vec({1.0, 1.0}), 2.0);
  EXPECT_FALSE(ms.bounded);
  EXPECT_FALSE(ms.hit);
  EXPECT_DOUBLE_EQ(ms.alpha_max, 0.5);
}

TEST(MaxStep, TiesGoToLowestIndex) {
  const auto poly = unit_box(2);
  const Vector x = vec({0.5, 0.5});
  const auto ms = max_step(poly, active_set(poly, x), x, vec({1.0, 1.0}), 1.0);
  EXPECT_EQ(ms.hit, 2);
}

TEST(MaxStep, DirectionLeavingFreeSpaceIsContractViolation) {
  const auto poly = Polyhedron::nonneg_orthant(2);
  const Vector x = vec({0.0, 0.5});
  EXPECT_THROW(max_step(poly, active_set(poly, x), x, vec({1.0, 0.0}), 1.0), ContractError);
}

TEST(StructuredProducts, MatchDenseProduct) {
  Rng rng(2);
  for (const Polyhedron& poly : {Polyhedron::nonneg_orthant(5), unit_box(5), Polyhedron::simplices(2, 3)}) {
    const Vector v = gaussian_vector(poly.dim(), rng);
    EXPECT_TRUE(poly.apply(v).isApprox(poly.A() * v, 1e-14));
    for (Index j = 0; j < poly.rows(); ++j) EXPECT_NEAR(poly.row_dot(j, v), poly.A().row(j).dot(v), 1e-14);
  }
}

TEST(Parsing, RoundTripAndStructureInference) {
  std::stringstream s;
  write_polyhedron(s, unit_box(2));
  const Polyhedron back = parse_polyhedron(s);
  EXPECT_EQ(back.structure(), Structure::box);
  EXPECT_EQ(back.A(), unit_box(2).A());
  EXPECT_EQ(back.b(), unit_box(2).b());
}

TEST(Parsing, MalformedInputRaises) {
  std::stringstream bad("2 2\n1 0 1\n0 1\n");
  EXPECT_THROW(parse_polyhedron(bad), ParseError);
  std::stringstream word("1 1\n1 x\n");
  EXPECT_THROW(parse_polyhedron(word), ParseError);
}

TEST(Construction, RejectsMismatchedShapesAndBadTags) {
  EXPECT_THROW(Polyhedron(Matrix::Identity(2, 2), Vector::Zero(3)), ParameterError);
  EXPECT_THROW(Polyhedron(Matrix::Identity(2, 2), Vector::Zero(2), Structure::nonneg_orthant),
               ParameterError);
}
