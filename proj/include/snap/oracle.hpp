#pragma once

// Objective oracles (value, gradient, Hessian-vector product) for the problem
// zoo: NMF and its penalized / symmetric-simplex variants, a nonnegative
// two-layer sigmoid network, and box / polyhedral quadratic programs.

#include <algorithm>
#include <functional>
#include <memory>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "snap/core.hpp"
#include "snap/poly.hpp"

namespace snap {

struct LipschitzBounds {
  double L1 = 1.0;  ///< gradient Lipschitz constant
  double L2 = 1.0;  ///< Hessian Lipschitz constant
};

/// Smallest Hessian-Lipschitz constant reported for quadratics (exactly 0).
inline constexpr double kLipschitzFloor = std::numeric_limits<double>::epsilon();

struct ObjectiveOracle {
  Index dim = 0;
  std::function<double(const Vector&)> value;
  std::function<Vector(const Vector&)> gradient;
  /// Optional; only the Hessian-based curvature oracle and certificates need it.
  std::function<Vector(const Vector&, const Vector&)> hess_vec;
  double L1 = 1.0;
  double L2 = 1.0;
  /// True when L1/L2 are exact global constants (quadratics).
  bool exact_lipschitz = false;
  /// Bounds valid on the ball ||x|| <= radius. Empty when L1/L2 are global.
  std::function<LipschitzBounds(double)> ball_bounds;

  bool has_hessian() const { return static_cast<bool>(hess_vec); }

  LipschitzBounds bounds_for_radius(double radius) const {
    if (!ball_bounds) return {L1, L2};
    return ball_bounds(radius);
  }
};

struct KnownOptimum {
  Vector x;
  double f = 0.0;
};

struct ProblemInstance {
  std::string name;
  ObjectiveOracle oracle;
  Polyhedron feasible;
  std::optional<KnownOptimum> known_optimum;
  /// Linear term q added by perturb_linear (zero-length when unperturbed).
  Vector perturbation;

  Index dim() const { return oracle.dim; }
  double value(const Vector& x) const { return oracle.value(x); }
  Vector gradient(const Vector& x) const { return oracle.gradient(x); }
};

enum class ProblemKind { nmf, sym_nmf_simplex, penalized_nmf, two_layer_nn, box_qp, random_qp };

inline const char* to_string(ProblemKind k) {
  switch (k) {
    case ProblemKind::nmf: return "nmf";
    case ProblemKind::sym_nmf_simplex: return "sym-nmf-simplex";
    case ProblemKind::penalized_nmf: return "penalized-nmf";
    case ProblemKind::two_layer_nn: return "two-layer-nn";
    case ProblemKind::box_qp: return "box-qp";
    case ProblemKind::random_qp: return "random-qp";
  }
  return "?";
}

inline ProblemKind parse_problem_kind(const std::string& s) {
  for (auto k : {ProblemKind::nmf, ProblemKind::sym_nmf_simplex, ProblemKind::penalized_nmf,
                 ProblemKind::two_layer_nn, ProblemKind::box_qp, ProblemKind::random_qp})
    if (s == to_string(k)) return k;
  throw ParameterError("unknown problem kind '" + s + "'");
}

/// Shapes and data for make_problem. Unused fields are ignored per kind.
///
///  nmf / penalized-nmf: W is n x k, H is m x k, M = W0 H0^T is n x m;
///      x = vec([W; H]) (column-major, (n + m) x k).
///  sym-nmf-simplex:     H is n x k with columns on the simplex; x = vec(H).
///  two-layer-nn:        X is m x n (features x samples), W is k x hidden,
///      H is m x hidden, Y = W0 sigmoid(H0^T X); x = vec([W; H]).
///  box-qp / random-qp:  f = 1/2 x^T Q x + c^T x over a box / random polyhedron.
struct ProblemParams {
  Index m = 20;
  Index n = 50;
  Index k = 10;
  Index hidden = 15;
  double rho = 0.1;
  double zero_fraction = 0.05;

  Index dim = 2;
  Index constraints = 4;
  bool convex = false;
  std::optional<Matrix> Q;
  std::optional<Vector> c;
  std::optional<Vector> lo;
  std::optional<Vector> hi;
};

namespace detail {

inline double spectral_norm_sym(const Matrix& Q) {
  if (Q.size() == 0) return 0.0;
  Eigen::SelfAdjointEigenSolver<Matrix> es(Q, Eigen::EigenvaluesOnly);
  return std::max(std::abs(es.eigenvalues().minCoeff()), std::abs(es.eigenvalues().maxCoeff()));
}

inline Matrix random_symmetric(Index d, bool convex, Rng& rng) {
  Matrix G(d, d);
  for (Index j = 0; j < d; ++j) G.col(j) = gaussian_vector(d, rng);
  if (convex) return G.transpose() * G / static_cast<double>(d) + 0.1 * Matrix::Identity(d, d);
  return 0.5 * (G + G.transpose());
}

/// Zeroes round(fraction * size) distinct entries chosen uniformly.
inline void zero_entries(Matrix& M, double fraction, Rng& rng) {
  const auto total = static_cast<size_t>(M.size());
  const auto count = static_cast<size_t>(std::llround(fraction * static_cast<double>(total)));
  if (count == 0) return;
  std::vector<size_t> idx(total);
  std::iota(idx.begin(), idx.end(), 0);
  std::shuffle(idx.begin(), idx.end(), rng);
  for (size_t i = 0; i < count; ++i) M.data()[idx[i]] = 0.0;
}

inline double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

}  // namespace detail

/// f = 1/2 x^T Q x + c^T x over `feasible`. L1 = ||Q||_2 exactly.
inline ProblemInstance make_quadratic(std::string name, const Matrix& Q, const Vector& c,
                                      Polyhedron feasible) {
  const Index d = c.size();
  if (Q.rows() != d || Q.cols() != d || feasible.dim() != d)
    throw ParameterError("quadratic: Q, c and the polyhedron disagree on dimension");
  if (!Q.isApprox(Q.transpose(), 1e-12) && !(Q - Q.transpose()).isZero(1e-12))
    throw ParameterError("quadratic: Q must be symmetric");
  auto Qs = std::make_shared<const Matrix>(0.5 * (Q + Q.transpose()));
  auto cs = std::make_shared<const Vector>(c);
  ObjectiveOracle o;
  o.dim = d;
  o.value = [Qs, cs](const Vector& x) { return 0.5 * x.dot(*Qs * x) + cs->dot(x); };
  o.gradient = [Qs, cs](const Vector& x) -> Vector { return *Qs * x + *cs; };
  o.hess_vec = [Qs](const Vector&, const Vector& v) -> Vector { return *Qs * v; };
  o.L1 = std::max(detail::spectral_norm_sym(*Qs), kLipschitzFloor);
  o.L2 = kLipschitzFloor;
  o.exact_lipschitz = true;
  return ProblemInstance{std::move(name), std::move(o), std::move(feasible), std::nullopt, Vector()};
}

/// f = -x1^2 - x2^2 on [0,1]^2: (0,0) is SOSP1 but not SOSP2.
inline ProblemInstance example1() {
  return make_quadratic("example1", -2.0 * Matrix::Identity(2, 2), Vector::Zero(2),
                        Polyhedron::box(Vector::Zero(2), Vector::Ones(2)));
}

namespace detail {

inline ProblemInstance make_nmf(const ProblemParams& p, Rng& rng, bool penalized) {
  const Index n = p.n, m = p.m, k = p.k;
  if (n < 1 || m < 1 || k < 1) throw ParameterError("nmf: shapes must be positive");
  const Matrix W0 = uniform_matrix(n, k, 0.0, 1.0, rng);
  const Matrix H0 = uniform_matrix(m, k, 0.0, 1.0, rng);
  Matrix M = W0 * H0.transpose();
  zero_entries(M, p.zero_fraction, rng);
  auto data = std::make_shared<const Matrix>(std::move(M));
  const double rho = penalized ? p.rho : 0.0;
  const Index rows = n + m;

  ObjectiveOracle o;
  o.dim = rows * k;
  o.value = [data, n, m, k, rows, rho](const Vector& x) {
    Eigen::Map<const Matrix> X(x.data(), rows, k);
    const double fit = (X.topRows(n) * X.bottomRows(m).transpose() - *data).squaredNorm();
    if (rho == 0.0) return fit;
    const auto H = X.bottomRows(m);
    return fit + 0.5 * rho * (H.rowwise().sum().squaredNorm() - H.squaredNorm());
  };
  o.gradient = [data, n, m, k, rows, rho](const Vector& x) -> Vector {
    Eigen::Map<const Matrix> X(x.data(), rows, k);
    const auto W = X.topRows(n);
    const auto H = X.bottomRows(m);
    const Matrix R = W * H.transpose() - *data;
    Vector g(rows * k);
    Eigen::Map<Matrix> G(g.data(), rows, k);
    G.topRows(n) = 2.0 * R * H;
    G.bottomRows(m) = 2.0 * R.transpose() * W;
    if (rho != 0.0)
      G.bottomRows(m) += rho * (H.rowwise().sum() * Eigen::RowVectorXd::Ones(k) - H);
    return g;
  };
  o.hess_vec = [data, n, m, k, rows, rho](const Vector& x, const Vector& v) -> Vector {
    Eigen::Map<const Matrix> X(x.data(), rows, k);
    Eigen::Map<const Matrix> D(v.data(), rows, k);
    const auto W = X.topRows(n);
    const auto H = X.bottomRows(m);
    const auto dW = D.topRows(n);
    const auto dH = D.bottomRows(m);
    const Matrix R = W * H.transpose() - *data;
    const Matrix dR = dW * H.transpose() + W * dH.transpose();
    Vector out(rows * k);
    Eigen::Map<Matrix> O(out.data(), rows, k);
    O.topRows(n) = 2.0 * (dR * H + R * dH);
    O.bottomRows(m) = 2.0 * (dR.transpose() * W + R.transpose() * dW);
    if (rho != 0.0)
      O.bottomRows(m) += rho * (dH.rowwise().sum() * Eigen::RowVectorXd::Ones(k) - dH);
    return out;
  };
  // On ||x|| <= r: second directional derivative <= 2 r^2 + 2 ||R||, ||R|| <= r^2/2 + ||M||;
  // third <= 12 ||A|| ||B|| <= 6 r.
  const double mnorm = data->norm();
  const double pen = rho * static_cast<double>(std::max<Index>(k - 1, 1));
  o.ball_bounds = [mnorm, pen](double r) {
    return LipschitzBounds{3.0 * r * r + 2.0 * mnorm + pen, std::max(6.0 * r, kLipschitzFloor)};
  };
  const Vector planted = [&] {
    Matrix X0(rows, k);
    X0 << W0, H0;
    return Vector(Eigen::Map<const Vector>(X0.data(), X0.size()));
  }();
  const auto b0 = o.ball_bounds(10.0 * planted.norm());
  o.L1 = b0.L1;
  o.L2 = b0.L2;

  ProblemInstance inst{penalized ? "penalized-nmf" : "nmf", std::move(o),
                       Polyhedron::nonneg_orthant(rows * k), std::nullopt, Vector()};
  if (p.zero_fraction == 0.0 && rho == 0.0) inst.known_optimum = KnownOptimum{planted, 0.0};
  return inst;
}

inline ProblemInstance make_sym_nmf(const ProblemParams& p, Rng& rng) {
  const Index n = p.n, k = p.k;
  if (n < 1 || k < 1) throw ParameterError("sym-nmf-simplex: shapes must be positive");
  Matrix H0 = uniform_matrix(n, k, 0.0, 1.0, rng);
  for (Index j = 0; j < k; ++j) H0.col(j) /= H0.col(j).sum();
  auto data = std::make_shared<const Matrix>(H0 * H0.transpose());

  ObjectiveOracle o;
  o.dim = n * k;
  o.value = [data, n, k](const Vector& x) {
    Eigen::Map<const Matrix> H(x.data(), n, k);
    return (H * H.transpose() - *data).squaredNorm();
  };
  o.gradient = [data, n, k](const Vector& x) -> Vector {
    Eigen::Map<const Matrix> H(x.data(), n, k);
    const Matrix R = H * H.transpose() - *data;
    Vector g(n * k);
    Eigen::Map<Matrix>(g.data(), n, k) = 4.0 * R * H;
    return g;
  };
  o.hess_vec = [data, n, k](const Vector& x, const Vector& v) -> Vector {
    Eigen::Map<const Matrix> H(x.data(), n, k);
    Eigen::Map<const Matrix> D(v.data(), n, k);
    const Matrix R = H * H.transpose() - *data;
    const Matrix dR = D * H.transpose() + H * D.transpose();
    Vector out(n * k);
    Eigen::Map<Matrix>(out.data(), n, k) = 4.0 * (dR * H + R * D);
    return out;
  };
  // ||A|| <= 2 r ||d||, ||B|| <= ||d||^2, ||R|| <= r^2 + ||M||.
  const double mnorm = data->norm();
  o.ball_bounds = [mnorm](double r) {
    return LipschitzBounds{12.0 * r * r + 4.0 * mnorm, std::max(24.0 * r, kLipschitzFloor)};
  };
  const Vector planted = Eigen::Map<const Vector>(H0.data(), H0.size());
  const auto b0 = o.ball_bounds(10.0 * planted.norm());
  o.L1 = b0.L1;
  o.L2 = b0.L2;
  ProblemInstance inst{"sym-nmf-simplex", std::move(o), Polyhedron::simplices(k, n), std::nullopt,
                       Vector()};
  inst.known_optimum = KnownOptimum{planted, 0.0};
  return inst;
}

inline ProblemInstance make_two_layer_nn(const ProblemParams& p, Rng& rng) {
  const Index feat = p.m, samples = p.n, out_dim = p.k, hid = p.hidden;
  if (feat < 1 || samples < 1 || out_dim < 1 || hid < 1)
    throw ParameterError("two-layer-nn: shapes must be positive");
  struct Data {
    Matrix X, Y;
  };
  auto data = std::make_shared<Data>();
  data->X = uniform_matrix(feat, samples, 0.0, 1.0, rng);
  const Matrix W0 = uniform_matrix(out_dim, hid, 0.0, 1.0, rng);
  const Matrix H0 = uniform_matrix(feat, hid, 0.0, 1.0, rng);
  data->Y = W0 * (H0.transpose() * data->X).unaryExpr(&detail::sigmoid);
  std::shared_ptr<const Data> cdata = data;
  const Index rows = out_dim + feat;

  ObjectiveOracle o;
  o.dim = rows * hid;
  o.value = [cdata, out_dim, feat, hid, rows](const Vector& x) {
    Eigen::Map<const Matrix> P(x.data(), rows, hid);
    const Matrix S = (P.bottomRows(feat).transpose() * cdata->X).unaryExpr(&detail::sigmoid);
    return (P.topRows(out_dim) * S - cdata->Y).squaredNorm();
  };
  o.gradient = [cdata, out_dim, feat, hid, rows](const Vector& x) -> Vector {
    Eigen::Map<const Matrix> P(x.data(), rows, hid);
    const auto W = P.topRows(out_dim);
    const auto H = P.bottomRows(feat);
    const Matrix S = (H.transpose() * cdata->X).unaryExpr(&detail::sigmoid);
    const Matrix R = W * S - cdata->Y;
    const Matrix G = ((2.0 * W.transpose() * R).array() * S.array() * (1.0 - S.array())).matrix();
    Vector g(rows * hid);
    Eigen::Map<Matrix> Gm(g.data(), rows, hid);
    Gm.topRows(out_dim) = 2.0 * R * S.transpose();
    Gm.bottomRows(feat) = cdata->X * G.transpose();
    return g;
  };
  o.hess_vec = [cdata, out_dim, feat, hid, rows](const Vector& x, const Vector& v) -> Vector {
    Eigen::Map<const Matrix> P(x.data(), rows, hid);
    Eigen::Map<const Matrix> D(v.data(), rows, hid);
    const auto W = P.topRows(out_dim);
    const auto H = P.bottomRows(feat);
    const auto dW = D.topRows(out_dim);
    const auto dH = D.bottomRows(feat);
    const Matrix S = (H.transpose() * cdata->X).unaryExpr(&detail::sigmoid);
    const Matrix dZ = dH.transpose() * cdata->X;
    const auto s1 = (S.array() * (1.0 - S.array())).eval();  // sigma'
    const auto s2 = (s1 * (1.0 - 2.0 * S.array())).eval();   // sigma''
    const Matrix dS = (s1 * dZ.array()).matrix();
    const Matrix R = W * S - cdata->Y;
    const Matrix dR = dW * S + W * dS;
    const Matrix WR = 2.0 * W.transpose() * R;
    const Matrix dG = ((2.0 * dW.transpose() * R + 2.0 * W.transpose() * dR).array() * s1 +
                       WR.array() * s2 * dZ.array())
                          .matrix();
    Vector out(rows * hid);
    Eigen::Map<Matrix> O(out.data(), rows, hid);
    O.topRows(out_dim) = 2.0 * (dR * S.transpose() + R * dS.transpose());
    O.bottomRows(feat) = cdata->X * dG.transpose();
    return out;
  };
  // Conservative bounds from |sigma| <= 1, |sigma'| <= 1/4, |sigma''| <= 1/(6 sqrt 3),
  // |sigma'''| <= 1/8 on the ball ||x|| <= r.
  const double a = cdata->X.norm();
  const double sn = std::sqrt(static_cast<double>(hid * samples));
  const double ynorm = cdata->Y.norm();
  o.ball_bounds = [a, sn, ynorm](double r) {
    const double c2 = 1.0 / (6.0 * std::sqrt(3.0)), c3 = 0.125;
    const double g = std::sqrt(sn * sn + (r * a / 4.0) * (r * a / 4.0));
    const double h2 = a / 2.0 + r * c2 * a * a;
    const double rb = r * sn + ynorm;
    return LipschitzBounds{2.0 * g * g + 2.0 * rb * h2,
                           6.0 * g * h2 + 2.0 * rb * (3.0 * c2 * a * a + r * c3 * a * a * a)};
  };
  Matrix P0(rows, hid);
  P0 << W0, H0;
  const Vector planted = Eigen::Map<const Vector>(P0.data(), P0.size());
  const auto b0 = o.ball_bounds(10.0 * planted.norm());
  o.L1 = b0.L1;
  o.L2 = b0.L2;
  ProblemInstance inst{"two-layer-nn", std::move(o), Polyhedron::nonneg_orthant(rows * hid),
                       std::nullopt, Vector()};
  inst.known_optimum = KnownOptimum{planted, 0.0};
  return inst;
}

inline ProblemInstance make_box_qp(const ProblemParams& p, Rng& rng) {
  const Index d = p.Q ? p.Q->rows() : p.dim;
  if (d < 1) throw ParameterError("box-qp: dimension must be positive");
  const Matrix Q = p.Q ? *p.Q : random_symmetric(d, p.convex, rng);
  const Vector c = p.c ? *p.c : gaussian_vector(d, rng);
  const Vector lo = p.lo ? *p.lo : Vector::Zero(d);
  const Vector hi = p.hi ? *p.hi : Vector::Ones(d);
  if (c.size() != d || lo.size() != d || hi.size() != d)
    throw ParameterError("box-qp: Q, c, lo, hi shapes disagree");
  auto inst = make_quadratic("box-qp", Q, c, Polyhedron::box(lo, hi));
  Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (Q + Q.transpose()));
  if (es.eigenvalues().minCoeff() > 0.0) {
    const Vector xs = es.eigenvectors() *
                      (es.eigenvalues().cwiseInverse().asDiagonal() * (es.eigenvectors().transpose() * -c));
    if ((xs.array() > lo.array()).all() && (xs.array() < hi.array()).all())
      inst.known_optimum = KnownOptimum{xs, inst.value(xs)};
  }
  return inst;
}

inline ProblemInstance make_random_qp(const ProblemParams& p, Rng& rng) {
  const Index d = p.Q ? p.Q->rows() : p.dim;
  const Index r = p.constraints;
  if (d < 1 || r < 0) throw ParameterError("random-qp: bad shape");
  const Matrix Q = p.Q ? *p.Q : random_symmetric(d, p.convex, rng);
  const Vector c = p.c ? *p.c : gaussian_vector(d, rng);
  Matrix A(r + 2 * d, d);
  Vector b(r + 2 * d);
  const Vector x0 = uniform_vector(d, -0.5, 0.5, rng);
  std::uniform_real_distribution<double> slack(0.1, 1.0);
  for (Index j = 0; j < r; ++j) {
    Vector a = gaussian_vector(d, rng);
    a /= a.norm();
    A.row(j) = a.transpose();
    b[j] = a.dot(x0) + slack(rng);
  }
  // Bounding box [-1, 1]^d kept as plain rows so the set stays generic.
  A.bottomRows(2 * d) << -Matrix::Identity(d, d), Matrix::Identity(d, d);
  b.tail(2 * d).setOnes();
  return make_quadratic("random-qp", Q, c, Polyhedron(std::move(A), std::move(b)));
}

}  // namespace detail

/// Builds a problem instance from a kind, shape parameters and a data seed.
inline ProblemInstance make_problem(ProblemKind kind, const ProblemParams& params,
                                    std::uint64_t seed) {
  Rng rng(seed);
  switch (kind) {
    case ProblemKind::nmf: return detail::make_nmf(params, rng, false);
    case ProblemKind::penalized_nmf: return detail::make_nmf(params, rng, true);
    case ProblemKind::sym_nmf_simplex: return detail::make_sym_nmf(params, rng);
    case ProblemKind::two_layer_nn: return detail::make_two_layer_nn(params, rng);
    case ProblemKind::box_qp: return detail::make_box_qp(params, rng);
    case ProblemKind::random_qp: return detail::make_random_qp(params, rng);
  }
  throw ParameterError("unknown problem kind");
}

/// f~(x) = f(x) + q^T x with the given q; the Hessian is unchanged.
inline ProblemInstance perturb_with(const ProblemInstance& problem, const Vector& q) {
  if (q.size() != problem.dim()) throw ParameterError("perturbation has the wrong dimension");
  ProblemInstance out = problem;
  if (q.isZero(0.0)) {
    out.perturbation = Vector::Zero(problem.dim());
    return out;
  }
  auto base_value = problem.oracle.value;
  auto base_grad = problem.oracle.gradient;
  auto qs = std::make_shared<const Vector>(q);
  out.oracle.value = [base_value, qs](const Vector& x) { return base_value(x) + qs->dot(x); };
  out.oracle.gradient = [base_grad, qs](const Vector& x) -> Vector { return base_grad(x) + *qs; };
  out.perturbation = problem.perturbation.size() ? Vector(problem.perturbation + q) : q;
  out.known_optimum.reset();
  out.name = problem.name + "+q";
  return out;
}

/// Random linear perturbation with ||q|| = q_scale, q ~ N(0, I) rescaled.
inline ProblemInstance perturb_linear(const ProblemInstance& problem, double q_scale,
                                      std::uint64_t seed) {
  if (q_scale < 0.0) throw ParameterError("perturb_linear: q_scale must be >= 0");
  if (q_scale == 0.0) return perturb_with(problem, Vector::Zero(problem.dim()));
  Rng rng(seed);
  Vector q = gaussian_vector(problem.dim(), rng);
  q *= q_scale / q.norm();
  return perturb_with(problem, q);
}

/// Feasible starting point pi_X(scale * g) with g ~ N(0, I).
inline Vector initial_point(const ProblemInstance& problem, double scale, std::uint64_t seed) {
  Rng rng(seed);
  const Vector g = gaussian_vector(problem.dim(), rng);
  return project_feasible(problem.feasible, scale * g);
}

struct FdReport {
  double max_grad_rel_err = 0.0;
  std::optional<double> max_hess_rel_err;  ///< empty when hess_vec is absent
  int points = 0;
};

/// Central-difference check of the gradient (per coordinate) and of the
/// Hessian-vector product (along one random unit direction per point).
/// Relative errors use max(1, ||exact||) as denominator.
inline FdReport fd_verify(const ProblemInstance& problem, int n_points, double h,
                          std::uint64_t seed) {
  if (h <= 0.0) throw ParameterError("fd_verify: h must be positive");
  Rng rng(seed);
  const auto& o = problem.oracle;
  const Index d = problem.dim();
  FdReport rep;
  if (o.has_hessian()) rep.max_hess_rel_err = 0.0;
  for (int p = 0; p < n_points; ++p) {
    const Vector x = project_feasible(problem.feasible, gaussian_vector(d, rng));
    const Vector g = o.gradient(x);
    Vector fd(d);
    Vector xp = x, xm = x;
    for (Index i = 0; i < d; ++i) {
      xp[i] = x[i] + h;
      xm[i] = x[i] - h;
      fd[i] = (o.value(xp) - o.value(xm)) / (2.0 * h);
      xp[i] = xm[i] = x[i];
    }
    rep.max_grad_rel_err = std::max(rep.max_grad_rel_err, (g - fd).norm() / std::max(1.0, g.norm()));
    if (o.has_hessian()) {
      Vector v = gaussian_vector(d, rng);
      v /= v.norm();
      const Vector hv = o.hess_vec(x, v);
      const Vector hfd = (o.gradient(x + h * v) - o.gradient(x - h * v)) / (2.0 * h);
      rep.max_hess_rel_err =
          std::max(*rep.max_hess_rel_err, (hv - hfd).norm() / std::max(1.0, hv.norm()));
    }
    ++rep.points;
  }
  return rep;
}

}  // namespace snap
