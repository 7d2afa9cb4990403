#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace snap {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using Index = Eigen::Index;

/// Seeded generator used for every random draw in the library.
using Rng = std::mt19937_64;

/// Relative activity threshold |A_j x - b_j| <= tol (1 + |b_j|).
inline constexpr double kActiveTol = 1e-9;
/// Singular values below kRankTol * sigma_max count as zero.
inline constexpr double kRankTol = 1e-10;
/// Default convergence tolerance of the generic polyhedral projection.
inline constexpr double kProjectionTol = 1e-10;

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A point violates Ax <= b beyond the activity tolerance.
class FeasibilityError : public Error {
 public:
  FeasibilityError(const std::string& what, Index constraint, double violation)
      : Error(what), constraint_(constraint), violation_(violation) {}
  Index constraint() const { return constraint_; }
  double violation() const { return violation_; }

 private:
  Index constraint_;
  double violation_;
};

/// The iterative projection did not converge (empty or ill-posed set).
class ProjectionError : public Error {
  using Error::Error;
};

/// A caller broke an operation's precondition.
class ContractError : public Error {
  using Error::Error;
};

/// A requested computation needs an oracle capability the problem lacks.
class CapabilityError : public Error {
  using Error::Error;
};

class ParameterError : public Error {
  using Error::Error;
};

/// Backtracking hit its step floor without sufficient descent.
class LineSearchError : public Error {
  using Error::Error;
};

class ParseError : public Error {
  using Error::Error;
};

inline Vector gaussian_vector(Index n, Rng& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Vector v(n);
  for (Index i = 0; i < n; ++i) v[i] = normal(rng);
  return v;
}

inline Vector uniform_vector(Index n, double lo, double hi, Rng& rng) {
  std::uniform_real_distribution<double> unif(lo, hi);
  Vector v(n);
  for (Index i = 0; i < n; ++i) v[i] = unif(rng);
  return v;
}

inline Matrix uniform_matrix(Index rows, Index cols, double lo, double hi,
                             Rng& rng) {
  std::uniform_real_distribution<double> unif(lo, hi);
  Matrix m(rows, cols);
  // Column-major fill keeps draws aligned with vec() ordering.
  for (Index j = 0; j < cols; ++j)
    for (Index i = 0; i < rows; ++i) m(i, j) = unif(rng);
  return m;
}

/// Derives an independent stream seed from a base seed and a salt.
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t salt) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (salt + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace snap
