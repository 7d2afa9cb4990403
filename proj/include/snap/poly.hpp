#pragma once

// Polyhedral feasible sets {x : Ax <= b}: active sets, free-space projectors,
// Euclidean projection and maximum feasible steps along a ray.

#include <algorithm>
#include <fstream>
#include <iomanip>
#include <numeric>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "snap/core.hpp"
#include "snap/nnls.hpp"

namespace snap {

/// Structural tag enabling closed-form projections. Validated on construction.
enum class Structure {
  generic,
  nonneg_orthant,  ///< A = -I, b = 0
  box,             ///< rows 0..d-1: -x_i <= -lo_i, rows d..2d-1: x_i <= hi_i
  simplex,         ///< -x <= 0, then per block (1'x_B <= 1, -1'x_B <= -1)
};

inline const char* to_string(Structure s) {
  switch (s) {
    case Structure::generic: return "generic";
    case Structure::nonneg_orthant: return "nonneg-orthant";
    case Structure::box: return "box";
    case Structure::simplex: return "simplex";
  }
  return "generic";
}

class Polyhedron {
 public:
  Polyhedron(Matrix A, Vector b, Structure structure = Structure::generic,
             Index simplex_block = 0)
      : A_(std::move(A)), b_(std::move(b)), structure_(structure),
        block_(simplex_block) {
    if (A_.cols() < 1) throw ParameterError("polyhedron needs dimension d >= 1");
    if (A_.rows() != b_.size())
      throw ParameterError("polyhedron: A has " + std::to_string(A_.rows()) +
                           " rows but b has " + std::to_string(b_.size()));
    if (!A_.allFinite() || !b_.allFinite())
      throw ParameterError("polyhedron: non-finite entries");
    validate_structure();
    axis_.assign(static_cast<size_t>(A_.rows()), -1);
    for (Index j = 0; j < A_.rows(); ++j) {
      Index nz = 0, where = -1;
      for (Index i = 0; i < A_.cols(); ++i) {
        if (A_(j, i) != 0.0) {
          ++nz;
          where = i;
        }
      }
      if (nz == 1) axis_[static_cast<size_t>(j)] = where;
    }
    row_norms_ = A_.rowwise().norm();
  }

  static Polyhedron unconstrained(Index d) {
    return Polyhedron(Matrix(0, d), Vector(0));
  }

  static Polyhedron nonneg_orthant(Index d) {
    return Polyhedron(-Matrix::Identity(d, d), Vector::Zero(d),
                      Structure::nonneg_orthant);
  }

  static Polyhedron box(const Vector& lo, const Vector& hi) {
    const Index d = lo.size();
    Matrix A(2 * d, d);
    A << -Matrix::Identity(d, d), Matrix::Identity(d, d);
    Vector b(2 * d);
    b << -lo, hi;
    return Polyhedron(std::move(A), std::move(b), Structure::box);
  }

  /// Product of `blocks` probability simplices, each over `block_len` coordinates.
  static Polyhedron simplices(Index blocks, Index block_len) {
    const Index d = blocks * block_len;
    Matrix A = Matrix::Zero(d + 2 * blocks, d);
    Vector b = Vector::Zero(d + 2 * blocks);
    A.topRows(d) = -Matrix::Identity(d, d);
    for (Index k = 0; k < blocks; ++k) {
      A.row(d + 2 * k).segment(k * block_len, block_len).setOnes();
      A.row(d + 2 * k + 1).segment(k * block_len, block_len).setConstant(-1.0);
      b[d + 2 * k] = 1.0;
      b[d + 2 * k + 1] = -1.0;
    }
    return Polyhedron(std::move(A), std::move(b), Structure::simplex, block_len);
  }

  const Matrix& A() const { return A_; }
  const Vector& b() const { return b_; }
  Index rows() const { return A_.rows(); }
  Index dim() const { return A_.cols(); }
  Structure structure() const { return structure_; }
  Index simplex_block() const { return block_; }
  /// Coordinate index of an axis-aligned row, or -1.
  Index axis(Index j) const { return axis_[static_cast<size_t>(j)]; }
  double row_norm(Index j) const { return row_norms_[j]; }

  Vector box_lower() const { return -b_.head(dim()); }
  Vector box_upper() const { return b_.tail(dim()); }

  /// A v, skipping the dense product for tagged layouts.
  Vector apply(const Vector& v) const {
    const Index d = dim();
    switch (structure_) {
      case Structure::nonneg_orthant:
        return -v;
      case Structure::box: {
        Vector out(2 * d);
        out << -v, v;
        return out;
      }
      case Structure::simplex: {
        Vector out(rows());
        out.head(d) = -v;
        for (Index k = 0; k < d / block_; ++k) {
          const double s = v.segment(k * block_, block_).sum();
          out[d + 2 * k] = s;
          out[d + 2 * k + 1] = -s;
        }
        return out;
      }
      case Structure::generic:
        break;
    }
    return A_ * v;
  }

  /// A_j v for a single row.
  double row_dot(Index j, const Vector& v) const {
    const Index ax = axis_[static_cast<size_t>(j)];
    if (ax >= 0) return A_(j, ax) * v[ax];
    return A_.row(j).dot(v);
  }

  /// Largest componentwise excess A_j x - b_j, scaled by (1 + |b_j|).
  double max_violation(const Vector& x, Index* worst = nullptr) const {
    double best = -std::numeric_limits<double>::infinity();
    Index arg = -1;
    if (rows() > 0) {
      const Vector r = apply(x) - b_;
      for (Index j = 0; j < rows(); ++j) {
        const double v = r[j] / (1.0 + std::abs(b_[j]));
        if (v > best) {
          best = v;
          arg = j;
        }
      }
    }
    if (worst) *worst = arg;
    return best;
  }

  bool contains(const Vector& x, double tol = kActiveTol) const {
    return rows() == 0 || max_violation(x) <= tol;
  }

 private:
  void validate_structure() const {
    const Index d = dim();
    auto fail = [&](const std::string& why) {
      throw ParameterError(std::string("polyhedron tagged ") + to_string(structure_) +
                           " does not match (A, b): " + why);
    };
    switch (structure_) {
      case Structure::generic:
        return;
      case Structure::nonneg_orthant:
        if (rows() != d || A_ != -Matrix::Identity(d, d) || !b_.isZero(0.0))
          fail("expected A = -I, b = 0");
        return;
      case Structure::box: {
        if (rows() != 2 * d) fail("expected 2d rows");
        Matrix expect(2 * d, d);
        expect << -Matrix::Identity(d, d), Matrix::Identity(d, d);
        if (A_ != expect) fail("expected A = [-I; I]");
        if ((box_lower().array() > box_upper().array()).any()) fail("lower bound above upper bound");
        return;
      }
      case Structure::simplex: {
        if (block_ < 1 || d % block_ != 0) fail("dimension not a multiple of the block length");
        const Index blocks = d / block_;
        if (rows() != d + 2 * blocks) fail("expected d + 2*blocks rows");
        if (A_.topRows(d) != -Matrix::Identity(d, d) || !b_.head(d).isZero(0.0))
          fail("expected leading -x <= 0 rows");
        for (Index k = 0; k < blocks; ++k) {
          Vector up = Vector::Zero(d), dn = Vector::Zero(d);
          up.segment(k * block_, block_).setOnes();
          dn.segment(k * block_, block_).setConstant(-1.0);
          if (A_.row(d + 2 * k).transpose() != up || A_.row(d + 2 * k + 1).transpose() != dn ||
              b_[d + 2 * k] != 1.0 || b_[d + 2 * k + 1] != -1.0)
            fail("block " + std::to_string(k) + " sum rows malformed");
        }
        return;
      }
    }
  }

  Matrix A_;
  Vector b_;
  Structure structure_;
  Index block_;
  std::vector<Index> axis_;
  Vector row_norms_;
};

/// Recognizes the orthant and box layouts in an untagged (A, b).
inline Polyhedron infer_structure(const Matrix& A, const Vector& b) {
  const Index d = A.cols();
  if (A.rows() == d && A == -Matrix::Identity(d, d) && b.isZero(0.0))
    return Polyhedron(A, b, Structure::nonneg_orthant);
  if (A.rows() == 2 * d) {
    Matrix expect(2 * d, d);
    expect << -Matrix::Identity(d, d), Matrix::Identity(d, d);
    if (A == expect && (-b.head(d).array() <= b.tail(d).array()).all())
      return Polyhedron(A, b, Structure::box);
  }
  return Polyhedron(A, b);
}

// ---------------------------------------------------------------------------
// Plain-text matrix format: header "rows cols", then rows of numbers.
// '#' starts a comment. Polyhedron files use the header "m d" and m rows of A_j, b_j.

namespace detail {

inline std::vector<double> read_numbers(std::istream& in, const std::string& source) {
  std::vector<double> values;
  std::string line;
  while (std::getline(in, line)) {
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::istringstream ls(line);
    std::string tok;
    while (ls >> tok) {
      try {
        size_t used = 0;
        values.push_back(std::stod(tok, &used));
        if (used != tok.size()) throw std::invalid_argument(tok);
      } catch (const std::exception&) {
        throw ParseError(source + ": bad number '" + tok + "'");
      }
    }
  }
  return values;
}

inline std::pair<Index, Index> read_header(const std::vector<double>& values,
                                           const std::string& source) {
  if (values.size() < 2) throw ParseError(source + ": missing two-integer header");
  const double r = values[0], c = values[1];
  if (r < 0 || c < 0 || r != std::floor(r) || c != std::floor(c))
    throw ParseError(source + ": header must hold two nonnegative integers");
  return {static_cast<Index>(r), static_cast<Index>(c)};
}

inline Matrix fill_rows(const std::vector<double>& values, Index rows, Index cols,
                        const std::string& source) {
  if (static_cast<Index>(values.size()) - 2 != rows * cols)
    throw ParseError(source + ": expected " + std::to_string(rows * cols) + " entries, found " +
                     std::to_string(values.size() - 2));
  Matrix m(rows, cols);
  for (Index i = 0; i < rows; ++i)
    for (Index j = 0; j < cols; ++j) m(i, j) = values[static_cast<size_t>(2 + i * cols + j)];
  return m;
}

}  // namespace detail

/// Header "rows cols", then rows of numbers.
inline Matrix parse_matrix_text(std::istream& in, const std::string& source = "<stream>") {
  const auto values = detail::read_numbers(in, source);
  const auto [rows, cols] = detail::read_header(values, source);
  return detail::fill_rows(values, rows, cols, source);
}

inline void write_matrix_text(std::ostream& out, const Matrix& m) {
  out << m.rows() << ' ' << m.cols() << '\n' << std::setprecision(17);
  for (Index i = 0; i < m.rows(); ++i) {
    for (Index j = 0; j < m.cols(); ++j) out << (j ? " " : "") << m(i, j);
    out << '\n';
  }
}

/// Header "m d", then m rows holding A_j followed by b_j.
inline Polyhedron parse_polyhedron(std::istream& in, const std::string& source = "<stream>") {
  const auto values = detail::read_numbers(in, source);
  const auto [m, d] = detail::read_header(values, source);
  if (d < 1) throw ParseError(source + ": polyhedron needs d >= 1");
  const Matrix ab = detail::fill_rows(values, m, d + 1, source);
  return infer_structure(ab.leftCols(d), ab.col(d));
}

inline Polyhedron load_polyhedron(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path);
  return parse_polyhedron(in, path);
}

inline void write_polyhedron(std::ostream& out, const Polyhedron& poly) {
  out << poly.rows() << ' ' << poly.dim() << '\n' << std::setprecision(17);
  for (Index j = 0; j < poly.rows(); ++j) {
    for (Index i = 0; i < poly.dim(); ++i) out << poly.A()(j, i) << ' ';
    out << poly.b()[j] << '\n';
  }
}

// ---------------------------------------------------------------------------

struct ActiveSet {
  std::vector<Index> active;
  std::vector<Index> inactive;
  double tol = kActiveTol;

  Index size() const { return static_cast<Index>(active.size()); }
  bool empty() const { return active.empty(); }
};

/// Partitions [m] into active/inactive constraints at a feasible x.
inline ActiveSet active_set(const Polyhedron& poly, const Vector& x, double tol = kActiveTol) {
  if (x.size() != poly.dim()) throw ContractError("active_set: dimension mismatch");
  ActiveSet out;
  out.tol = tol;
  if (poly.rows() == 0) return out;
  const Vector r = poly.apply(x) - poly.b();
  Index worst = -1;
  double worst_v = 0.0;
  for (Index j = 0; j < poly.rows(); ++j) {
    const double scale = tol * (1.0 + std::abs(poly.b()[j]));
    if (r[j] > scale && r[j] / (1.0 + std::abs(poly.b()[j])) > worst_v) {
      worst_v = r[j] / (1.0 + std::abs(poly.b()[j]));
      worst = j;
    }
    if (std::abs(r[j]) <= scale)
      out.active.push_back(j);
    else
      out.inactive.push_back(j);
  }
  if (worst >= 0) {
    std::ostringstream msg;
    msg << "point violates constraint " << worst << " by " << r[worst];
    throw FeasibilityError(msg.str(), worst, r[worst]);
  }
  return out;
}

/// Orthonormal basis Z of the free space Null(A'(x)) and its projector Z Z^T.
/// Axis-aligned and simplex active sets use exact structured forms; anything
/// else goes through a singular value decomposition of A'(x).
class FreeSpaceBasis {
 public:
  enum class Kind { coordinate, simplex_blocks, dense };

  static FreeSpaceBasis coordinates(std::vector<bool> free_mask, double rank_tol) {
    FreeSpaceBasis fb;
    fb.kind_ = Kind::coordinate;
    fb.d_ = static_cast<Index>(free_mask.size());
    fb.k_ = static_cast<Index>(std::count(free_mask.begin(), free_mask.end(), true));
    fb.mask_ = std::move(free_mask);
    fb.rank_tol_ = rank_tol;
    return fb;
  }

  static FreeSpaceBasis simplex_blocks(std::vector<bool> free_mask, Index block_len,
                                       double rank_tol) {
    FreeSpaceBasis fb;
    fb.kind_ = Kind::simplex_blocks;
    fb.d_ = static_cast<Index>(free_mask.size());
    fb.block_ = block_len;
    fb.mask_ = std::move(free_mask);
    fb.k_ = 0;
    for (Index s = 0; s < fb.d_; s += block_len) {
      Index cnt = 0;
      for (Index i = s; i < s + block_len; ++i) cnt += fb.mask_[static_cast<size_t>(i)];
      fb.k_ += std::max<Index>(cnt - 1, 0);
    }
    fb.rank_tol_ = rank_tol;
    return fb;
  }

  static FreeSpaceBasis dense(Matrix Z, double rank_tol) {
    FreeSpaceBasis fb;
    fb.kind_ = Kind::dense;
    fb.d_ = Z.rows();
    fb.k_ = Z.cols();
    fb.Z_ = std::move(Z);
    fb.rank_tol_ = rank_tol;
    return fb;
  }

  Kind kind() const { return kind_; }
  Index dim() const { return d_; }
  /// k = dim of the free space.
  Index free_dim() const { return k_; }
  double rank_tol() const { return rank_tol_; }

  /// P v with P = Z Z^T.
  Vector project(const Vector& v) const {
    if (v.size() != d_) throw ContractError("project_free: dimension mismatch");
    switch (kind_) {
      case Kind::coordinate: {
        Vector out = v;
        for (Index i = 0; i < d_; ++i)
          if (!mask_[static_cast<size_t>(i)]) out[i] = 0.0;
        return out;
      }
      case Kind::simplex_blocks: {
        Vector out = Vector::Zero(d_);
        for (Index s = 0; s < d_; s += block_) {
          double sum = 0.0;
          Index cnt = 0;
          for (Index i = s; i < s + block_; ++i)
            if (mask_[static_cast<size_t>(i)]) {
              sum += v[i];
              ++cnt;
            }
          if (cnt < 2) continue;
          const double mean = sum / static_cast<double>(cnt);
          for (Index i = s; i < s + block_; ++i)
            if (mask_[static_cast<size_t>(i)]) out[i] = v[i] - mean;
        }
        return out;
      }
      case Kind::dense:
        return Z_ * (Z_.transpose() * v);
    }
    return v;
  }

  /// Materialized d x k basis with orthonormal columns.
  Matrix basis() const {
    switch (kind_) {
      case Kind::coordinate: {
        Matrix Z = Matrix::Zero(d_, k_);
        Index c = 0;
        for (Index i = 0; i < d_; ++i)
          if (mask_[static_cast<size_t>(i)]) Z(i, c++) = 1.0;
        return Z;
      }
      case Kind::simplex_blocks: {
        // Helmert vectors span the zero-sum subspace of each block's free coordinates.
        Matrix Z = Matrix::Zero(d_, k_);
        Index c = 0;
        for (Index s = 0; s < d_; s += block_) {
          std::vector<Index> idx;
          for (Index i = s; i < s + block_; ++i)
            if (mask_[static_cast<size_t>(i)]) idx.push_back(i);
          for (size_t j = 1; j < idx.size(); ++j) {
            const double jj = static_cast<double>(j);
            const double norm = std::sqrt(jj * (jj + 1.0));
            for (size_t t = 0; t < j; ++t) Z(idx[t], c) = 1.0 / norm;
            Z(idx[j], c) = -jj / norm;
            ++c;
          }
        }
        return Z;
      }
      case Kind::dense:
        return Z_;
    }
    return Z_;
  }

  /// Free-coordinate mask (coordinate and simplex kinds only).
  const std::vector<bool>& free_mask() const { return mask_; }

 private:
  FreeSpaceBasis() = default;

  Kind kind_ = Kind::dense;
  Index d_ = 0;
  Index k_ = 0;
  Index block_ = 0;
  std::vector<bool> mask_;
  Matrix Z_;
  double rank_tol_ = kRankTol;
};

/// Null-space basis of the active rows, computed with a rank-revealing SVD when
/// the active rows are not axis aligned.
inline FreeSpaceBasis free_space_basis(const Polyhedron& poly, const ActiveSet& aset,
                                       double rank_tol = kRankTol) {
  const Index d = poly.dim();
  bool axis_only = true;
  for (Index j : aset.active)
    if (poly.axis(j) < 0) axis_only = false;
  if (axis_only) {
    std::vector<bool> mask(static_cast<size_t>(d), true);
    for (Index j : aset.active) mask[static_cast<size_t>(poly.axis(j))] = false;
    return FreeSpaceBasis::coordinates(std::move(mask), rank_tol);
  }

  if (poly.structure() == Structure::simplex) {
    const Index blocks = d / poly.simplex_block();
    std::vector<bool> mask(static_cast<size_t>(d), true);
    std::vector<int> sum_rows(static_cast<size_t>(blocks), 0);
    for (Index j : aset.active) {
      if (j < d)
        mask[static_cast<size_t>(j)] = false;
      else
        ++sum_rows[static_cast<size_t>((j - d) / 2)];
    }
    // Both rows of every equality pair are active at any feasible point.
    if (std::all_of(sum_rows.begin(), sum_rows.end(), [](int c) { return c == 2; }))
      return FreeSpaceBasis::simplex_blocks(std::move(mask), poly.simplex_block(), rank_tol);
  }

  Matrix Aa(aset.size(), d);
  for (Index r = 0; r < aset.size(); ++r) Aa.row(r) = poly.A().row(aset.active[static_cast<size_t>(r)]);
  Eigen::JacobiSVD<Matrix> svd(Aa, Eigen::ComputeFullV);
  const Vector& s = svd.singularValues();
  const double smax = s.size() ? s[0] : 0.0;
  Index rank = 0;
  for (Index i = 0; i < s.size(); ++i)
    if (s[i] > rank_tol * smax && s[i] > 0.0) ++rank;
  return FreeSpaceBasis::dense(svd.matrixV().rightCols(d - rank), rank_tol);
}

inline Vector project_free(const FreeSpaceBasis& basis, const Vector& v) {
  return basis.project(v);
}

// ---------------------------------------------------------------------------

namespace detail {

/// Euclidean projection of v onto the probability simplex.
inline Vector project_simplex(const Vector& v) {
  const Index n = v.size();
  std::vector<double> u(v.data(), v.data() + n);
  std::sort(u.begin(), u.end(), std::greater<>());
  double cumsum = 0.0, theta = 0.0;
  for (Index j = 0; j < n; ++j) {
    cumsum += u[static_cast<size_t>(j)];
    const double t = (cumsum - 1.0) / static_cast<double>(j + 1);
    if (u[static_cast<size_t>(j)] - t > 0.0) theta = t;
  }
  return (v.array() - theta).max(0.0).matrix();
}

/// Closest point of {w : A_S w = b_S} to v, then a KKT check against all rows.
inline std::optional<Vector> polish_projection(const Polyhedron& poly, const Vector& v,
                                               const std::vector<Index>& support, double tol) {
  const Index d = poly.dim();
  Vector w = v;
  if (!support.empty()) {
    Matrix As(static_cast<Index>(support.size()), d);
    Vector bs(static_cast<Index>(support.size()));
    for (size_t r = 0; r < support.size(); ++r) {
      As.row(static_cast<Index>(r)) = poly.A().row(support[r]);
      bs[static_cast<Index>(r)] = poly.b()[support[r]];
    }
    w = v - As.completeOrthogonalDecomposition().solve(As * v - bs);
    const Vector mu = nnls(As.transpose(), v - w);
    const double resid = (As.transpose() * mu - (v - w)).norm();
    if (resid > std::sqrt(tol) * (1.0 + (v - w).norm())) return std::nullopt;
  }
  if (poly.rows() > 0 && poly.max_violation(w) > tol) return std::nullopt;
  return w;
}

/// Dual active-set method (Goldfarb-Idnani with identity Hessian) for
/// min 1/2 ||w - v||^2 s.t. Aw <= b. Finite; working rows stay linearly independent.
inline Vector project_active_set(const Polyhedron& poly, const Vector& v, double tol) {
  const Index m = poly.rows(), d = poly.dim();
  const Matrix& A = poly.A();
  const Vector& b = poly.b();
  Vector w = v;
  std::vector<Index> S;
  std::vector<double> u;
  auto normals = [&] {
    Matrix N(d, static_cast<Index>(S.size()));
    for (size_t r = 0; r < S.size(); ++r) N.col(static_cast<Index>(r)) = A.row(S[r]).transpose();
    return N;
  };
  auto working = [&](Index j) { return std::find(S.begin(), S.end(), j) != S.end(); };

  const long cap = 20 * (m + d) + 100;
  long steps = 0;
  for (;;) {
    Index p = -1;
    double worst = tol;
    for (Index j = 0; j < m; ++j) {
      const double n = poly.row_norm(j);
      if (n == 0.0 || working(j)) continue;
      const double s = (A.row(j).dot(w) - b[j]) / n;
      if (s > worst) {
        worst = s;
        p = j;
      }
    }
    if (p < 0) break;

    const Vector ap = A.row(p).transpose();
    double up = 0.0;
    // Raise u_p until row p is tight; rows whose multiplier hits zero first leave the working set.
    for (;;) {
      if (++steps > cap) throw ProjectionError("projection: active-set iteration limit reached");
      Vector z = ap, r;
      if (!S.empty()) {
        const Matrix N = normals();
        r = N.colPivHouseholderQr().solve(ap);
        z = ap - N * r;
      }
      const bool primal = z.norm() > 1e-12 * ap.norm();
      const double t1 = primal ? std::max(0.0, (ap.dot(w) - b[p]) / z.squaredNorm())
                               : std::numeric_limits<double>::infinity();
      double t2 = std::numeric_limits<double>::infinity();
      size_t k = 0;
      for (size_t i = 0; i < S.size(); ++i)
        if (r[static_cast<Index>(i)] > 1e-14) {
          const double t = u[i] / r[static_cast<Index>(i)];
          if (t < t2) {
            t2 = t;
            k = i;
          }
        }
      const double t = std::min(t1, t2);
      if (!std::isfinite(t)) throw ProjectionError("projection: the set is empty");
      if (primal) w -= t * z;
      for (size_t i = 0; i < S.size(); ++i) u[i] -= t * r[static_cast<Index>(i)];
      up += t;
      if (t1 <= t2) {
        S.push_back(p);
        u.push_back(up);
        break;
      }
      S.erase(S.begin() + static_cast<std::ptrdiff_t>(k));
      u.erase(u.begin() + static_cast<std::ptrdiff_t>(k));
    }
  }

  // Exact re-solve on the final working set removes accumulated drift.
  if (!S.empty()) {
    const Matrix N = normals();
    Vector bs(static_cast<Index>(S.size()));
    for (size_t r = 0; r < S.size(); ++r) bs[static_cast<Index>(r)] = b[S[r]];
    const Vector lam = (N.transpose() * N).ldlt().solve(N.transpose() * v - bs);
    const Vector exact = v - N * lam;
    if (poly.max_violation(exact) <= std::max(tol, poly.max_violation(w))) w = exact;
  }
  return w;
}

/// Hildreth dual coordinate ascent on min 1/2 ||w - v||^2 s.t. Aw <= b,
/// finished by an exact solve on the identified support. Falls back to the
/// active-set method when the sweep cap is reached.
inline Vector project_generic(const Polyhedron& poly, const Vector& v, double tol) {
  const Index m = poly.rows(), d = poly.dim();
  if (m == 0) return v;
  const Matrix& A = poly.A();
  const Vector& b = poly.b();
  for (Index j = 0; j < m; ++j)
    if (poly.row_norm(j) == 0.0 && b[j] < 0.0)
      throw ProjectionError("projection: constraint " + std::to_string(j) + " reads 0 <= " +
                            std::to_string(b[j]) + ", set is empty");

  if (poly.max_violation(v) <= 0.0) return v;

  const double digits = std::max(1.0, std::ceil(-std::log10(tol)));
  const long cap = static_cast<long>(10.0 * static_cast<double>(m) * static_cast<double>(d) * digits);
  Vector lambda = Vector::Zero(m);
  Vector w = v;
  bool converged = false;
  auto support_of = [&] {
    std::vector<Index> s;
    for (Index j = 0; j < m; ++j)
      if (lambda[j] > 0.0) s.push_back(j);
    return s;
  };
  std::vector<Index> last_support;
  for (long sweep = 0; sweep < cap; ++sweep) {
    double max_change = 0.0;
    for (Index j = 0; j < m; ++j) {
      const double nn = poly.row_norm(j) * poly.row_norm(j);
      if (nn == 0.0) continue;
      const double step = (A.row(j).dot(w) - b[j]) / nn;
      const double next = std::max(0.0, lambda[j] + step);
      const double delta = next - lambda[j];
      if (delta != 0.0) {
        w.noalias() -= delta * A.row(j).transpose();
        lambda[j] = next;
        max_change = std::max(max_change, std::abs(delta) * poly.row_norm(j));
      }
    }
    if (max_change <= tol && poly.max_violation(w) <= tol) {
      converged = true;
      break;
    }
    // Try an exact finish whenever the support settles.
    if (sweep % 25 == 24) {
      auto s = support_of();
      if (s == last_support) {
        if (auto p = polish_projection(poly, v, s, tol)) return *p;
      }
      last_support = std::move(s);
    }
  }
  if (auto p = polish_projection(poly, v, support_of(), tol)) return *p;
  if (converged) return w;
  return project_active_set(poly, v, tol);
}

}  // namespace detail

/// Euclidean projection onto {x : Ax <= b}.
inline Vector project_feasible(const Polyhedron& poly, const Vector& v, double tol = kProjectionTol) {
  if (v.size() != poly.dim()) throw ContractError("project_feasible: dimension mismatch");
  switch (poly.structure()) {
    case Structure::nonneg_orthant:
      return v.cwiseMax(0.0);
    case Structure::box:
      return v.cwiseMax(poly.box_lower()).cwiseMin(poly.box_upper());
    case Structure::simplex: {
      Vector out(v.size());
      const Index n = poly.simplex_block();
      for (Index s = 0; s < v.size(); s += n) out.segment(s, n) = detail::project_simplex(v.segment(s, n));
      return out;
    }
    case Structure::generic:
      return detail::project_generic(poly, v, tol);
  }
  return v;
}

// ---------------------------------------------------------------------------

struct MaxStep {
  double alpha_max = 0.0;
  std::optional<Index> hit;  ///< inactive constraint that becomes active
  bool bounded = false;      ///< false: ray stays feasible, alpha_max = 1/L1
};

/// Largest feasible step from x along a free-space direction. Falls back to
/// 1/L1 when no inactive constraint blocks the ray.
inline MaxStep max_step(const Polyhedron& poly, const ActiveSet& aset, const Vector& x,
                        const Vector& dir, double L1, double tol = 1e-8) {
  if (x.size() != poly.dim() || dir.size() != poly.dim())
    throw ContractError("max_step: dimension mismatch");
  const double dnorm = dir.norm();
  for (Index j : aset.active) {
    const double drift = std::abs(poly.row_dot(j, dir));
    if (drift > tol * poly.row_norm(j) * std::max(1.0, dnorm))
      throw ContractError("max_step: direction leaves the free space (|A_" + std::to_string(j) +
                          " d| = " + std::to_string(drift) + ")");
  }
  MaxStep out;
  double best = std::numeric_limits<double>::infinity();
  const Vector rates = poly.apply(dir);
  const Vector slack = poly.b() - poly.apply(x);
  for (Index i : aset.inactive) {
    const double rate = rates[i];
    if (rate <= 0.0) continue;
    const double ratio = slack[i] / rate;
    if (ratio > 0.0 && ratio < best) {
      best = ratio;
      out.hit = i;
    }
  }
  if (out.hit) {
    out.alpha_max = best;
    out.bounded = true;
  } else {
    out.alpha_max = 1.0 / L1;
  }
  return out;
}

}  // namespace snap
