#pragma once

// Dense complex kernels shared by the AB-iteration family: LU solves with a
// breakdown-aware pivot check, SVD-based near-null spaces, projector
// distances between subspaces and a few small matrix utilities.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <initializer_list>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/SVD>

#include "abflow/errors.hpp"

namespace abflow {

using Complex = std::complex<double>;
using ComplexMatrix = Eigen::MatrixXcd;
using RealVector = Eigen::VectorXd;
using Index = Eigen::Index;

inline constexpr double kEps = std::numeric_limits<double>::epsilon();

/// Default relative cutoff for near-null singular directions.
inline constexpr double kDefaultRankTol = 1e-8;

// ---------------------------------------------------------------------------
// Construction helpers
// ---------------------------------------------------------------------------

inline bool all_finite(const ComplexMatrix& m) {
  for (Index j = 0; j < m.cols(); ++j) {
    for (Index i = 0; i < m.rows(); ++i) {
      const Complex z = m(i, j);
      if (!std::isfinite(z.real()) || !std::isfinite(z.imag())) return false;
    }
  }
  return true;
}

inline void require_finite(const ComplexMatrix& m, const char* what) {
  if (!all_finite(m)) {
    throw InvalidArgument(std::string(what) + ": matrix has non-finite entries");
  }
}

/// Builds a matrix from row-major complex entries.
inline ComplexMatrix make_matrix(Index rows, Index cols,
                                 std::span<const Complex> entries) {
  if (rows < 0 || cols < 0 ||
      static_cast<std::size_t>(rows * cols) != entries.size()) {
    throw ShapeError("make_matrix: entry count does not match rows*cols");
  }
  ComplexMatrix m(rows, cols);
  for (Index i = 0; i < rows; ++i) {
    for (Index j = 0; j < cols; ++j) m(i, j) = entries[i * cols + j];
  }
  require_finite(m, "make_matrix");
  return m;
}

/// Builds a matrix from nested real rows, e.g. from_real({{1, 2}, {3, 4}}).
inline ComplexMatrix from_real(
    std::initializer_list<std::initializer_list<double>> rows) {
  const Index r = static_cast<Index>(rows.size());
  const Index c = r == 0 ? 0 : static_cast<Index>(rows.begin()->size());
  ComplexMatrix m(r, c);
  Index i = 0;
  for (const auto& row : rows) {
    if (static_cast<Index>(row.size()) != c) {
      throw ShapeError("from_real: ragged rows");
    }
    Index j = 0;
    for (double v : row) m(i, j++) = Complex(v, 0.0);
    ++i;
  }
  require_finite(m, "from_real");
  return m;
}

inline ComplexMatrix identity(Index n) { return ComplexMatrix::Identity(n, n); }

inline ComplexMatrix diagonal(std::span<const Complex> d) {
  ComplexMatrix m = ComplexMatrix::Zero(static_cast<Index>(d.size()),
                                        static_cast<Index>(d.size()));
  for (std::size_t i = 0; i < d.size(); ++i) {
    m(static_cast<Index>(i), static_cast<Index>(i)) = d[i];
  }
  return m;
}

inline ComplexMatrix diagonal(std::initializer_list<Complex> d) {
  return diagonal(std::span<const Complex>(d.begin(), d.size()));
}

inline double max_abs_entry(const ComplexMatrix& m) {
  double best = 0.0;
  for (Index j = 0; j < m.cols(); ++j) {
    for (Index i = 0; i < m.rows(); ++i) best = std::max(best, std::abs(m(i, j)));
  }
  return best;
}

inline double frobenius(const ComplexMatrix& m) { return m.norm(); }

/// ‖x − y‖_F / ‖y‖_F, falling back to the absolute difference when y = 0.
inline double relative_error(const ComplexMatrix& x, const ComplexMatrix& y) {
  const double denom = y.norm();
  const double diff = (x - y).norm();
  return denom > 0.0 ? diff / denom : diff;
}

// ---------------------------------------------------------------------------
// LU with partial pivoting
// ---------------------------------------------------------------------------

/// Relative pivot threshold used by lu_solve: n·ε.
inline double default_pivot_tol(Index n) {
  return static_cast<double>(std::max<Index>(n, 1)) * kEps;
}

struct LUFactorization {
  ComplexMatrix lu;         ///< unit-lower L below the diagonal, U on and above
  std::vector<int> perm;    ///< row i of P·A is row perm[i] of A
  double growth = 1.0;      ///< max|U| / max|A|
  double min_pivot = 0.0;   ///< smallest |u_ii|
  double max_entry = 0.0;   ///< max|a_ij| of the factored matrix

  Index size() const { return lu.rows(); }

  /// Solves A·X = rhs.
  ComplexMatrix solve(const ComplexMatrix& rhs) const {
    const Index n = size();
    if (rhs.rows() != n) {
      throw DimensionMismatch("lu solve: right-hand side has wrong row count");
    }
    ComplexMatrix x(n, rhs.cols());
    for (Index i = 0; i < n; ++i) x.row(i) = rhs.row(perm[i]);
    lu.triangularView<Eigen::UnitLower>().solveInPlace(x);
    lu.triangularView<Eigen::Upper>().solveInPlace(x);
    return x;
  }

  /// Solves X·A = rhs, i.e. returns rhs·A⁻¹.
  ComplexMatrix solve_right(const ComplexMatrix& rhs) const {
    const Index n = size();
    if (rhs.cols() != n) {
      throw DimensionMismatch("lu solve_right: right-hand side has wrong column count");
    }
    // X·P⁻¹·L·U = rhs  →  Y·U = rhs, Z·L = Y, X = Z·P.
    ComplexMatrix y = rhs;
    lu.triangularView<Eigen::Upper>().solveInPlace<Eigen::OnTheRight>(y);
    lu.triangularView<Eigen::UnitLower>().solveInPlace<Eigen::OnTheRight>(y);
    ComplexMatrix x(rhs.rows(), n);
    for (Index i = 0; i < n; ++i) x.col(perm[i]) = y.col(i);
    return x;
  }
};

/// Gaussian elimination with partial pivoting.
///
/// Throws SingularMatrix when some |u_ii| < pivot_tol · max|a_ij|; pass a
/// negative pivot_tol to use default_pivot_tol(n).
inline LUFactorization lu_factor(const ComplexMatrix& a, double pivot_tol = -1.0) {
  if (a.rows() != a.cols()) {
    throw DimensionMismatch("lu_factor: matrix is not square");
  }
  const Index n = a.rows();
  if (pivot_tol < 0.0) pivot_tol = default_pivot_tol(n);

  LUFactorization f;
  f.lu = a;
  f.perm.resize(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) f.perm[i] = static_cast<int>(i);
  f.max_entry = max_abs_entry(a);
  const double threshold = pivot_tol * f.max_entry;
  f.min_pivot = std::numeric_limits<double>::infinity();

  auto& m = f.lu;
  for (Index k = 0; k < n; ++k) {
    Index p = k;
    double best = std::abs(m(k, k));
    for (Index i = k + 1; i < n; ++i) {
      const double v = std::abs(m(i, k));
      if (v > best) {
        best = v;
        p = i;
      }
    }
    f.min_pivot = std::min(f.min_pivot, best);
    if (!(best > threshold) || best == 0.0) {
      throw SingularMatrix("lu_factor: pivot " + std::to_string(k) +
                               " below singularity threshold",
                           static_cast<int>(k));
    }
    if (p != k) {
      m.row(k).swap(m.row(p));
      std::swap(f.perm[k], f.perm[p]);
    }
    const Complex pivot = m(k, k);
    if (k + 1 < n) {
      m.col(k).tail(n - k - 1) /= pivot;
      m.bottomRightCorner(n - k - 1, n - k - 1).noalias() -=
          m.col(k).tail(n - k - 1) * m.row(k).tail(n - k - 1);
    }
  }
  if (n == 0) f.min_pivot = 0.0;
  const double umax = max_abs_entry(ComplexMatrix(m.triangularView<Eigen::Upper>()));
  f.growth = f.max_entry > 0.0 ? umax / f.max_entry : 1.0;
  return f;
}

/// Returns X with A·X = rhs.
inline ComplexMatrix lu_solve(const ComplexMatrix& a, const ComplexMatrix& rhs) {
  if (a.rows() != rhs.rows()) {
    throw DimensionMismatch("lu_solve: right-hand side has wrong row count");
  }
  return lu_factor(a).solve(rhs);
}

/// Returns X with X·A = rhs.
inline ComplexMatrix right_solve(const ComplexMatrix& a, const ComplexMatrix& rhs) {
  if (a.cols() != rhs.cols()) {
    throw DimensionMismatch("right_solve: right-hand side has wrong column count");
  }
  return lu_factor(a).solve_right(rhs);
}

// ---------------------------------------------------------------------------
// Singular values and subspaces
// ---------------------------------------------------------------------------

/// Singular values in decreasing order (one-sided Jacobi, deterministic).
inline RealVector singular_values(const ComplexMatrix& a) {
  if (a.size() == 0) return RealVector();
  Eigen::JacobiSVD<ComplexMatrix> svd(a);
  return svd.singularValues();
}

/// Largest singular value; 0 for an empty matrix.
inline double induced_norm2(const ComplexMatrix& a) {
  const RealVector s = singular_values(a);
  return s.size() == 0 ? 0.0 : s(0);
}

/// n×m matrix with orthonormal columns plus the singular values that decided
/// its dimension.
class SubspaceBasis {
 public:
  SubspaceBasis() = default;

  /// Takes a basis that is already orthonormal; checks ‖VᴴV − I‖_F ≤ 1e-12.
  explicit SubspaceBasis(ComplexMatrix basis, RealVector singular_values = {})
      : basis_(std::move(basis)), sigma_(std::move(singular_values)) {
    if (basis_.cols() > basis_.rows()) {
      throw DimensionMismatch("SubspaceBasis: more columns than rows");
    }
    const double err =
        (basis_.adjoint() * basis_ - ComplexMatrix::Identity(basis_.cols(), basis_.cols()))
            .norm();
    if (err > 1e-12) {
      throw InvalidArgument("SubspaceBasis: columns are not orthonormal");
    }
  }

  /// Orthonormal basis for the column span of `columns` (full column rank
  /// within `rank_tol` relative to the largest singular value).
  static SubspaceBasis span_of(const ComplexMatrix& columns,
                               double rank_tol = kDefaultRankTol) {
    const Index n = columns.rows();
    if (columns.cols() == 0) return SubspaceBasis(ComplexMatrix(n, 0));
    Eigen::JacobiSVD<ComplexMatrix> svd(columns, Eigen::ComputeThinU);
    const RealVector& s = svd.singularValues();
    Index rank = 0;
    while (rank < s.size() && s(rank) > rank_tol * s(0)) ++rank;
    return SubspaceBasis(svd.matrixU().leftCols(rank), s);
  }

  static SubspaceBasis whole_space(Index n) {
    return SubspaceBasis(ComplexMatrix::Identity(n, n));
  }

  const ComplexMatrix& basis() const { return basis_; }
  const RealVector& singular_values() const { return sigma_; }
  Index ambient_dim() const { return basis_.rows(); }
  Index dim() const { return basis_.cols(); }

  ComplexMatrix projector() const { return basis_ * basis_.adjoint(); }

 private:
  ComplexMatrix basis_;
  RealVector sigma_;
};

namespace detail {

struct RightSvd {
  RealVector sigma;   // length n, padded with zeros when rows < cols
  ComplexMatrix v;    // n×n
};

inline RightSvd right_svd(const ComplexMatrix& a) {
  const Index n = a.cols();
  RightSvd out;
  out.sigma = RealVector::Zero(n);
  if (n == 0) return out;
  if (a.rows() == 0) {
    out.v = ComplexMatrix::Identity(n, n);
    return out;
  }
  Eigen::JacobiSVD<ComplexMatrix> svd(a, Eigen::ComputeFullV);
  const RealVector& s = svd.singularValues();
  out.sigma.head(s.size()) = s;
  out.v = svd.matrixV();
  return out;
}

}  // namespace detail

/// Right near-null space: singular directions with σ_i < rank_tol·σ_max.
/// The zero matrix has the whole space as its null space.
inline SubspaceBasis null_space_basis(const ComplexMatrix& a,
                                      double rank_tol = kDefaultRankTol) {
  if (!(rank_tol > 0.0)) throw InvalidArgument("null_space_basis: rank_tol must be > 0");
  const Index n = a.cols();
  auto svd = detail::right_svd(a);
  if (n == 0) return SubspaceBasis(ComplexMatrix(0, 0), svd.sigma);
  const double smax = svd.sigma(0);
  if (smax == 0.0) return SubspaceBasis(ComplexMatrix::Identity(n, n), svd.sigma);
  Index first = n;
  while (first > 0 && svd.sigma(first - 1) < rank_tol * smax) --first;
  return SubspaceBasis(svd.v.rightCols(n - first), svd.sigma);
}

/// The m right singular directions with the smallest singular values.
inline SubspaceBasis smallest_singular_subspace(const ComplexMatrix& a, Index m) {
  const Index n = a.cols();
  if (m < 0 || m > n) {
    throw InvalidArgument("smallest_singular_subspace: dimension out of range");
  }
  auto svd = detail::right_svd(a);
  if (n == 0) return SubspaceBasis(ComplexMatrix(0, 0), svd.sigma);
  return SubspaceBasis(svd.v.rightCols(m), svd.sigma);
}

/// ‖P_U − P_V‖₂. Equals the sine of the largest principal angle when the
/// dimensions agree, and 1 by convention when they differ.
inline double subspace_distance(const SubspaceBasis& u, const SubspaceBasis& v) {
  if (u.ambient_dim() != v.ambient_dim()) {
    throw DimensionMismatch("subspace_distance: ambient dimensions differ");
  }
  if (u.dim() != v.dim()) return 1.0;
  if (u.dim() == 0) return 0.0;
  const double d = induced_norm2(u.projector() - v.projector());
  return std::min(d, 1.0);
}

// ---------------------------------------------------------------------------
// Small matrix utilities
// ---------------------------------------------------------------------------

/// I + A + ... + A^(k−1), by Horner accumulation.
inline ComplexMatrix matrix_power_sum(const ComplexMatrix& a, int k) {
  if (a.rows() != a.cols()) throw DimensionMismatch("matrix_power_sum: not square");
  if (k < 1) throw InvalidArgument("matrix_power_sum: k must be >= 1");
  const Index n = a.rows();
  ComplexMatrix sum = ComplexMatrix::Identity(n, n);
  for (int j = 1; j < k; ++j) {
    ComplexMatrix next = a * sum;
    next.diagonal().array() += Complex(1.0, 0.0);
    sum = std::move(next);
  }
  return sum;
}

inline ComplexMatrix matrix_power(const ComplexMatrix& a, int k) {
  if (a.rows() != a.cols()) throw DimensionMismatch("matrix_power: not square");
  if (k < 0) throw InvalidArgument("matrix_power: negative exponent");
  ComplexMatrix result = ComplexMatrix::Identity(a.rows(), a.rows());
  ComplexMatrix base = a;
  while (k > 0) {
    if (k & 1) result = result * base;
    k >>= 1;
    if (k > 0) base = base * base;
  }
  return result;
}

/// Eigenvalues of a square matrix (diagnostics only).
inline Eigen::VectorXcd eigenvalues(const ComplexMatrix& a) {
  if (a.rows() != a.cols()) throw DimensionMismatch("eigenvalues: not square");
  if (a.size() == 0) return Eigen::VectorXcd();
  Eigen::ComplexEigenSolver<ComplexMatrix> es(a, false);
  return es.eigenvalues();
}

inline double spectral_radius(const ComplexMatrix& a) {
  const Eigen::VectorXcd ev = eigenvalues(a);
  double r = 0.0;
  for (Index i = 0; i < ev.size(); ++i) r = std::max(r, std::abs(ev(i)));
  return r;
}

}  // namespace abflow
