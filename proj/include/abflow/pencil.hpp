#pragma once

// The AB-iteration on a regular pencil A − λB.
//
// Starting from (A_1, B_1) the chain is
//
//   A_k = A_1 (A_1 + B_{k-1})⁻¹ A_{k-1}
//   B_k = B_{k-1} (A_1 + B_{k-1})⁻¹ B_1
//
// and it satisfies the flow identity A_{i+j} = A_i (A_i + B_j)⁻¹ A_j,
// B_{i+j} = B_j (A_i + B_j)⁻¹ B_i. If A_1 U = B_1 U Λ with ρ(Λ) < 1 then
// A_k U → 0, so the stable deflating subspace is read off as the right
// near-null space of A_k once successive null spaces stop moving.

#include <complex>
#include <functional>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "abflow/core.hpp"

namespace abflow {

/// Relative pivot cutoff used to declare breakdown of an AB-type update.
///
/// Sums that are singular in exact arithmetic come out of floating point with
/// pivots of a few n·ε relative to their largest entry, so the plain n·ε
/// cutoff of lu_solve misses them; 1e3·n·ε leaves two orders of margin.
inline double default_breakdown_tol(Index n) { return 1e3 * default_pivot_tol(n); }

struct Pencil {
  ComplexMatrix a;
  ComplexMatrix b;

  Pencil(ComplexMatrix a_in, ComplexMatrix b_in) : a(std::move(a_in)), b(std::move(b_in)) {
    if (a.rows() != a.cols() || b.rows() != b.cols() || a.rows() != b.rows()) {
      throw DimensionMismatch("Pencil: A and B must be square of the same size");
    }
    require_finite(a, "Pencil A");
    require_finite(b, "Pencil B");
  }

  /// A − λI.
  static Pencil standard(ComplexMatrix a_in) {
    const Index n = a_in.rows();
    return Pencil(std::move(a_in), ComplexMatrix::Identity(n, n));
  }

  Index size() const { return a.rows(); }
};

/// The k-th element (A_k, B_k) of the flow generated by an initial pencil.
struct ABIterate {
  ComplexMatrix a;
  ComplexMatrix b;
  long k = 1;

  static ABIterate first(const Pencil& p) { return ABIterate{p.a, p.b, 1}; }
};

/// Which of the equivalent update formulas ab_step uses.
///
/// kShortcut forms A_k from (A_1 + B_{k-1})⁻¹ and sets B_k = A_k + B_1 − A_1.
/// kForm1..kForm4 are the four direct forms; they differ in whether
/// (A_1 + B_{k-1})⁻¹ or (B_1 + A_{k-1})⁻¹ is used for A_k and for B_k:
///
///   form   A_k update       B_k update
///   1      A_1 + B_{k-1}    A_1 + B_{k-1}
///   2      B_1 + A_{k-1}    A_1 + B_{k-1}
///   3      A_1 + B_{k-1}    B_1 + A_{k-1}
///   4      B_1 + A_{k-1}    B_1 + A_{k-1}
enum class StepForm { kShortcut, kForm1, kForm2, kForm3, kForm4 };

inline constexpr StepForm kDirectForm = StepForm::kForm1;

namespace detail {

inline void check_same_shape(const ComplexMatrix& x, const ComplexMatrix& y,
                             const char* what) {
  if (x.rows() != y.rows() || x.cols() != y.cols()) throw DimensionMismatch(what);
}

// Flow indices grow like r^k under acceleration; clamp instead of wrapping.
inline long saturating_add(long x, long y) {
  long out = 0;
  if (__builtin_add_overflow(x, y, &out)) return std::numeric_limits<long>::max();
  return out;
}

inline LUFactorization factor_or_breakdown(const ComplexMatrix& sum, double tol,
                                           long index, long sum_index,
                                           const char* what) {
  try {
    return lu_factor(sum, tol < 0.0 ? default_breakdown_tol(sum.rows()) : tol);
  } catch (const SingularMatrix&) {
    throw Breakdown(std::string(what) + ": singular sum while forming iterate " +
                        std::to_string(index),
                    index, sum_index);
  }
}

}  // namespace detail

/// One step of the chain: (A_{k-1}, B_{k-1}) → (A_k, B_k).
///
/// Throws Breakdown (index k, sum_index k−1) when the sum to be inverted is
/// numerically singular; pass breakdown_tol < 0 for default_breakdown_tol.
inline ABIterate ab_step(const Pencil& initial, const ABIterate& prev,
                         StepForm form = StepForm::kShortcut,
                         double breakdown_tol = -1.0) {
  if (prev.k < 1) throw InvalidArgument("ab_step: iterate index must be >= 1");
  detail::check_same_shape(initial.a, prev.a, "ab_step: A_k shape mismatch");
  detail::check_same_shape(initial.b, prev.b, "ab_step: B_k shape mismatch");

  const long k = prev.k + 1;
  const ComplexMatrix& a1 = initial.a;
  const ComplexMatrix& b1 = initial.b;

  const bool a_uses_b1 = form == StepForm::kForm2 || form == StepForm::kForm4;
  const bool b_uses_b1 = form == StepForm::kForm3 || form == StepForm::kForm4;

  std::optional<LUFactorization> f_a1;
  std::optional<LUFactorization> f_b1;
  auto sum_a1 = [&]() -> const LUFactorization& {
    if (!f_a1) {
      f_a1 = detail::factor_or_breakdown(a1 + prev.b, breakdown_tol, k, prev.k, "ab_step");
    }
    return *f_a1;
  };
  auto sum_b1 = [&]() -> const LUFactorization& {
    if (!f_b1) {
      f_b1 = detail::factor_or_breakdown(b1 + prev.a, breakdown_tol, k, prev.k, "ab_step");
    }
    return *f_b1;
  };

  ABIterate next;
  next.k = k;
  next.a = a1 * (a_uses_b1 ? sum_b1() : sum_a1()).solve(prev.a);
  if (form == StepForm::kShortcut) {
    next.b = next.a + b1 - a1;
  } else {
    next.b = prev.b * (b_uses_b1 ? sum_b1() : sum_a1()).solve(b1);
  }
  return next;
}

/// Flow composition: the iterate with index i + j from iterates i and j.
///
/// Throws Breakdown (index i+j, sum_index j) if A_i + B_j is singular.
inline ABIterate combine(const ABIterate& it_i, const ABIterate& it_j,
                         double breakdown_tol = -1.0) {
  detail::check_same_shape(it_i.a, it_j.a, "combine: shape mismatch");
  detail::check_same_shape(it_i.b, it_j.b, "combine: shape mismatch");
  detail::check_same_shape(it_i.a, it_i.b, "combine: shape mismatch");
  const long k = detail::saturating_add(it_i.k, it_j.k);
  const auto f = detail::factor_or_breakdown(it_i.a + it_j.b, breakdown_tol, k,
                                             it_j.k, "combine");
  return ABIterate{it_i.a * f.solve(it_j.a), it_j.b * f.solve(it_i.b), k};
}

/// Elements 1..count of the plain chain.
inline std::vector<ABIterate> ab_chain(const Pencil& initial, long count,
                                       StepForm form = StepForm::kShortcut,
                                       double breakdown_tol = -1.0) {
  std::vector<ABIterate> chain;
  if (count < 1) return chain;
  chain.reserve(static_cast<std::size_t>(count));
  chain.push_back(ABIterate::first(initial));
  while (static_cast<long>(chain.size()) < count) {
    chain.push_back(ab_step(initial, chain.back(), form, breakdown_tol));
  }
  return chain;
}

/// Closed form of the chain for B_1 = I:
/// A_k = A_1^k (Σ_{j<k} A_1^j)⁻¹, B_k = (Σ_{j<k} A_1^j)⁻¹.
///
/// Throws SingularMatrix when the power sum is singular.
inline ABIterate closed_form_iterate(const ComplexMatrix& a1, long k) {
  if (a1.rows() != a1.cols()) throw DimensionMismatch("closed_form_iterate: not square");
  if (k < 1) throw InvalidArgument("closed_form_iterate: k must be >= 1");
  const Index n = a1.rows();
  if (k == 1) return ABIterate{a1, ComplexMatrix::Identity(n, n), 1};
  const auto f = lu_factor(matrix_power_sum(a1, static_cast<int>(k)));
  // A_1^k and the power sum commute, so the right inverse equals the left one.
  return ABIterate{f.solve(matrix_power(a1, static_cast<int>(k))),
                   f.solve(ComplexMatrix::Identity(n, n)), k};
}

// ---------------------------------------------------------------------------
// Stable subspace extraction
// ---------------------------------------------------------------------------

enum class Status { kConverged, kMaxIterations, kBreakdown };

inline const char* to_string(Status s) {
  switch (s) {
    case Status::kConverged:
      return "converged";
    case Status::kMaxIterations:
      return "max_iterations";
    case Status::kBreakdown:
      return "breakdown";
  }
  return "unknown";
}

struct SubspaceResult {
  SubspaceBasis u;
  ComplexMatrix lambda;
  double residual = 0.0;              ///< ‖A_1 U − B_1 U Λ‖_F / ‖U‖_F
  double lambda_radius = 0.0;         ///< ρ(Λ)
  double last_distance = 1.0;         ///< final successive null-space distance
  int iterations = 0;                 ///< index of the last formed iterate (outer index when accelerated)
  long flow_index = 1;                ///< flow index of that iterate
  Status status = Status::kMaxIterations;
  std::optional<Breakdown> breakdown;
};

struct ABRunOptions {
  double tol = 1e-12;
  int kmax = 100;
  std::optional<Index> expected_dim;
  double rank_tol = kDefaultRankTol;
  double breakdown_tol = -1.0;
  StepForm form = StepForm::kShortcut;
  /// Called with every iterate, starting with (A_1, B_1).
  std::function<void(const ABIterate&)> observer;
};

namespace detail {

inline SubspaceBasis stopping_subspace(const ComplexMatrix& a,
                                       const std::optional<Index>& expected_dim,
                                       double rank_tol) {
  if (expected_dim) return smallest_singular_subspace(a, *expected_dim);
  return null_space_basis(a, rank_tol);
}

inline double successive_distance(const SubspaceBasis& prev, const SubspaceBasis& cur) {
  if (prev.dim() == 0 || cur.dim() == 0) return 1.0;
  return subspace_distance(prev, cur);
}

/// Fills U, Λ (least squares against the original pencil) and the residual.
inline void extract(const Pencil& initial, SubspaceBasis u, SubspaceResult& out) {
  const ComplexMatrix& basis = u.basis();
  const Index m = basis.cols();
  if (m == 0) {
    out.lambda = ComplexMatrix(0, 0);
    out.residual = 0.0;
    out.lambda_radius = 0.0;
  } else {
    const ComplexMatrix bu = initial.b * basis;
    const ComplexMatrix au = initial.a * basis;
    out.lambda = bu.completeOrthogonalDecomposition().solve(au);
    out.residual = (au - bu * out.lambda).norm() / basis.norm();
    out.lambda_radius = spectral_radius(out.lambda);
  }
  out.u = std::move(u);
}

inline void validate_run(const Pencil& initial, double tol, int kmax,
                         const std::optional<Index>& expected_dim) {
  if (!(tol > 0.0)) throw InvalidArgument("tolerance must be > 0");
  if (kmax < 2) throw InvalidArgument("kmax must be >= 2");
  if (expected_dim && (*expected_dim < 0 || *expected_dim > initial.size())) {
    throw InvalidArgument("expected dimension out of range");
  }
}

}  // namespace detail

/// Runs the chain until dist(Null(A_{k-1}), Null(A_k)) < tol or k > kmax.
///
/// Breakdown does not throw: the result carries status kBreakdown, the
/// exception describing it, and the subspace extracted from the last iterate
/// that was formed.
inline SubspaceResult ab_run(const Pencil& initial, const ABRunOptions& opt) {
  detail::validate_run(initial, opt.tol, opt.kmax, opt.expected_dim);

  ABIterate it = ABIterate::first(initial);
  if (opt.observer) opt.observer(it);
  SubspaceBasis prev = detail::stopping_subspace(it.a, opt.expected_dim, opt.rank_tol);

  SubspaceResult out;
  for (;;) {
    if (it.k + 1 > opt.kmax) {
      out.status = Status::kMaxIterations;
      break;
    }
    try {
      it = ab_step(initial, it, opt.form, opt.breakdown_tol);
    } catch (const Breakdown& e) {
      out.status = Status::kBreakdown;
      out.breakdown = e;
      break;
    }
    if (opt.observer) opt.observer(it);
    SubspaceBasis cur = detail::stopping_subspace(it.a, opt.expected_dim, opt.rank_tol);
    out.last_distance = detail::successive_distance(prev, cur);
    prev = std::move(cur);
    if (out.last_distance < opt.tol) {
      out.status = Status::kConverged;
      break;
    }
  }
  out.iterations = static_cast<int>(it.k);
  out.flow_index = it.k;
  detail::extract(initial, std::move(prev), out);
  return out;
}

inline SubspaceResult ab_run(const Pencil& initial, double tol, int kmax,
                             std::optional<Index> expected_dim = std::nullopt) {
  ABRunOptions opt;
  opt.tol = tol;
  opt.kmax = kmax;
  opt.expected_dim = expected_dim;
  return ab_run(initial, opt);
}

// ---------------------------------------------------------------------------
// Spectral bookkeeping
// ---------------------------------------------------------------------------

/// A point of the extended complex plane ℂ ∪ {∞}.
struct ExtendedComplex {
  Complex value{};
  bool infinite = false;

  static ExtendedComplex infinity() { return ExtendedComplex{Complex{}, true}; }
  static ExtendedComplex finite(Complex z) { return ExtendedComplex{z, false}; }
};

/// Eigenvalue of A_i − λB_k induced by an eigenvalue λ of A_1 − λB_1:
///
///   λ^{(i,k)} = λ^i · (Σ_{s<k} λ^s) / (Σ_{s<i} λ^s),   ∞ ↦ ∞.
///
/// At λ = 1 this evaluates to k/i. Throws PoleEncountered when the
/// denominator vanishes (λ a nontrivial i-th root of unity).
inline ExtendedComplex eigenvalue_map(const ExtendedComplex& lambda, long i, long k) {
  if (i < 1 || k < 1) throw InvalidArgument("eigenvalue_map: i and k must be >= 1");
  if (lambda.infinite) return ExtendedComplex::infinity();
  const Complex z = lambda.value;

  auto power_sum = [&](long terms, double& magnitude) {
    Complex sum = 0.0;
    Complex p = 1.0;
    magnitude = 0.0;
    for (long s = 0; s < terms; ++s) {
      sum += p;
      magnitude += std::abs(p);
      p *= z;
    }
    return sum;
  };
  double num_mag = 0.0;
  double den_mag = 0.0;
  const Complex num = power_sum(k, num_mag);
  const Complex den = power_sum(i, den_mag);
  if (std::abs(den) <= 16.0 * kEps * den_mag) {
    throw PoleEncountered("eigenvalue_map: denominator sum vanishes");
  }
  Complex zi = 1.0;
  for (long s = 0; s < i; ++s) zi *= z;
  return ExtendedComplex::finite(zi * num / den);
}

inline ExtendedComplex eigenvalue_map(Complex lambda, long i, long k) {
  return eigenvalue_map(ExtendedComplex::finite(lambda), i, k);
}

/// Smallest k ≤ kmax with λ(A_1, B_1) ∩ S_k ≠ ∅, where
/// S_k = ∪_{2≤p≤k+1} {e^{2πiq/p} : 1 ≤ q ≤ p−1}.
///
/// Such an eigenvalue makes A_1 + B_k singular, so the plain chain breaks
/// down while forming A_{k+1}. Diagnostic only: the condition is sufficient
/// for a well-defined chain, not shown to be necessary.
inline std::optional<long> breakdown_check(std::span<const Complex> eigenvalues, long kmax,
                                           double tol = 1e-9) {
  for (long k = 1; k <= kmax; ++k) {
    const long p = k + 1;
    for (long q = 1; q < p; ++q) {
      const Complex root = std::polar(1.0, 2.0 * std::numbers::pi * static_cast<double>(q) /
                                               static_cast<double>(p));
      for (const Complex& ev : eigenvalues) {
        if (std::abs(ev - root) <= tol) return k;
      }
    }
  }
  return std::nullopt;
}

inline std::optional<long> breakdown_check(std::initializer_list<Complex> eigenvalues,
                                           long kmax, double tol = 1e-9) {
  return breakdown_check(std::span<const Complex>(eigenvalues.begin(), eigenvalues.size()),
                         kmax, tol);
}

}  // namespace abflow
