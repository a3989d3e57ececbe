#pragma once

// Principal matrix square root through the AB-iteration.
//
// The pencil A_1 = γI − H, B_1 = γI + H with H = [[0, I], [S, 0]] has the
// stable deflating subspace span[I; √S] with Λ = (γI − √S)(γI + √S)⁻¹, and
// its AB-chain keeps the block form
//
//   A_k = [[Q_k, −I], [−S, Q_k]],   B_k = [[Q_k, I], [S, Q_k]]
//
// with Q_1 = γI and Q_{k+1} = (γQ_k + S)(γI + Q_k)⁻¹. The solver below runs
// that n×n recursion directly (accelerated to order r); the embedded pencil
// is kept for cross-checks.

#include <chrono>
#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "abflow/accel.hpp"
#include "abflow/core.hpp"
#include "abflow/pencil.hpp"
#include "abflow/trace.hpp"

namespace abflow {

/// A_1 = γI − [[0, I], [S, 0]], B_1 = γI + [[0, I], [S, 0]].
inline Pencil embed_pencil(const ComplexMatrix& s, double gamma) {
  if (s.rows() != s.cols()) throw DimensionMismatch("embed_pencil: S is not square");
  if (!(gamma > 0.0) || !std::isfinite(gamma)) {
    throw InvalidArgument("embed_pencil: gamma must be > 0");
  }
  const Index n = s.rows();
  ComplexMatrix h = ComplexMatrix::Zero(2 * n, 2 * n);
  h.topRightCorner(n, n) = ComplexMatrix::Identity(n, n);
  h.bottomLeftCorner(n, n) = s;
  const ComplexMatrix g = Complex(gamma, 0.0) * ComplexMatrix::Identity(2 * n, 2 * n);
  return Pencil(g - h, g + h);
}

/// (S + P·Q)(P + Q)⁻¹ for a partner matrix P. With P = γI this is the plain
/// step Q_{k+1} = (γQ_k + S)(γI + Q_k)⁻¹.
///
/// Throws Breakdown (index 0) when P + Q is numerically singular, which
/// happens when S has spectrum on the negative real axis.
inline ComplexMatrix q_step(const ComplexMatrix& q, const ComplexMatrix& s,
                            const ComplexMatrix& partner, double breakdown_tol = -1.0) {
  if (q.rows() != q.cols() || s.rows() != q.rows() || s.cols() != q.cols() ||
      partner.rows() != q.rows() || partner.cols() != q.cols()) {
    throw DimensionMismatch("q_step: shape mismatch");
  }
  const auto f = detail::factor_or_breakdown(partner + q, breakdown_tol, 0, 0, "q_step");
  return f.solve_right(s + partner * q);
}

inline ComplexMatrix q_step(const ComplexMatrix& q, const ComplexMatrix& s, double gamma,
                            double breakdown_tol = -1.0) {
  return q_step(q, s, Complex(gamma, 0.0) * ComplexMatrix::Identity(q.rows(), q.rows()),
                breakdown_tol);
}

/// Q_1..Q_count of the unaccelerated recursion from Q_1 = γI.
inline std::vector<ComplexMatrix> plain_q_chain(const ComplexMatrix& s, double gamma, int count,
                                                double breakdown_tol = -1.0) {
  if (!(gamma > 0.0)) throw InvalidArgument("plain_q_chain: gamma must be > 0");
  std::vector<ComplexMatrix> out;
  if (count < 1) return out;
  out.push_back(Complex(gamma, 0.0) * ComplexMatrix::Identity(s.rows(), s.rows()));
  while (static_cast<int>(out.size()) < count) {
    out.push_back(q_step(out.back(), s, gamma, breakdown_tol));
  }
  return out;
}

/// One accelerated outer step Q̂_{k-1} → Q̂_k: r−2 inner partner steps
/// against Q̂_{k-1}, then the outer update. Breakdown carries the inner index
/// (0 for the outer update).
inline ComplexMatrix accelerated_q_step(const ComplexMatrix& q_hat, const ComplexMatrix& s, int r,
                                        double breakdown_tol = -1.0) {
  if (r < 2) throw InvalidArgument("accelerated_q_step: r must be >= 2");
  ComplexMatrix inner = q_hat;
  for (int l = 1; l <= r - 2; ++l) {
    try {
      inner = q_step(inner, s, q_hat, breakdown_tol);
    } catch (const Breakdown& e) {
      throw Breakdown(e.what(), 0, 0, 0, l);
    }
  }
  return q_step(inner, s, q_hat, breakdown_tol);
}

// ---------------------------------------------------------------------------
// Closed-form single-step variants
// ---------------------------------------------------------------------------

/// C(n, k) in exact 64-bit arithmetic; valid for n ≤ 62.
inline std::uint64_t binomial(int n, int k) {
  if (k < 0 || k > n) return 0;
  if (k > n - k) k = n - k;
  std::uint64_t c = 1;
  for (int i = 1; i <= k; ++i) {
    c = c * static_cast<std::uint64_t>(n - k + i) / static_cast<std::uint64_t>(i);
  }
  return c;
}

/// A whole accelerated step collapsed into one rational update:
///
///   (Σ_j C(r,2j) Q^{r−2j} S^j) · (Σ_j C(r,2j+1) Q^{r−2j−1} S^j)⁻¹
///
/// Throws SingularDenominator when the second factor is singular.
inline ComplexMatrix binomial_step(const ComplexMatrix& q, const ComplexMatrix& s, int r) {
  if (q.rows() != q.cols() || s.rows() != q.rows() || s.cols() != q.cols()) {
    throw DimensionMismatch("binomial_step: shape mismatch");
  }
  if (r < 2 || r > 16) throw InvalidArgument("binomial_step: r must be in [2, 16]");
  const Index n = q.rows();

  // q_pows[a] = Q^a, s_pows[j] = S^j
  std::vector<ComplexMatrix> q_pows{ComplexMatrix::Identity(n, n)};
  for (int a = 1; a <= r; ++a) q_pows.push_back(q_pows.back() * q);
  std::vector<ComplexMatrix> s_pows{ComplexMatrix::Identity(n, n)};
  for (int j = 1; 2 * j <= r; ++j) s_pows.push_back(s_pows.back() * s);

  ComplexMatrix num = ComplexMatrix::Zero(n, n);
  for (int j = 0; 2 * j <= r; ++j) {
    num += static_cast<double>(binomial(r, 2 * j)) * (q_pows[r - 2 * j] * s_pows[j]);
  }
  ComplexMatrix den = ComplexMatrix::Zero(n, n);
  for (int j = 0; 2 * j + 1 <= r; ++j) {
    den += static_cast<double>(binomial(r, 2 * j + 1)) * (q_pows[r - 2 * j - 1] * s_pows[j]);
  }
  try {
    return lu_factor(den).solve_right(num);
  } catch (const SingularMatrix& e) {
    throw SingularDenominator("binomial_step: singular denominator", e.pivot_index());
  }
}

/// ½(Q + S·Q⁻¹).
inline ComplexMatrix newton_step(const ComplexMatrix& q, const ComplexMatrix& s) {
  if (q.rows() != q.cols() || s.rows() != q.rows() || s.cols() != q.cols()) {
    throw DimensionMismatch("newton_step: shape mismatch");
  }
  return 0.5 * (q + right_solve(q, s));
}

/// Cayley image C_X(Q) = (Q − X)(Q + X)⁻¹.
inline ComplexMatrix cayley_transform(const ComplexMatrix& x, const ComplexMatrix& q) {
  return right_solve(q + x, q - x);
}

/// ‖(X − Q)(X + Q)⁻¹‖₂ against a known square root X.
inline double cayley_residual(const ComplexMatrix& q, const ComplexMatrix& x_true) {
  if (q.rows() != x_true.rows() || q.cols() != x_true.cols()) {
    throw DimensionMismatch("cayley_residual: shape mismatch");
  }
  return induced_norm2(right_solve(x_true + q, x_true - q));
}

/// γ = √(ab), the single shift minimising max |(x−γ)/(x+γ)| over x ∈ [a, b].
/// The bounds are on |√λ| over the spectrum of S.
inline double gamma_heuristic(double a, double b) {
  if (!(a > 0.0) || !(b >= a) || !std::isfinite(b)) {
    throw InvalidBounds("gamma_heuristic: need 0 < a <= b");
  }
  return std::sqrt(a * b);
}

// ---------------------------------------------------------------------------
// Solver
// ---------------------------------------------------------------------------

struct SqrtProblem {
  ComplexMatrix s;
  double gamma = 1.0;
  int order = 2;
  double tol = 1e-12;
  int kmax = 100;

  void validate() const {
    if (s.rows() != s.cols()) throw DimensionMismatch("SqrtProblem: S is not square");
    require_finite(s, "SqrtProblem S");
    if (!(gamma > 0.0) || !std::isfinite(gamma)) {
      throw InvalidArgument("SqrtProblem: gamma must be > 0");
    }
    if (order < 2 || order > 16) throw InvalidArgument("SqrtProblem: order must be in [2, 16]");
    if (!(tol > 0.0)) throw InvalidArgument("SqrtProblem: tol must be > 0");
    if (kmax < 2) throw InvalidArgument("SqrtProblem: kmax must be >= 2");
  }
};

struct SqrtResult {
  ComplexMatrix x;
  double residual = 0.0;  ///< ‖X² − S‖_F / ‖S‖_F (absolute when S = 0)
  ConvergenceTrace trace;
  Status status = Status::kMaxIterations;
  int iterations = 1;     ///< outer index of X
  std::optional<Breakdown> breakdown;
};

inline double sqrt_residual(const ComplexMatrix& x, const ComplexMatrix& s) {
  const double ns = s.norm();
  const double r = (x * x - s).norm();
  return ns > 0.0 ? r / ns : r;
}

namespace detail {

/// Successive-step test: step < tol, or a step already below √tol that
/// failed to shrink. Every convergent regime of the recursion (including the
/// linear one for singular S) shrinks the step strictly, so the second case
/// only fires at the rounding floor, which sits near κ(X)·ε and can exceed
/// tol for ill-conditioned roots.
inline bool step_converged(double prev_step, double step, double tol) {
  return step < tol || (step < std::sqrt(tol) && step >= prev_step);
}

}  // namespace detail

using SqrtObserver = std::function<void(int k, const ComplexMatrix& q_hat)>;

/// Accelerated square-root iteration from Q̂_1 = γI.
///
/// Stops when ‖Q̂_k − Q̂_{k−1}‖_F / ‖Q̂_k‖_F < tol (or stagnates below √tol,
/// see detail::step_converged) or k > kmax. The trace
/// records that relative step as its error column together with the
/// residual of every outer iterate. Breakdown is reported through the status.
inline SqrtResult sqrtm_ab(const SqrtProblem& prob, const SqrtObserver& observer = {}) {
  prob.validate();
  using Clock = std::chrono::steady_clock;
  const Index n = prob.s.rows();

  SqrtResult out;
  ComplexMatrix q_hat = Complex(prob.gamma, 0.0) * ComplexMatrix::Identity(n, n);
  if (observer) observer(1, q_hat);
  int k = 1;
  double prev_diff = INFINITY;
  for (;;) {
    if (k + 1 > prob.kmax) {
      out.status = Status::kMaxIterations;
      break;
    }
    const auto t0 = Clock::now();
    ComplexMatrix next;
    try {
      next = accelerated_q_step(q_hat, prob.s, prob.order);
    } catch (const Breakdown& e) {
      out.status = Status::kBreakdown;
      out.breakdown = Breakdown(e.what(), k + 1, 0, k + 1, e.inner());
      break;
    }
    const double secs = std::chrono::duration<double>(Clock::now() - t0).count();
    ++k;
    const double scale = next.norm();
    const double step = (next - q_hat).norm();
    const double diff = scale > 0.0 ? step / scale : step;
    q_hat = std::move(next);
    if (observer) observer(k, q_hat);
    out.trace.push(k, diff, sqrt_residual(q_hat, prob.s), secs);
    if (detail::step_converged(prev_diff, diff, prob.tol)) {
      out.status = Status::kConverged;
      break;
    }
    prev_diff = diff;
  }
  out.trace.update_orders(1e2 * kEps);
  out.iterations = k;
  out.residual = sqrt_residual(q_hat, prob.s);
  out.x = std::move(q_hat);
  return out;
}

}  // namespace abflow
