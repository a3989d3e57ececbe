#pragma once

// Known-answer problem generators and convergence experiments.

#include <chrono>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "abflow/accel.hpp"
#include "abflow/core.hpp"
#include "abflow/msqrt.hpp"
#include "abflow/pencil.hpp"
#include "abflow/trace.hpp"

namespace abflow {

/// Seeded source of doubles built on std::mt19937_64, whose output sequence
/// is fixed by the standard. Uniforms take the top 53 bits; normals use the
/// Box-Muller transform, so results do not depend on the standard library's
/// distribution implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  /// Uniform on [0, 1).
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  double normal() {
    if (spare_) {
      const double v = *spare_;
      spare_.reset();
      return v;
    }
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * std::numbers::pi * u2;
    spare_ = radius * std::sin(angle);
    return radius * std::cos(angle);
  }

  ComplexMatrix gaussian(Index rows, Index cols) {
    ComplexMatrix m(rows, cols);
    for (Index i = 0; i < rows; ++i) {
      for (Index j = 0; j < cols; ++j) m(i, j) = Complex(normal(), 0.0);
    }
    return m;
  }

 private:
  std::mt19937_64 engine_;
  std::optional<double> spare_;
};

/// A similarity transform together with its exact inverse.
struct Similarity {
  ComplexMatrix p;
  ComplexMatrix p_inv;
};

/// P = Q_1 · diag(σ) · Q_2 with random orthogonal Q_1, Q_2 and σ
/// log-spaced on [1, cond], so κ₂(P) = cond.
inline Similarity random_similarity(Index n, double cond, Rng& rng) {
  if (!(cond >= 1.0)) throw InvalidArgument("random_similarity: cond must be >= 1");
  auto orthogonal = [&] {
    Eigen::HouseholderQR<ComplexMatrix> qr(rng.gaussian(n, n));
    return ComplexMatrix(qr.householderQ());
  };
  const ComplexMatrix q1 = orthogonal();
  const ComplexMatrix q2 = orthogonal();
  Eigen::VectorXcd sigma(n);
  for (Index i = 0; i < n; ++i) {
    const double t = n > 1 ? static_cast<double>(i) / static_cast<double>(n - 1) : 0.0;
    sigma(i) = std::pow(cond, t);
  }
  return Similarity{q1 * sigma.asDiagonal() * q2,
                    q2.adjoint() * sigma.cwiseInverse().asDiagonal() * q1.adjoint()};
}

struct SpectrumEntry {
  Complex value;
  int multiplicity = 1;
  /// false puts the copies into a single Jordan block.
  bool semisimple = true;
};

struct ProblemSpec {
  std::vector<SpectrumEntry> spectrum;
  /// κ₂ of the random similarity transform; 1 gives an orthogonal one.
  double cond = 10.0;
  bool identity_similarity = false;
  /// Pencil problems only: use a random well-conditioned B instead of I.
  bool random_b = false;
  std::uint64_t seed = 0;

  Index dimension() const {
    Index n = 0;
    for (const auto& e : spectrum) n += e.multiplicity;
    return n;
  }
};

namespace detail {

inline void validate_spec(const ProblemSpec& spec) {
  if (spec.spectrum.empty()) throw InvalidSpectrum("empty spectrum");
  for (const auto& e : spec.spectrum) {
    if (e.multiplicity < 1) throw InvalidSpectrum("multiplicity must be >= 1");
    if (!std::isfinite(e.value.real()) || !std::isfinite(e.value.imag())) {
      throw InvalidSpectrum("non-finite eigenvalue");
    }
  }
  if (!spec.identity_similarity && !(spec.cond >= 1.0)) {
    throw InvalidArgument("ProblemSpec: cond must be >= 1");
  }
}

/// Jordan-form matrix for the given ordered spectrum.
inline ComplexMatrix jordan_matrix(const std::vector<SpectrumEntry>& spectrum) {
  Index n = 0;
  for (const auto& e : spectrum) n += e.multiplicity;
  ComplexMatrix d = ComplexMatrix::Zero(n, n);
  Index at = 0;
  for (const auto& e : spectrum) {
    for (int c = 0; c < e.multiplicity; ++c) {
      d(at + c, at + c) = e.value;
      if (!e.semisimple && c + 1 < e.multiplicity) d(at + c, at + c + 1) = 1.0;
    }
    at += e.multiplicity;
  }
  return d;
}

inline Similarity make_similarity(const ProblemSpec& spec, Index n, Rng& rng) {
  if (spec.identity_similarity) {
    return Similarity{ComplexMatrix::Identity(n, n), ComplexMatrix::Identity(n, n)};
  }
  return random_similarity(n, spec.cond, rng);
}

}  // namespace detail

struct SqrtTestProblem {
  ComplexMatrix s;
  ComplexMatrix x_true;
};

/// X = P·J·P⁻¹ with the prescribed Jordan form J and S = X·X, so X is the
/// principal square root of S. Zero eigenvalues must be semisimple; all
/// others need a positive real part.
inline SqrtTestProblem make_known_sqrt_problem(const ProblemSpec& spec) {
  detail::validate_spec(spec);
  for (const auto& e : spec.spectrum) {
    if (e.value == Complex(0.0, 0.0)) {
      if (!e.semisimple && e.multiplicity > 1) {
        throw InvalidSpectrum("zero eigenvalue of the root must be semisimple");
      }
    } else if (!(e.value.real() > 0.0)) {
      throw InvalidSpectrum("root eigenvalues must lie in the open right half-plane");
    }
  }
  const Index n = spec.dimension();
  Rng rng(spec.seed);
  const Similarity sim = detail::make_similarity(spec, n, rng);
  SqrtTestProblem out;
  out.x_true = sim.p * detail::jordan_matrix(spec.spectrum) * sim.p_inv;
  out.s = out.x_true * out.x_true;
  const double check = (out.x_true * out.x_true - out.s).norm();
  if (check > 1e-11 * std::max(out.s.norm(), 1.0)) {
    throw Error("make_known_sqrt_problem: generator self-check failed");
  }
  return out;
}

struct PencilProblem {
  Pencil pencil;
  SubspaceBasis u_true;
  ComplexMatrix lambda_true;
  /// breakdown_check of the prescribed spectrum, when it meets a root of unity.
  std::optional<long> expected_breakdown;
};

/// A = W·P·diag(Λ_s, Λ_u)·P⁻¹, B = W (W = I unless random_b), with the
/// eigenvalues |λ| < 1 placed first. U_true orthonormalises the leading
/// columns of P and Λ_true is expressed in that basis.
///
/// Unit-circle eigenvalues are rejected unless they are nontrivial roots of
/// unity, which are kept and reported through expected_breakdown.
inline PencilProblem make_pencil_problem(const ProblemSpec& spec) {
  detail::validate_spec(spec);
  constexpr long kRootSearch = 64;
  std::vector<SpectrumEntry> stable;
  std::vector<SpectrumEntry> rest;
  std::vector<Complex> all;
  for (const auto& e : spec.spectrum) {
    const double mag = std::abs(e.value);
    if (std::abs(mag - 1.0) <= 1e-12) {
      const Complex v[1] = {e.value};
      if (!breakdown_check(std::span<const Complex>(v, 1), kRootSearch)) {
        throw InvalidSpectrum("unit-circle eigenvalue that is not a nontrivial root of unity");
      }
    }
    (mag < 1.0 ? stable : rest).push_back(e);
    for (int c = 0; c < e.multiplicity; ++c) all.push_back(e.value);
  }
  std::vector<SpectrumEntry> ordered = stable;
  ordered.insert(ordered.end(), rest.begin(), rest.end());
  Index m = 0;
  for (const auto& e : stable) m += e.multiplicity;

  const Index n = spec.dimension();
  Rng rng(spec.seed);
  const Similarity sim = detail::make_similarity(spec, n, rng);
  ComplexMatrix w = ComplexMatrix::Identity(n, n);
  if (spec.random_b) w = random_similarity(n, 10.0, rng).p;

  const ComplexMatrix d = detail::jordan_matrix(ordered);
  const ComplexMatrix a = w * (sim.p * d * sim.p_inv);

  PencilProblem out{Pencil(a, w), SubspaceBasis(ComplexMatrix(n, 0)),
                    ComplexMatrix(0, 0), breakdown_check(all, kRootSearch)};
  if (m > 0) {
    Eigen::HouseholderQR<ComplexMatrix> qr(sim.p.leftCols(m));
    const ComplexMatrix q = ComplexMatrix(qr.householderQ()).leftCols(m);
    const ComplexMatrix r = qr.matrixQR().topLeftCorner(m, m).triangularView<Eigen::Upper>();
    // U = P_m·R⁻¹ and A·P_m = B·P_m·Λ_s, hence A·U = B·U·(R·Λ_s·R⁻¹).
    const ComplexMatrix lambda_s = d.topLeftCorner(m, m);
    out.lambda_true = right_solve(r, r * lambda_s);
    out.u_true = SubspaceBasis(q);
  }
  const ComplexMatrix& u = out.u_true.basis();
  const double check = (out.pencil.a * u - out.pencil.b * u * out.lambda_true).norm();
  if (check > 1e-11 * std::max(1.0, out.pencil.a.norm())) {
    throw Error("make_pencil_problem: generator self-check failed");
  }
  return out;
}

// ---------------------------------------------------------------------------
// Experiments
// ---------------------------------------------------------------------------

enum class ExperimentKind { kPencil, kSqrt };

struct SolverParams {
  int order = 2;
  /// Run the unaccelerated chain instead of the order-r iteration.
  bool plain = false;
  double gamma = 1.0;
  double tol = 1e-12;
  int kmax = 100;
};

struct ExperimentResult {
  ConvergenceTrace trace;
  Status status = Status::kMaxIterations;
  std::string message;
};

/// Errors below this relative level are treated as saturated by rounding
/// when estimating orders.
inline constexpr double kSaturationFloor = 1e2 * kEps;

namespace detail {

inline ExperimentResult run_sqrt_experiment(const ProblemSpec& spec, const SolverParams& params) {
  using Clock = std::chrono::steady_clock;
  const SqrtTestProblem prob = make_known_sqrt_problem(spec);
  const double xnorm = prob.x_true.norm();
  auto true_error = [&](const ComplexMatrix& q) {
    const double e = (q - prob.x_true).norm();
    return xnorm > 0.0 ? e / xnorm : e;
  };

  ExperimentResult out;
  auto last = Clock::now();
  auto record = [&](int k, const ComplexMatrix& q) {
    const auto now = Clock::now();
    const double secs = k == 1 ? 0.0 : std::chrono::duration<double>(now - last).count();
    last = now;
    out.trace.push(k, true_error(q), sqrt_residual(q, prob.s), secs);
  };

  if (!params.plain) {
    SqrtProblem sp{prob.s, params.gamma, params.order, params.tol, params.kmax};
    const SqrtResult res = sqrtm_ab(sp, record);
    out.status = res.status;
    if (res.breakdown) out.message = res.breakdown->what();
  } else {
    if (!(params.gamma > 0.0)) throw InvalidArgument("run_experiment: gamma must be > 0");
    ComplexMatrix q = Complex(params.gamma, 0.0) * ComplexMatrix::Identity(prob.s.rows(), prob.s.rows());
    record(1, q);
    out.status = Status::kMaxIterations;
    double prev_diff = INFINITY;
    for (int k = 2; k <= params.kmax; ++k) {
      ComplexMatrix next;
      try {
        next = q_step(q, prob.s, params.gamma);
      } catch (const Breakdown& e) {
        out.status = Status::kBreakdown;
        out.message = e.what();
        break;
      }
      const double scale = next.norm();
      const double diff = (next - q).norm() / (scale > 0.0 ? scale : 1.0);
      q = std::move(next);
      record(k, q);
      if (detail::step_converged(prev_diff, diff, params.tol)) {
        out.status = Status::kConverged;
        break;
      }
      prev_diff = diff;
    }
  }
  out.trace.update_orders(kSaturationFloor);
  return out;
}

inline ExperimentResult run_pencil_experiment(const ProblemSpec& spec,
                                              const SolverParams& params) {
  using Clock = std::chrono::steady_clock;
  const PencilProblem prob = make_pencil_problem(spec);
  const Index m = prob.u_true.dim();
  const ComplexMatrix& u = prob.u_true.basis();

  ExperimentResult out;
  auto last = Clock::now();
  int step = 0;
  auto record = [&](const ABIterate& it) {
    const auto now = Clock::now();
    const double secs = step == 0 ? 0.0 : std::chrono::duration<double>(now - last).count();
    last = now;
    ++step;
    const double err = subspace_distance(smallest_singular_subspace(it.a, m), prob.u_true);
    out.trace.push(step, err, (it.a * u).norm(), secs);
  };

  SubspaceResult res;
  if (params.plain) {
    ABRunOptions opt;
    opt.tol = params.tol;
    opt.kmax = params.kmax;
    opt.expected_dim = m;
    opt.observer = record;
    res = ab_run(prob.pencil, opt);
  } else {
    AccelConfig cfg;
    cfg.order = params.order;
    cfg.tol = params.tol;
    cfg.kmax = params.kmax;
    cfg.expected_dim = m;
    cfg.observer = record;
    res = modified_ab_run(prob.pencil, cfg);
  }
  out.status = res.status;
  if (res.breakdown) out.message = res.breakdown->what();
  out.trace.update_orders(kSaturationFloor);
  return out;
}

}  // namespace detail

/// Generates the problem described by `spec`, runs the chosen solver and
/// records the true error of every iterate (relative Frobenius error against
/// the known root, or the projector distance to the known stable subspace).
inline ExperimentResult run_experiment(ExperimentKind kind, const ProblemSpec& spec,
                                       const SolverParams& params) {
  return kind == ExperimentKind::kSqrt ? detail::run_sqrt_experiment(spec, params)
                                       : detail::run_pencil_experiment(spec, params);
}

}  // namespace abflow
