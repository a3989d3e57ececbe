#pragma once

// Order-r acceleration of the AB-iteration.
//
// Each outer step builds (A^{(r-1)}, B^{(r-1)}) from the current outer
// iterate (Â, B̂) with r−2 flow compositions and then composes once more, so
// the k-th outer iterate is the plain chain element with index r^{k-1}.

#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "abflow/pencil.hpp"

namespace abflow {

struct AccelConfig {
  int order = 2;
  double tol = 1e-12;
  int kmax = 100;
  std::optional<Index> expected_dim;
  double rank_tol = kDefaultRankTol;
  double breakdown_tol = -1.0;
  /// Called with every outer iterate, starting with (A_1, B_1).
  std::function<void(const ABIterate&)> observer;

  void validate() const {
    if (order < 2 || order > 16) throw InvalidArgument("AccelConfig: order must be in [2, 16]");
    if (!(tol > 0.0)) throw InvalidArgument("AccelConfig: tol must be > 0");
    if (kmax < 2) throw InvalidArgument("AccelConfig: kmax must be >= 2");
  }
};

/// Applies A^{(ℓ+1)} = A^{(ℓ)} (A^{(ℓ)} + B̂)⁻¹ Â, B^{(ℓ+1)} = B̂ (A^{(ℓ)} + B̂)⁻¹ B^{(ℓ)}
/// for ℓ = 1..r−2 starting from (Â, B̂); returns the iterate with index
/// (r−1)·hat.k. Breakdown carries the inner index ℓ.
inline ABIterate inner_chain(const ABIterate& hat, int r, double breakdown_tol = -1.0) {
  if (r < 2) throw InvalidArgument("inner_chain: r must be >= 2");
  ABIterate cur = hat;
  for (int l = 1; l <= r - 2; ++l) {
    try {
      cur = combine(cur, hat, breakdown_tol);
    } catch (const Breakdown& e) {
      throw Breakdown(e.what(), e.index(), e.sum_index(), 0, l);
    }
  }
  return cur;
}

inline std::pair<ComplexMatrix, ComplexMatrix> inner_chain(const ComplexMatrix& hat_a,
                                                           const ComplexMatrix& hat_b, int r,
                                                           double breakdown_tol = -1.0) {
  ABIterate out = inner_chain(ABIterate{hat_a, hat_b, 1}, r, breakdown_tol);
  return {std::move(out.a), std::move(out.b)};
}

/// One outer step: (Â_{k-1}, B̂_{k-1}) → (Â_k, B̂_k). `outer` is the index k
/// being formed and is only used to label a breakdown.
inline ABIterate accel_step(const ABIterate& hat, int r, int outer = 0,
                            double breakdown_tol = -1.0) {
  ABIterate inner;
  try {
    inner = inner_chain(hat, r, breakdown_tol);
  } catch (const Breakdown& e) {
    throw Breakdown(e.what(), e.index(), e.sum_index(), outer, e.inner());
  }
  try {
    return combine(inner, hat, breakdown_tol);
  } catch (const Breakdown& e) {
    throw Breakdown(e.what(), e.index(), e.sum_index(), outer, 0);
  }
}

/// Outer iterates 1..count; element k−1 has flow index r^{k-1}.
inline std::vector<ABIterate> modified_ab_iterates(const Pencil& initial, int r, int count,
                                                   double breakdown_tol = -1.0) {
  if (r < 2 || r > 16) throw InvalidArgument("modified_ab_iterates: order must be in [2, 16]");
  std::vector<ABIterate> out;
  if (count < 1) return out;
  out.push_back(ABIterate::first(initial));
  for (int k = 2; k <= count; ++k) out.push_back(accel_step(out.back(), r, k, breakdown_tol));
  return out;
}

/// Accelerated counterpart of ab_run: stops when successive outer null
/// spaces are within cfg.tol or the outer index exceeds cfg.kmax. Extraction
/// of U and Λ is identical to ab_run.
inline SubspaceResult modified_ab_run(const Pencil& initial, const AccelConfig& cfg) {
  cfg.validate();
  detail::validate_run(initial, cfg.tol, cfg.kmax, cfg.expected_dim);

  ABIterate hat = ABIterate::first(initial);
  if (cfg.observer) cfg.observer(hat);
  SubspaceBasis prev = detail::stopping_subspace(hat.a, cfg.expected_dim, cfg.rank_tol);

  SubspaceResult out;
  int k = 1;
  for (;;) {
    if (k + 1 > cfg.kmax) {
      out.status = Status::kMaxIterations;
      break;
    }
    try {
      hat = accel_step(hat, cfg.order, k + 1, cfg.breakdown_tol);
    } catch (const Breakdown& e) {
      out.status = Status::kBreakdown;
      out.breakdown = e;
      break;
    }
    ++k;
    if (cfg.observer) cfg.observer(hat);
    SubspaceBasis cur = detail::stopping_subspace(hat.a, cfg.expected_dim, cfg.rank_tol);
    out.last_distance = detail::successive_distance(prev, cur);
    prev = std::move(cur);
    if (out.last_distance < cfg.tol) {
      out.status = Status::kConverged;
      break;
    }
  }
  out.iterations = k;
  out.flow_index = hat.k;
  detail::extract(initial, std::move(prev), out);
  return out;
}

}  // namespace abflow
