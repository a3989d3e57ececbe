#pragma once

#include <cmath>
#include <optional>
#include <vector>

#include "abflow/errors.hpp"

namespace abflow {

/// Empirical convergence order ρ_k = ln(e_{k+1}/e_k) / ln(e_k/e_{k−1}) for
/// every admissible k. Triples with a non-positive or non-finite entry, or
/// with a vanishing denominator, are skipped.
///
/// Throws InsufficientData unless at least three entries are positive.
inline std::vector<double> estimate_order(const std::vector<double>& errors) {
  std::size_t positive = 0;
  for (double e : errors) {
    if (e > 0.0 && std::isfinite(e)) ++positive;
  }
  if (positive < 3) throw InsufficientData("estimate_order: need at least 3 positive errors");

  std::vector<double> out;
  for (std::size_t k = 1; k + 1 < errors.size(); ++k) {
    const double e0 = errors[k - 1];
    const double e1 = errors[k];
    const double e2 = errors[k + 1];
    if (!(e0 > 0.0 && e1 > 0.0 && e2 > 0.0)) continue;
    const double den = std::log(e1 / e0);
    const double num = std::log(e2 / e1);
    if (!std::isfinite(den) || !std::isfinite(num) || std::abs(den) < 1e-300) continue;
    out.push_back(num / den);
  }
  return out;
}

/// Per-step error history of an iterative solve.
struct ConvergenceTrace {
  std::vector<int> steps;
  std::vector<double> errors;
  std::vector<double> residuals;
  /// Same length as `errors`; entry j holds the order observed from
  /// (e_{j−2}, e_{j−1}, e_j) when admissible.
  std::vector<std::optional<double>> orders;
  std::vector<double> elapsed_seconds;

  std::size_t size() const { return steps.size(); }

  void push(int step, double error, double residual, double seconds) {
    steps.push_back(step);
    errors.push_back(error);
    residuals.push_back(residual);
    orders.emplace_back();
    elapsed_seconds.push_back(seconds);
  }

  /// Recomputes `orders`, ignoring errors below `floor` (saturated by
  /// rounding).
  void update_orders(double floor = 0.0) {
    orders.assign(errors.size(), std::nullopt);
    for (std::size_t j = 2; j < errors.size(); ++j) {
      const double e0 = errors[j - 2];
      const double e1 = errors[j - 1];
      const double e2 = errors[j];
      if (!(e0 > floor && e1 > floor && e2 > floor)) continue;
      if (!(e0 > 0.0 && e1 > 0.0 && e2 > 0.0)) continue;
      const double den = std::log(e1 / e0);
      const double num = std::log(e2 / e1);
      if (!std::isfinite(den) || !std::isfinite(num) || std::abs(den) < 1e-300) continue;
      orders[j] = num / den;
    }
  }

  std::vector<double> order_sequence() const {
    std::vector<double> out;
    for (const auto& o : orders) {
      if (o) out.push_back(*o);
    }
    return out;
  }

  std::optional<double> terminal_order() const {
    for (auto it = orders.rbegin(); it != orders.rend(); ++it) {
      if (*it) return **it;
    }
    return std::nullopt;
  }
};

}  // namespace abflow
