// Square root of a random 6×6 matrix with known root, solved at orders 2 to 4.
// Prints the error history so the order of convergence is visible.

#include <cstdio>

#include "abflow/abflow.hpp"

using namespace abflow;

int main() {
  ProblemSpec spec;
  spec.spectrum = {{1.0}, {2.0}, {3.0}, {Complex(2.0, 1.0)}, {Complex(2.0, -1.0)}, {1.5}};
  spec.cond = 100.0;
  spec.seed = 42;
  const SqrtTestProblem prob = make_known_sqrt_problem(spec);

  for (int r = 2; r <= 4; ++r) {
    SqrtProblem sp;
    sp.s = prob.s;
    sp.order = r;
    sp.gamma = gamma_heuristic(1.0, 3.0);
    std::printf("order %d\n", r);
    const SqrtResult res = sqrtm_ab(sp, [&](int k, const ComplexMatrix& q) {
      std::printf("  k=%d  error %.3e\n", k, relative_error(q, prob.x_true));
    });
    std::printf("  %s, residual %.3e\n", to_string(res.status), res.residual);
  }
}
