// Stable deflating subspace of a 5×5 pencil with two eigenvalues inside the
// unit disk, by the plain iteration and by the order-3 acceleration.

#include <cstdio>

#include "abflow/abflow.hpp"

using namespace abflow;

namespace {

void show(const char* label, const SubspaceResult& res, const PencilProblem& prob) {
  std::printf("%-12s %s after %d steps (flow index %ld)\n", label, to_string(res.status),
              res.iterations, res.flow_index);
  std::printf("             distance to true subspace %.3e, residual %.3e, rho(Lambda) %.3f\n",
              subspace_distance(res.u, prob.u_true), res.residual, res.lambda_radius);
}

}  // namespace

int main() {
  ProblemSpec spec;
  spec.spectrum = {{0.9}, {Complex(0.3, 0.6)}, {1.2}, {-2.0}, {Complex(0.0, 4.0)}};
  spec.random_b = true;
  spec.seed = 3;
  const PencilProblem prob = make_pencil_problem(spec);

  show("plain", ab_run(prob.pencil, 1e-12, 500), prob);

  AccelConfig cfg;
  cfg.order = 3;
  show("order 3", modified_ab_run(prob.pencil, cfg), prob);
}
