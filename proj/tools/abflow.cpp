// abflow: command-line driver for the AB-iteration solvers.
//
//   abflow sqrt   --input S.txt [--order r] [--gamma g] [--out X.json] [--trace t.csv]
//   abflow pencil --a A.txt [--b B.txt] [--dim m] [--order r] [--out U.json]
//   abflow bench  --kind sqrt --spectrum "2,3" --orders 2,3,4 --seed 7 --out-dir D
//
// Exit codes: 0 converged, 1 usage or input error, 2 breakdown, 3 iteration
// limit reached.

#include <cstdlib>
#include <filesystem>
#include <future>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "abflow/abflow.hpp"

namespace fs = std::filesystem;
using namespace abflow;

namespace {

constexpr int kExitUsage = 1;

int exit_code(Status s) {
  switch (s) {
    case Status::kConverged:
      return 0;
    case Status::kBreakdown:
      return 2;
    case Status::kMaxIterations:
      return 3;
  }
  return kExitUsage;
}

/// ABFLOW_OUT_DIR overrides where results go when no path is given.
fs::path default_out_dir() {
  const char* env = std::getenv("ABFLOW_OUT_DIR");
  return env && *env ? fs::path(env) : fs::path(".");
}

Json breakdown_json(const Breakdown& b) {
  return Json{{"message", b.what()},
              {"index", b.index()},
              {"sum_index", b.sum_index()},
              {"outer", b.outer()},
              {"inner", b.inner()}};
}

void write_trace(const fs::path& path, const ConvergenceTrace& trace) {
  if (path.extension() == ".json") {
    write_atomic(path, Json{{"records", trace_records(trace)}}.dump(2) + "\n");
  } else {
    write_atomic(path, trace_to_csv(trace));
  }
}

// "2,3,0.5:-1" → {2, 3, 0.5−i}; "re:im" gives a complex entry.
std::vector<SpectrumEntry> parse_spectrum(const std::string& text) {
  std::vector<SpectrumEntry> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.find_first_not_of(" \t") == std::string::npos) continue;
    const auto colon = item.find(':');
    std::size_t used = 0;
    const double re = std::stod(item.substr(0, colon), &used);
    double im = 0.0;
    if (colon != std::string::npos) im = std::stod(item.substr(colon + 1));
    out.push_back(SpectrumEntry{Complex(re, im), 1, true});
  }
  if (out.empty()) throw InvalidSpectrum("empty --spectrum");
  return out;
}

struct SqrtArgs {
  std::string input;
  int order = 2;
  double gamma = 1.0;
  double tol = 1e-12;
  int kmax = 100;
  std::string out;
  std::string trace;
};

int run_sqrt(const SqrtArgs& a) {
  SqrtProblem prob;
  prob.s = parse_matrix_file(a.input);
  prob.gamma = a.gamma;
  prob.order = a.order;
  prob.tol = a.tol;
  prob.kmax = a.kmax;
  const SqrtResult res = sqrtm_ab(prob);

  Json doc = matrix_to_json(res.x);
  doc["status"] = to_string(res.status);
  doc["residual"] = res.residual;
  doc["iterations"] = res.iterations;
  if (res.breakdown) doc["breakdown"] = breakdown_json(*res.breakdown);
  const fs::path out = a.out.empty() ? default_out_dir() / "sqrt_result.json" : fs::path(a.out);
  write_atomic(out, doc.dump(2) + "\n");
  if (!a.trace.empty()) write_trace(a.trace, res.trace);

  std::cerr << "sqrt: " << to_string(res.status) << " after " << res.iterations
            << " iterations, residual " << res.residual << "\n";
  return exit_code(res.status);
}

struct PencilArgs {
  std::string a;
  std::string b;
  double tol = 1e-12;
  int kmax = 100;
  std::optional<long> dim;
  std::optional<int> order;
  std::string out;
};

int run_pencil(const PencilArgs& args) {
  ComplexMatrix a = parse_matrix_file(args.a);
  ComplexMatrix b = args.b.empty() ? ComplexMatrix::Identity(a.rows(), a.rows())
                                   : parse_matrix_file(args.b);
  const Pencil pencil(std::move(a), std::move(b));
  std::optional<Index> dim;
  if (args.dim) dim = static_cast<Index>(*args.dim);

  SubspaceResult res;
  if (args.order) {
    AccelConfig cfg;
    cfg.order = *args.order;
    cfg.tol = args.tol;
    cfg.kmax = args.kmax;
    cfg.expected_dim = dim;
    res = modified_ab_run(pencil, cfg);
  } else {
    res = ab_run(pencil, args.tol, args.kmax, dim);
  }

  Json doc{{"u", matrix_to_json(res.u.basis())},
           {"lambda", matrix_to_json(res.lambda)},
           {"residual", res.residual},
           {"lambda_radius", res.lambda_radius},
           {"status", to_string(res.status)},
           {"iterations", res.iterations},
           {"flow_index", res.flow_index}};
  if (res.breakdown) doc["breakdown"] = breakdown_json(*res.breakdown);
  const fs::path out =
      args.out.empty() ? default_out_dir() / "pencil_result.json" : fs::path(args.out);
  write_atomic(out, doc.dump(2) + "\n");

  std::cerr << "pencil: " << to_string(res.status) << ", dim " << res.u.dim() << ", residual "
            << res.residual << "\n";
  if (res.breakdown) std::cerr << "  " << res.breakdown->what() << "\n";
  return exit_code(res.status);
}

struct BenchArgs {
  std::string kind = "sqrt";
  std::string spectrum;
  std::vector<int> orders{2};
  std::uint64_t seed = 0;
  double cond = 10.0;
  double gamma = 1.0;
  double tol = 1e-12;
  int kmax = 100;
  std::string format = "csv";
  std::string out_dir;
};

/// One job per order; order 1 runs the unaccelerated chain.
int run_bench(const BenchArgs& args) {
  const ExperimentKind kind = args.kind == "sqrt" ? ExperimentKind::kSqrt : ExperimentKind::kPencil;
  ProblemSpec spec;
  spec.spectrum = parse_spectrum(args.spectrum);
  spec.cond = args.cond;
  spec.seed = args.seed;
  const fs::path dir = args.out_dir.empty() ? default_out_dir() : fs::path(args.out_dir);

  struct Job {
    SolverParams params;
    std::future<ExperimentResult> result;
  };
  std::vector<Job> jobs;
  for (int r : args.orders) {
    if (r < 1 || r > 16) throw InvalidArgument("--orders entries must be in [1, 16]");
    SolverParams p;
    p.order = r == 1 ? 2 : r;
    p.plain = r == 1;
    p.gamma = args.gamma;
    p.tol = args.tol;
    p.kmax = args.kmax;
    jobs.push_back(Job{p, std::async(std::launch::async, run_experiment, kind, spec, p)});
  }

  int worst = 0;
  for (std::size_t i = 0; i < jobs.size(); ++i) {
    const ExperimentResult res = jobs[i].result.get();
    const int r = args.orders[i];
    const std::string stem = std::string(to_string(kind)) + "_r" + std::to_string(r);
    fs::path path;
    if (args.format == "json") {
      path = dir / (stem + ".json");
      write_atomic(path, experiment_to_json(kind, spec, jobs[i].params, res).dump(2) + "\n");
    } else {
      path = dir / (stem + ".csv");
      write_atomic(path, trace_to_csv(res.trace));
    }
    const auto order = res.trace.terminal_order();
    std::cerr << "bench r=" << r << ": " << to_string(res.status) << ", " << res.trace.size()
              << " steps, terminal order ";
    if (order) {
      std::cerr << *order;
    } else {
      std::cerr << "n/a";
    }
    std::cerr << " -> " << path.string() << "\n";
    worst = std::max(worst, exit_code(res.status));
  }
  return worst;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"AB-iteration solvers for stable deflating subspaces and matrix square roots"};
  app.require_subcommand(1);

  SqrtArgs sq;
  auto* sqrt_cmd = app.add_subcommand("sqrt", "Principal square root of the matrix in --input");
  sqrt_cmd->add_option("--input", sq.input, "Matrix file (.json or whitespace text)")
      ->required()
      ->check(CLI::ExistingFile);
  sqrt_cmd->add_option("--order", sq.order, "Acceleration order r")
      ->capture_default_str()
      ->check(CLI::Range(2, 16));
  sqrt_cmd->add_option("--gamma", sq.gamma, "Cayley shift")->capture_default_str();
  sqrt_cmd->add_option("--tol", sq.tol, "Relative step tolerance")->capture_default_str();
  sqrt_cmd->add_option("--kmax", sq.kmax, "Maximum outer iterations")->capture_default_str();
  sqrt_cmd->add_option("--out", sq.out, "Result file (JSON)");
  sqrt_cmd->add_option("--trace", sq.trace, "Trace file (.csv or .json)");

  PencilArgs pe;
  auto* pencil_cmd = app.add_subcommand("pencil", "Stable deflating subspace of A - lambda B");
  pencil_cmd->add_option("--a", pe.a, "Matrix A")->required()->check(CLI::ExistingFile);
  pencil_cmd->add_option("--b", pe.b, "Matrix B (identity if omitted)")
      ->check(CLI::ExistingFile);
  pencil_cmd->add_option("--tol", pe.tol, "Subspace distance tolerance")->capture_default_str();
  pencil_cmd->add_option("--kmax", pe.kmax, "Maximum iterations")->capture_default_str();
  pencil_cmd->add_option("--dim", pe.dim, "Expected subspace dimension");
  pencil_cmd->add_option("--order", pe.order, "Use the accelerated iteration of this order")
      ->check(CLI::Range(2, 16));
  pencil_cmd->add_option("--out", pe.out, "Result file (JSON)");

  BenchArgs be;
  auto* bench_cmd = app.add_subcommand("bench", "Convergence traces on generated problems");
  bench_cmd->add_option("--kind", be.kind, "Problem kind")
      ->capture_default_str()
      ->check(CLI::IsMember({"sqrt", "pencil"}));
  bench_cmd->add_option("--spectrum", be.spectrum, "Comma-separated eigenvalues, re or re:im")
      ->required();
  bench_cmd->add_option("--orders", be.orders, "Orders to run (1 = plain chain)")
      ->delimiter(',')
      ->capture_default_str();
  bench_cmd->add_option("--seed", be.seed, "Generator seed")->capture_default_str();
  bench_cmd->add_option("--cond", be.cond, "Condition number of the similarity")
      ->capture_default_str();
  bench_cmd->add_option("--gamma", be.gamma, "Cayley shift (sqrt)")->capture_default_str();
  bench_cmd->add_option("--tol", be.tol, "Stopping tolerance")->capture_default_str();
  bench_cmd->add_option("--kmax", be.kmax, "Maximum outer iterations")->capture_default_str();
  bench_cmd->add_option("--format", be.format, "Trace format")
      ->capture_default_str()
      ->check(CLI::IsMember({"csv", "json"}));
  bench_cmd->add_option("--out-dir", be.out_dir, "Output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (*sqrt_cmd) return run_sqrt(sq);
    if (*pencil_cmd) return run_pencil(pe);
    return run_bench(be);
  } catch (const std::exception& e) {
    std::cerr << "abflow: " << e.what() << "\n";
    return kExitUsage;
  }
}
