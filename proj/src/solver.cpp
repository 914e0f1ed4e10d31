#include "rci/solver.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>

namespace rci {

SolveResult solve_clarabel(const LmiProgram& prog, const SolverOptions& options);

std::string to_string(SolveStatus status) {
  switch (status) {
    case SolveStatus::optimal: return "optimal";
    case SolveStatus::near_optimal: return "near-optimal";
    case SolveStatus::infeasible: return "infeasible";
    case SolveStatus::unbounded: return "unbounded";
    case SolveStatus::numerical_failure: return "numerical-failure";
  }
  return "unknown";
}

std::string SolverOptions::resolved_backend() const {
  if (!backend.empty()) return backend;
  if (const char* env = std::getenv("RCI_SOLVER"); env && *env) return env;
  return "clarabel";
}

namespace {

SolveResult solve_sdpa_files(const LmiProgram& prog, const SolverOptions& options) {
  namespace fs = std::filesystem;
  if (options.exchange_dir.empty())
    throw Error("sdpa-files backend requires SolverOptions::exchange_dir");
  fs::create_directories(options.exchange_dir);
  const fs::path base = fs::path(options.exchange_dir) / options.program_name;
  const fs::path problem = base.string() + ".dat-s";
  write_sdpa_file(prog, problem.string(), options.program_name);

  for (const char* ext : {".result", ".sol", ".out"}) {
    const fs::path candidate = base.string() + ext;
    if (fs::exists(candidate)) {
      SolveResult res;
      res.backend = "sdpa-files";
      res.x = read_sdpa_solution_file(candidate.string(), prog.num_scalars());
      // Imported points carry no solver certificate; the caller must gate on
      // verify_solution before using them.
      res.status = SolveStatus::near_optimal;
      res.objective = prog.linear_objective().eval(res.x);
      res.message = "imported from " + candidate.string();
      for (Index v = 0; v < prog.num_variables(); ++v)
        res.assignments[prog.variable(v).name] = prog.variable_value(v, res.x);
      return res;
    }
  }
  throw Error("sdpa-files backend: exported " + problem.string() +
              "; run an SDPA solver externally and place the primal point at " + base.string() +
              ".result (xVec or bare numbers), then re-run");
}

}  // namespace

SolveResult solve(const LmiProgram& program, const SolverOptions& options) {
  const std::string backend = options.resolved_backend();
  if (backend == "clarabel") return solve_clarabel(program, options);
  if (backend == "sdpa-files") return solve_sdpa_files(program, options);
  throw Error("unknown solver backend '" + backend + "' (available: clarabel, sdpa-files)");
}

CertificateReport verify_solution(const LmiProgram& program, const SolveResult& result,
                                  double feas_tol) {
  if (result.x.size() != program.num_scalars())
    throw Error("verify_solution: result does not carry assignments for this program");
  CertificateReport rep;
  rep.feas_tol = feas_tol;
  for (const auto& blk : program.psd_blocks()) {
    const double mineig = min_eigenvalue(program.block_value(blk, result.x));
    rep.blocks.push_back({blk.name, mineig});
    if (rep.blocks.size() == 1 || mineig < rep.min_eigenvalue) {
      rep.min_eigenvalue = mineig;
      rep.worst_block = blk.name;
    }
  }
  for (const auto& lin : program.linear_constraints()) {
    const double violation = std::max(0.0, -lin.expr.eval(result.x));
    if (violation > rep.max_linear_violation) {
      rep.max_linear_violation = violation;
      rep.worst_linear = lin.name;
    }
  }
  rep.pass = rep.min_eigenvalue >= -feas_tol && rep.max_linear_violation <= feas_tol;
  return rep;
}

}  // namespace rci
