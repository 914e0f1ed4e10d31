#pragma once

#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "rci/lmi.hpp"

namespace rci {

enum class SolveStatus { optimal, near_optimal, infeasible, unbounded, numerical_failure };

std::string to_string(SolveStatus status);

struct SolverOptions {
  std::string backend;          // empty: $RCI_SOLVER or "clarabel"
  double feas_tol = 1e-6;       // certificate tolerance (verify_solution)
  double gap_tol = 1e-8;        // interior-point duality-gap tolerance
  double solver_feas_tol = 1e-8;
  int max_iter = 200;
  double time_limit = 0.0;      // seconds; 0 = unlimited
  bool verbose = false;
  std::string exchange_dir;     // sdpa-files backend working directory
  std::string program_name = "program";

  std::string resolved_backend() const;
};

struct SolveResult {
  SolveStatus status = SolveStatus::numerical_failure;
  double objective = 0.0;  // maximized objective (log det + linear) at the returned point
  double solve_time = 0.0;
  int iterations = 0;
  Vector x;  // program scalars
  std::map<std::string, Matrix> assignments;
  std::string backend;
  std::string message;
};

/// Solves the program with the configured backend. Unknown backend names
/// throw; solver-side failures are reported through `status`.
SolveResult solve(const LmiProgram& program, const SolverOptions& options);

struct BlockCertificate {
  std::string name;
  double min_eigenvalue = 0.0;
};

/// Re-evaluates every constraint of the program at the returned point. Never
/// reads solver residuals; everything is recomputed from raw program data.
struct CertificateReport {
  std::vector<BlockCertificate> blocks;
  double min_eigenvalue = 0.0;        // over all PSD blocks
  double max_linear_violation = 0.0;  // max(0, −expr)
  std::string worst_block;
  std::string worst_linear;
  double feas_tol = 0.0;
  bool pass = true;
};

CertificateReport verify_solution(const LmiProgram& program, const SolveResult& result,
                                  double feas_tol);

/// SDPA sparse format (.dat-s), 1-based block indices. The log-det objective
/// is exported as its trace surrogate since the format is linear.
void write_sdpa(const LmiProgram& program, std::ostream& out, const std::string& name);
void write_sdpa_file(const LmiProgram& program, const std::string& path, const std::string& name);

/// Reads a primal point for the exported variables: either an SDPA-style
/// "xVec = {…}" section or a bare whitespace-separated list of numbers.
Vector read_sdpa_solution(std::istream& in, Index expected);
Vector read_sdpa_solution_file(const std::string& path, Index expected);

}  // namespace rci
