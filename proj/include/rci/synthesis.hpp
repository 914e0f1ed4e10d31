#pragma once

#include <nlohmann/json_fwd.hpp>

#include "rci/solver.hpp"

namespace rci {

struct SynthesisConfig {
  Matrix C;  // n_c × n band matrix of Θ
  ConstraintSets constraints;
  int max_iters = 5;
  double rel_vol_tol = 1e-3;   // stop when the relative volume gain drops below
  double epsilon = 1e-8;       // strict-inequality margin
  double alpha_cap = 1e3;      // initial scaling bound when H_x leaves W free
  bool allow_uninformative = false;
  SolverOptions solver;
};

struct IterationLog {
  int q = 0;
  SolveStatus status = SolveStatus::numerical_failure;
  double objective = 0.0;
  double volume = 0.0;
  double certificate_min_eig = 0.0;
  double solve_time = 0.0;
  int solver_iterations = 0;
  std::string note;
};

struct SynthesisResult {
  bool feasible = false;
  Matrix W, N;
  std::vector<Matrix> K;  // one m×n gain per scheduling coordinate
  std::vector<double> volume_history;
  std::vector<IterationLog> iterations;
  InformativityReport informativity;
  std::vector<Vector> theta_vertices;
  Matrix C;
  ProgramStats stats;
  std::string message;

  double volume() const { return volume_history.empty() ? 0.0 : volume_history.back(); }
  std::vector<Vector> s_vertices() const;
  nlohmann::json to_json() const;
};

/// Initial linearization point: W⁰ = α·I with α the largest scale keeping
/// H_x·(αI)·θⁱ ≤ 1 at every vertex (capped when unconstrained), X⁰ = I per
/// triple, so Z⁰ = W⁰.
IterationPoint init_iteration(const SynthesisConfig& cfg, const std::vector<Vector>& theta_vertices);

/// K^l = N^l W⁻¹ per scheduling coordinate.
std::vector<Matrix> extract_gains(const Matrix& W, const Matrix& N, Index s);

/// Iterative determinant maximization: assembles and solves the iteration SDP
/// until max_iters or stalls, certifying every accepted iterate.
SynthesisResult synthesize(const DataMatrices& dm, const SynthesisConfig& cfg);

}  // namespace rci
