#pragma once

#include <string>

#include <nlohmann/json_fwd.hpp>

#include "rci/trajectory.hpp"

namespace rci {

/// Data matrices of one measured trajectory together with the vectorized
/// admissible-model-set description
///   M_T = { M : −1 + d ≤ Z·vec(M) ≤ 1 + d },
/// where Z = Xpuᵀ ⊗ H_w and d stacks H_w x_{k+1}.
struct DataMatrices {
  Matrix Xplus;  // n × T, columns x_2 … x_{T+1}
  Matrix Xpu;    // (ns+m) × T, columns [p_k ⊗ x_k; u_k]
  Matrix Z;      // T·n_w × (ns+m)·n
  Vector d;      // T·n_w
  Index T = 0, n = 0, m = 0, s = 0, n_w = 0;

  Index model_cols() const { return n * s + m; }  // ns + m
};

DataMatrices build_data_matrices(const Trajectory& traj, const ConstraintSets& constraints);

/// Self-test of the Kronecker identity (Cᵀ ⊗ A)·vec(B) = vec(ABC) against a
/// fourth matrix D; true when D matches ABC through both routes within tol.
bool vectorize_check(const Matrix& A, const Matrix& B, const Matrix& C, const Matrix& D,
                     double tol = 1e-10);

struct InformativityReport {
  Index rank_xpu = 0;
  Index required_rank = 0;  // ns + m
  Index rank_hw = 0;
  Index state_dim = 0;
  bool hw_full_column_rank = false;
  bool bounded = false;  // admissible model set is a bounded polyhedron
  double sigma_max = 0.0;
  double rank_tol = 0.0;

  nlohmann::json to_json() const;
};

/// Rank test on Xpu plus the column-rank test on H_w; together they decide
/// boundedness of the admissible model set.
InformativityReport informativity(const DataMatrices& dm, const ConstraintSets& constraints,
                                  double rank_rel_tol = 1e-8);

struct MembershipResult {
  bool inside = false;
  bool degenerate = false;   // T = 0: vacuously inside
  double max_violation = 0.0;

  explicit operator bool() const { return inside; }
};

/// Tests −1 + d ≤ Z·vec(M) ≤ 1 + d within tol.
MembershipResult membership(const DataMatrices& dm, const Matrix& M, double tol = 1e-9);

}  // namespace rci
