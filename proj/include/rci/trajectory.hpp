#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "rci/linalg.hpp"
#include "rci/polytope.hpp"
#include "rci/rng.hpp"

namespace rci {

/// Discrete-time plant x+ = (Σ_j p_j A[j]) x + B u + w with scheduling-affine
/// dynamics. Only used to generate data; the synthesis path never reads it.
struct LpvPlant {
  std::vector<Matrix> A;  // s matrices, n×n
  Matrix B;               // n×m

  Index n() const { return B.rows(); }
  Index m() const { return B.cols(); }
  Index s() const { return static_cast<Index>(A.size()); }

  void validate() const;

  /// Σ_j p_j A[j]
  Matrix dynamics(const Vector& p) const;

  /// Stacked [A¹ … A^s B], the model matrix of the data-generating system.
  Matrix stacked() const;
};

/// State, input, disturbance and scheduling constraint sets:
///   X = {x: H_x x ≤ 1},  U = {u: H_u u ≤ 1},
///   W = {w: −1 ≤ H_w w ≤ 1},  P = conv(scheduling_vertices).
struct ConstraintSets {
  Matrix Hx, Hu, Hw;
  std::vector<Vector> scheduling_vertices;

  Index n() const { return Hx.cols(); }
  Index nx() const { return Hx.rows(); }
  Index nu() const { return Hu.rows(); }
  Index nw() const { return Hw.rows(); }
  Index s() const {
    return scheduling_vertices.empty() ? 0 : scheduling_vertices.front().size();
  }

  /// Checks shapes and that H_w has full column rank (the disturbance set
  /// must be bounded for the admissible model set to be bounded).
  void validate() const;

  PolytopeH disturbance_polytope() const {
    Matrix stacked(2 * Hw.rows(), Hw.cols());
    stacked << Hw, -Hw;
    return PolytopeH::general(stacked, Vector::Ones(2 * Hw.rows()));
  }
};

struct Trajectory {
  std::vector<Vector> states;        // T+1
  std::vector<Vector> inputs;        // T
  std::vector<Vector> scheduling;    // T
  std::vector<Vector> disturbances;  // T or empty

  Index T() const { return static_cast<Index>(inputs.size()); }
  Index n() const { return states.empty() ? 0 : states.front().size(); }
  Index m() const { return inputs.empty() ? 0 : inputs.front().size(); }
  Index s() const { return scheduling.empty() ? 0 : scheduling.front().size(); }

  bool has_disturbances() const { return !disturbances.empty(); }

  /// Length consistency; throws on violation.
  void validate() const;

  /// Keeps the first T steps (T+1 states).
  Trajectory prefix(Index T) const;
};

/// Simulates the plant; scheduling samples must lie in conv(scheduling_vertices).
Trajectory simulate(const LpvPlant& plant, const Vector& x0, const std::vector<Vector>& inputs,
                    const std::vector<Vector>& scheduling, const std::vector<Vector>& disturbances,
                    const std::vector<Vector>& scheduling_vertices, double tol = 1e-9);

struct ExcitationSignals {
  std::vector<Vector> inputs;
  std::vector<Vector> scheduling;
  std::vector<Vector> disturbances;
};

/// Uniform sampling over W = {w: −1 ≤ H_w w ≤ 1}: direct for scaled-identity
/// H_w, otherwise rejection inside the bounding box of the vertex hull.
class DisturbanceSampler {
 public:
  explicit DisturbanceSampler(const Matrix& Hw);
  Vector sample(Rng& rng) const;

 private:
  Vector lo_, hi_;
  bool direct_ = false;
  PolytopeH set_;
};

/// Uniform inputs in the box, flat-Dirichlet scheduling over the vertex hull,
/// uniform disturbances in W; deterministic for a fixed seed.
ExcitationSignals generate_excitation(Index T, const Matrix& input_box,
                                      const std::vector<Vector>& scheduling_vertices,
                                      const Matrix& Hw, std::uint64_t seed);

/// Columnar CSV with header x1..xn,u1..um,p1..ps[,w1..wn]; the final row
/// carries only the terminal state. Round-trips to full precision.
void save_trajectory_csv(const Trajectory& traj, const std::filesystem::path& path);
Trajectory load_trajectory_csv(const std::filesystem::path& path);

struct SystemConfig {
  LpvPlant plant;
  ConstraintSets constraints;
};

/// JSON schema: {"plant": {n,m,s,A,B}, "constraints": {n_x,n_u,n_w,H_x,H_u,H_w,
/// scheduling_vertices}} with matrices as row-major nested arrays.
SystemConfig load_system_json(const std::filesystem::path& path);
void save_system_json(const SystemConfig& cfg, const std::filesystem::path& path);

/// FNV-1a over the canonical text form of the plant matrices.
std::string plant_hash(const LpvPlant& plant);

}  // namespace rci
