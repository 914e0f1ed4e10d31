#pragma once

#include <cstdint>

#include <nlohmann/json_fwd.hpp>

#include "rci/synthesis.hpp"

namespace rci {

/// One-step successor in Θ-coordinates: θ⁺ = W⁻¹(M·[I_s⊗W; N](p⊗θ) + w).
Vector theta_successor(const Matrix& W, const Matrix& N, const Matrix& M, const Vector& p,
                       const Vector& theta, const Vector& w);

/// Scheduled gain K(p) = Σ_l p_l K^l.
Matrix gain_at(const std::vector<Matrix>& K, const Vector& p);

struct ContainmentReport {
  double max_state = 0.0;  // max_i max_r (H_x W θⁱ)_r
  double max_input = 0.0;  // max_{i,j} max_r (H_u N (pʲ⊗θⁱ))_r
  Index worst_state_vertex = -1, worst_state_row = -1;
  Index worst_input_vertex = -1, worst_input_pvertex = -1, worst_input_row = -1;
  bool pass = false;
  double tol = 0.0;
};

ContainmentReport check_containment(const SynthesisResult& result, const ConstraintSets& constraints,
                                    double tol = 1e-7);

/// Finite invariance certificate against the true model: every Θ-vertex ×
/// scheduling-vertex × disturbance-vertex successor must stay in Θ. The
/// successor is affine in w, so checking the vertices of W covers all of it.
struct VertexInvarianceReport {
  double worst_norm = 0.0;  // max ‖C θ⁺‖∞ over the finite check
  Index checks = 0;
  Index violations = 0;
  bool pass = false;
  double tol = 0.0;
};

VertexInvarianceReport vertex_invariance_check(const SynthesisResult& result, const LpvPlant& plant,
                                               const ConstraintSets& constraints, double tol = 1e-6);

enum class ModelMode { TrueModel, SampledModel };

struct MonteCarloConfig {
  Index trials = 500;
  Index horizon = 50;
  std::uint64_t seed = 0;
  ModelMode mode = ModelMode::TrueModel;
  bool random_boundary = false;  // random ∂S points instead of cycling vertices
  double tol = 1e-6;
  Index burn_in = 1000;  // hit-and-run burn-in for sampled models
};

struct MonteCarloStats {
  Index trials = 0, horizon = 0;
  double max_norm = 0.0;  // max over trials/steps of ‖C W⁻¹ x‖∞
  Index violations = 0;   // trials leaving (1 + tol)·Θ
  std::vector<double> per_trial_max;
  std::uint64_t seed = 0;
  bool pass = false;
  nlohmann::json to_json() const;
};

/// Closed-loop falsification runs with u = K(p)x from set-boundary initial
/// states; in SampledModel mode each trial uses a fresh admissible model.
MonteCarloStats monte_carlo_invariance(const SynthesisResult& result, const LpvPlant& plant,
                                       const DataMatrices& dm, const ConstraintSets& constraints,
                                       const MonteCarloConfig& config);

/// Executable check of the vertex-decomposition argument: the successor of a
/// convex combination equals the matched convex combination of vertex
/// successors.
struct Lemma2Report {
  Index samples = 0;
  double max_error = 0.0;
  bool pass = false;
  double tol = 0.0;
};

Lemma2Report lemma2_consistency(const SynthesisResult& result, const LpvPlant& plant,
                                const ConstraintSets& constraints, Index samples,
                                std::uint64_t seed, double tol = 1e-9);

/// Chebyshev center of the admissible model set (an LP through the conic
/// backend); throws when the set is empty or unbounded.
Matrix chebyshev_center(const DataMatrices& dm, const SolverOptions& options);

/// Hit-and-run samples from the admissible model set, each validated by the
/// membership test before being returned.
std::vector<Matrix> sample_admissible_models(const DataMatrices& dm, Index count,
                                             std::uint64_t seed, const SolverOptions& options,
                                             Index burn_in = 1000);

struct StudyConfig {
  SynthesisConfig synthesis;
  Matrix input_box;  // m×2 excitation bounds
  Vector x0;
};

struct VolumeVsTRow {
  Index T = 0;
  double volume = 0.0;
  bool feasible = false;
  bool informative = false;
  Index rank_xpu = 0;
  std::string status;
};

struct VolumeVsTTable {
  std::vector<VolumeVsTRow> rows;
  bool trend_nondecreasing = false;  // within 5% slack, over feasible rows
};

/// Synthesizes on nested prefixes of one generated trajectory; the admissible
/// model set shrinks with T, so volumes should not decrease.
VolumeVsTTable volume_vs_T(const LpvPlant& plant, const std::vector<Index>& T_list,
                           const StudyConfig& cfg, std::uint64_t seed);

}  // namespace rci
