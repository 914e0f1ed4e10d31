#pragma once

#include <deque>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "rci/datamatrices.hpp"

namespace rci {

enum class VarKind { Full, Symmetric, Diagonal, Scalar };

struct VariableInfo {
  std::string name;
  Index rows = 0, cols = 0;
  VarKind kind = VarKind::Scalar;
  Index offset = 0;  // first scalar slot
  Index count = 0;   // number of scalar slots
};

/// Affine scalar expression c + Σ coeff_i · x_i over program scalars.
struct AffineExpr {
  double constant = 0.0;
  std::vector<std::pair<Index, double>> terms;

  AffineExpr& add(Index scalar, double coeff) {
    if (coeff != 0.0) terms.emplace_back(scalar, coeff);
    return *this;
  }
  AffineExpr& operator+=(const AffineExpr& other);
  AffineExpr& operator-=(const AffineExpr& other);
  AffineExpr& operator*=(double k);

  /// Sorts by scalar index, merges duplicates, drops exact zeros.
  void normalize();
  double eval(const Vector& x) const;
  bool is_zero() const { return constant == 0.0 && terms.empty(); }

  friend bool operator==(const AffineExpr&, const AffineExpr&) = default;
};

struct PsdEntry {
  Index row = 0, col = 0;  // row <= col
  AffineExpr expr;
};

/// Symmetric affine matrix constrained PSD; only the upper triangle is stored
/// and the lower half mirrors it on evaluation.
struct PsdBlock {
  std::string name;
  Index side = 0;
  std::vector<PsdEntry> upper;

  void set(Index r, Index c, AffineExpr e);
  void normalize();
};

struct LinearConstraint {
  std::string name;
  AffineExpr expr;  // expr(x) >= 0
};

/// Solver-agnostic conic program: named structured matrix variables, scalar
/// linear inequalities, PSD blocks, and a "maximize linear + log det(V)"
/// objective.
class LmiProgram {
 public:
  Index add_variable(const std::string& name, Index rows, Index cols, VarKind kind);
  Index num_variables() const { return static_cast<Index>(vars_.size()); }
  Index num_scalars() const { return next_scalar_; }
  const VariableInfo& variable(Index id) const { return vars_.at(static_cast<size_t>(id)); }
  std::optional<Index> find_variable(const std::string& name) const;

  /// Canonical scalar slot of entry (r, c); symmetric variables share slots
  /// across the diagonal, diagonal variables only expose r == c.
  Index scalar_index(Index var, Index r, Index c) const;
  AffineExpr entry(Index var, Index r, Index c) const;

  void add_linear(std::string name, AffineExpr expr);
  PsdBlock& add_psd_block(std::string name, Index side);
  void add_nonneg_variable(Index var);  // every scalar of var >= 0

  void set_logdet_objective(Index var);
  void add_linear_objective(const AffineExpr& expr);

  const std::vector<LinearConstraint>& linear_constraints() const { return linear_; }
  const std::deque<PsdBlock>& psd_blocks() const { return psd_; }
  const std::vector<VariableInfo>& variables() const { return vars_; }
  std::optional<Index> logdet_variable() const { return logdet_var_; }
  const AffineExpr& linear_objective() const { return linear_objective_; }

  Matrix block_value(const PsdBlock& block, const Vector& x) const;
  Matrix variable_value(Index var, const Vector& x) const;
  /// Writes a (structure-respecting) matrix value into the scalar vector.
  void set_value(Index var, const Matrix& value, Vector& x) const;

  nlohmann::json to_json() const;

 private:
  std::vector<VariableInfo> vars_;
  std::map<std::string, Index> by_name_;
  std::vector<LinearConstraint> linear_;
  std::deque<PsdBlock> psd_;  // deque: references stay valid across adds
  std::optional<Index> logdet_var_;
  AffineExpr linear_objective_;
  Index next_scalar_ = 0;
};

/// Decision-variable handles of one synthesis iteration program.
struct TripleVars {
  Index X = -1, V = -1, phi = -1, Lambda = -1, Gamma = -1;
};

struct SynthesisVars {
  Index W = -1, N = -1, Wobj = -1;
  std::vector<TripleVars> triples;  // indexed by TripleIndexer
};

/// Flattening of (i, j, k) with i over 2σ Θ-vertices, j over v_p scheduling
/// vertices, k over the n_c rows of C.
struct TripleIndexer {
  Index two_sigma = 0, v_p = 0, n_c = 0;
  Index count() const { return two_sigma * v_p * n_c; }
  Index flat(Index i, Index j, Index k) const { return (i * v_p + j) * n_c + k; }
};

/// Dense grid of affine entries (used for the n × (ns+m)n matrix 𝒢).
struct AffineMatrix {
  Index rows = 0, cols = 0;
  std::vector<AffineExpr> entries;  // row-major

  AffineMatrix() = default;
  AffineMatrix(Index r, Index c) : rows(r), cols(c), entries(static_cast<size_t>(r * c)) {}
  AffineExpr& operator()(Index r, Index c) { return entries[static_cast<size_t>(r * cols + c)]; }
  const AffineExpr& operator()(Index r, Index c) const {
    return entries[static_cast<size_t>(r * cols + c)];
  }
};

/// H_x W θⁱ ≤ 1 rows for every Θ-vertex; linear in W.
void add_state_constraints(LmiProgram& prog, Index W, const Matrix& Hx,
                           const std::vector<Vector>& theta_vertices);

/// H_u N (pʲ ⊗ θⁱ) ≤ 1 rows for every vertex pair; linear in N.
void add_input_constraints(LmiProgram& prog, Index N, const Matrix& Hu,
                           const std::vector<Vector>& theta_vertices,
                           const std::vector<Vector>& p_vertices);

/// 𝒢(W, N, p, θ) = ([I_s⊗W; N](p ⊗ θ))ᵀ ⊗ I_n, affine in (W, N);
/// maps vec(M) to the closed-loop successor image M [I_s⊗W; N](p⊗θ).
AffineMatrix gamma_row(const LmiProgram& prog, Index W, Index N, const Vector& p,
                       const Vector& theta, Index n, Index m, Index s);

/// Per-row scales s_t = max(1, |d_t|, ‖Z_t‖∞) used to renormalize the data
/// rows inside the invariance block.
Vector invariance_row_scales(const DataMatrices& dm);

/// The large data-dependent invariance block (5×5 block structure, side
/// 1 + (ns+m)n + 3n) for one (θⁱ, pʲ, k) triple.
///
/// The Λ variable holds the s²-scaled multipliers Λ̃_t = s_t²·Λ_t: the row
/// (1 + d_t − Z_t v)Λ_t(1 − d_t + Z_t v) is assembled from the renormalized
/// data (Z_t/s_t, d_t/s_t, 1/s_t), which keeps every coefficient O(1) no
/// matter how large the trajectory grew. The substitution is bijective, so
/// the constraint set and the block values are unchanged.
PsdBlock& add_invariance_block(LmiProgram& prog, const DataMatrices& dm, const Matrix& Hw,
                               Index W, Index N, const TripleVars& tv, const Vector& p_vertex,
                               const Vector& theta_vertex, const std::string& name);

/// [[Wᵀ+W−X, φCᵀe_k],[φe_kᵀC, φ]] ⪰ 0 — the fixed-point coupling condition.
PsdBlock& add_w_coupling_block_theorem(LmiProgram& prog, Index W, const TripleVars& tv,
                                       const Matrix& C, Index k, const std::string& name);

/// Iteration form with linearization point Z_q = X_q⁻¹W_q; reduces to the
/// theorem form at Z_q = I.
PsdBlock& add_w_coupling_block_iter(LmiProgram& prog, Index W, const TripleVars& tv,
                                    const Matrix& C, Index k, const Matrix& Zq,
                                    const std::string& name);

/// WᵀW_q + W_qᵀW − W_qᵀW_q ⪰ W_obj and W_obj ⪰ εI.
void add_volume_step_constraint(LmiProgram& prog, Index W, Index Wobj, const Matrix& Wq,
                                double epsilon);

struct ProgramStats {
  Index exact_variable_total = 0;
  Index paper_formula_total = 0;  // 3n² + mns + (T+1)n_w + 1 (per-triple family counted once)
  Index num_triples = 0;
  Index num_psd_blocks = 0;
  Index num_linear = 0;
  Index invariance_block_side = 0;
  Index coupling_block_side = 0;
};

struct SynthesisProgram {
  LmiProgram program;
  SynthesisVars vars;
  TripleIndexer indexer;
  ProgramStats stats;
};

/// Linearization state carried across Algorithm-1 iterations.
struct IterationPoint {
  Matrix W;                // W_q
  std::vector<Matrix> X;   // X_q per triple (TripleIndexer order)
  int q = 0;
  double volume = 0.0;
};

struct LmiOptions {
  double epsilon = 1e-8;     // margin replacing strict inequalities
  double psd_margin = 0.0;   // require the per-triple blocks ⪰ margin·I;
                             // used to buy certificate headroom on large,
                             // degenerate instances
};

/// Assembles the full iteration-q SDP: state/input vertex constraints, the
/// per-triple invariance and coupling blocks at linearization point
/// Z_q = X_q⁻¹W_q, the volume step, and the log det(W_obj) objective.
SynthesisProgram build_iteration_program(const DataMatrices& dm, const ConstraintSets& constraints,
                                         const Matrix& C, const std::vector<Vector>& theta_vertices,
                                         const IterationPoint& iter, const LmiOptions& options = {});

}  // namespace rci
