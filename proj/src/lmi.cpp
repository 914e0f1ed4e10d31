#include "rci/lmi.hpp"

#include <algorithm>

#include <nlohmann/json.hpp>

namespace rci {

AffineExpr& AffineExpr::operator+=(const AffineExpr& other) {
  constant += other.constant;
  terms.insert(terms.end(), other.terms.begin(), other.terms.end());
  return *this;
}

AffineExpr& AffineExpr::operator-=(const AffineExpr& other) {
  constant -= other.constant;
  for (const auto& [idx, coeff] : other.terms) terms.emplace_back(idx, -coeff);
  return *this;
}

AffineExpr& AffineExpr::operator*=(double k) {
  constant *= k;
  for (auto& [idx, coeff] : terms) coeff *= k;
  return *this;
}

void AffineExpr::normalize() {
  std::sort(terms.begin(), terms.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });
  std::vector<std::pair<Index, double>> merged;
  for (const auto& [idx, coeff] : terms) {
    if (!merged.empty() && merged.back().first == idx)
      merged.back().second += coeff;
    else
      merged.emplace_back(idx, coeff);
  }
  std::erase_if(merged, [](const auto& t) { return t.second == 0.0; });
  terms = std::move(merged);
}

double AffineExpr::eval(const Vector& x) const {
  double v = constant;
  for (const auto& [idx, coeff] : terms) v += coeff * x(idx);
  return v;
}

void PsdBlock::set(Index r, Index c, AffineExpr e) {
  if (r > c || c >= side) throw DimensionError("PsdBlock::set: need row <= col < side");
  e.normalize();
  if (e.is_zero()) return;
  upper.push_back({r, c, std::move(e)});
}

void PsdBlock::normalize() {
  for (auto& e : upper) e.expr.normalize();
  std::sort(upper.begin(), upper.end(), [](const PsdEntry& a, const PsdEntry& b) {
    return std::pair(a.col, a.row) < std::pair(b.col, b.row);
  });
}

Index LmiProgram::add_variable(const std::string& name, Index rows, Index cols, VarKind kind) {
  if (by_name_.count(name)) throw Error("LmiProgram: duplicate variable '" + name + "'");
  VariableInfo info;
  info.name = name;
  info.rows = rows;
  info.cols = cols;
  info.kind = kind;
  info.offset = next_scalar_;
  switch (kind) {
    case VarKind::Full:
      info.count = rows * cols;
      break;
    case VarKind::Symmetric:
      if (rows != cols) throw DimensionError("symmetric variable must be square");
      info.count = rows * (rows + 1) / 2;
      break;
    case VarKind::Diagonal:
      if (rows != cols) throw DimensionError("diagonal variable must be square");
      info.count = rows;
      break;
    case VarKind::Scalar:
      if (rows != 1 || cols != 1) throw DimensionError("scalar variable must be 1×1");
      info.count = 1;
      break;
  }
  next_scalar_ += info.count;
  vars_.push_back(info);
  by_name_[name] = static_cast<Index>(vars_.size()) - 1;
  return static_cast<Index>(vars_.size()) - 1;
}

std::optional<Index> LmiProgram::find_variable(const std::string& name) const {
  auto it = by_name_.find(name);
  if (it == by_name_.end()) return std::nullopt;
  return it->second;
}

Index LmiProgram::scalar_index(Index var, Index r, Index c) const {
  const auto& v = variable(var);
  if (r < 0 || c < 0 || r >= v.rows || c >= v.cols)
    throw DimensionError("scalar_index: entry out of range for '" + v.name + "'");
  switch (v.kind) {
    case VarKind::Full:
      return v.offset + c * v.rows + r;
    case VarKind::Symmetric: {
      const Index rr = std::min(r, c), cc = std::max(r, c);
      return v.offset + cc * (cc + 1) / 2 + rr;
    }
    case VarKind::Diagonal:
      if (r != c) throw DimensionError("scalar_index: off-diagonal of diagonal variable");
      return v.offset + r;
    case VarKind::Scalar:
      return v.offset;
  }
  throw Error("unreachable");
}

AffineExpr LmiProgram::entry(Index var, Index r, Index c) const {
  AffineExpr e;
  e.add(scalar_index(var, r, c), 1.0);
  return e;
}

void LmiProgram::add_linear(std::string name, AffineExpr expr) {
  expr.normalize();
  linear_.push_back({std::move(name), std::move(expr)});
}

PsdBlock& LmiProgram::add_psd_block(std::string name, Index side) {
  PsdBlock b;
  b.name = std::move(name);
  b.side = side;
  psd_.push_back(std::move(b));
  return psd_.back();
}

void LmiProgram::add_nonneg_variable(Index var) {
  const auto& v = variable(var);
  for (Index i = 0; i < v.count; ++i) {
    AffineExpr e;
    e.add(v.offset + i, 1.0);
    add_linear(v.name + ">=0[" + std::to_string(i) + "]", std::move(e));
  }
}

void LmiProgram::set_logdet_objective(Index var) {
  if (variable(var).kind != VarKind::Symmetric)
    throw Error("logdet objective requires a symmetric variable");
  logdet_var_ = var;
}

void LmiProgram::add_linear_objective(const AffineExpr& expr) {
  linear_objective_ += expr;
  linear_objective_.normalize();
}

Matrix LmiProgram::block_value(const PsdBlock& block, const Vector& x) const {
  Matrix out = Matrix::Zero(block.side, block.side);
  for (const auto& e : block.upper) {
    const double v = e.expr.eval(x);
    out(e.row, e.col) = v;
    out(e.col, e.row) = v;
  }
  return out;
}

Matrix LmiProgram::variable_value(Index var, const Vector& x) const {
  const auto& v = variable(var);
  Matrix out(v.rows, v.cols);
  for (Index r = 0; r < v.rows; ++r)
    for (Index c = 0; c < v.cols; ++c) {
      if (v.kind == VarKind::Diagonal && r != c) {
        out(r, c) = 0.0;
        continue;
      }
      out(r, c) = x(scalar_index(var, r, c));
    }
  return out;
}

void LmiProgram::set_value(Index var, const Matrix& value, Vector& x) const {
  const auto& v = variable(var);
  if (value.rows() != v.rows || value.cols() != v.cols)
    throw DimensionError("set_value: shape mismatch for '" + v.name + "'");
  for (Index r = 0; r < v.rows; ++r)
    for (Index c = 0; c < v.cols; ++c) {
      if (v.kind == VarKind::Diagonal && r != c) continue;
      if (v.kind == VarKind::Symmetric && r > c) continue;
      x(scalar_index(var, r, c)) = value(r, c);
    }
}

nlohmann::json LmiProgram::to_json() const {
  nlohmann::json j;
  j["num_scalars"] = num_scalars();
  j["variables"] = nlohmann::json::array();
  for (const auto& v : vars_) {
    const char* kind = v.kind == VarKind::Full        ? "full"
                       : v.kind == VarKind::Symmetric ? "symmetric"
                       : v.kind == VarKind::Diagonal  ? "diagonal"
                                                      : "scalar";
    j["variables"].push_back({{"name", v.name},
                              {"rows", v.rows},
                              {"cols", v.cols},
                              {"kind", kind},
                              {"offset", v.offset},
                              {"count", v.count}});
  }
  auto expr_json = [](const AffineExpr& e) {
    nlohmann::json je;
    je["const"] = e.constant;
    je["terms"] = nlohmann::json::array();
    for (const auto& [idx, coeff] : e.terms) je["terms"].push_back({idx, coeff});
    return je;
  };
  j["linear"] = nlohmann::json::array();
  for (const auto& c : linear_) j["linear"].push_back({{"name", c.name}, {"expr", expr_json(c.expr)}});
  j["psd_blocks"] = nlohmann::json::array();
  for (const auto& b : psd_) {
    nlohmann::json jb;
    jb["name"] = b.name;
    jb["side"] = b.side;
    jb["entries"] = nlohmann::json::array();
    for (const auto& e : b.upper)
      jb["entries"].push_back({{"row", e.row}, {"col", e.col}, {"expr", expr_json(e.expr)}});
    j["psd_blocks"].push_back(jb);
  }
  if (logdet_var_) j["logdet_variable"] = variable(*logdet_var_).name;
  j["linear_objective"] = expr_json(linear_objective_);
  return j;
}

void add_state_constraints(LmiProgram& prog, Index W, const Matrix& Hx,
                           const std::vector<Vector>& theta_vertices) {
  const auto& wv = prog.variable(W);
  const Index n = wv.rows;
  if (Hx.rows() > 0 && Hx.cols() != n) throw DimensionError("add_state_constraints: H_x columns != n");
  for (size_t i = 0; i < theta_vertices.size(); ++i) {
    const Vector& theta = theta_vertices[i];
    for (Index r = 0; r < Hx.rows(); ++r) {
      AffineExpr e;
      e.constant = 1.0;  // 1 − (H_x W θ)_r ≥ 0
      for (Index a = 0; a < n; ++a)
        for (Index b = 0; b < n; ++b) e.add(prog.scalar_index(W, a, b), -Hx(r, a) * theta(b));
      prog.add_linear("state[v" + std::to_string(i) + ",r" + std::to_string(r) + "]", std::move(e));
    }
  }
}

void add_input_constraints(LmiProgram& prog, Index N, const Matrix& Hu,
                           const std::vector<Vector>& theta_vertices,
                           const std::vector<Vector>& p_vertices) {
  const auto& nv = prog.variable(N);
  for (size_t j = 0; j < p_vertices.size(); ++j) {
    for (size_t i = 0; i < theta_vertices.size(); ++i) {
      const Vector pt = kron(p_vertices[j], theta_vertices[i]);
      if (pt.size() != nv.cols) throw DimensionError("add_input_constraints: p⊗θ size != cols(N)");
      for (Index r = 0; r < Hu.rows(); ++r) {
        AffineExpr e;
        e.constant = 1.0;  // 1 − (H_u N (p⊗θ))_r ≥ 0
        for (Index a = 0; a < nv.rows; ++a)
          for (Index c = 0; c < nv.cols; ++c)
            e.add(prog.scalar_index(N, a, c), -Hu(r, a) * pt(c));
        prog.add_linear("input[p" + std::to_string(j) + ",v" + std::to_string(i) + ",r" +
                            std::to_string(r) + "]",
                        std::move(e));
      }
    }
  }
}

AffineMatrix gamma_row(const LmiProgram& prog, Index W, Index N, const Vector& p,
                       const Vector& theta, Index n, Index m, Index s) {
  if (p.size() != s || theta.size() != n) throw DimensionError("gamma_row: vertex size mismatch");
  // c = [I_s⊗W; N](p ⊗ θ): top ns entries are p_l·(Wθ), bottom m are N(p⊗θ).
  std::vector<AffineExpr> c(static_cast<size_t>(n * s + m));
  for (Index l = 0; l < s; ++l)
    for (Index a = 0; a < n; ++a) {
      AffineExpr e;
      for (Index b = 0; b < n; ++b) e.add(prog.scalar_index(W, a, b), p(l) * theta(b));
      c[static_cast<size_t>(l * n + a)] = std::move(e);
    }
  const Vector pt = kron(p, theta);
  for (Index r = 0; r < m; ++r) {
    AffineExpr e;
    for (Index col = 0; col < n * s; ++col) e.add(prog.scalar_index(N, r, col), pt(col));
    c[static_cast<size_t>(n * s + r)] = std::move(e);
  }
  // 𝒢 = cᵀ ⊗ I_n: entry (a, j·n + a) = c_j.
  AffineMatrix g(n, (n * s + m) * n);
  for (Index j = 0; j < n * s + m; ++j)
    for (Index a = 0; a < n; ++a) g(a, j * n + a) = c[static_cast<size_t>(j)];
  for (auto& e : g.entries) e.normalize();
  return g;
}

Vector invariance_row_scales(const DataMatrices& dm) {
  const Index Tnw = dm.T * dm.n_w;
  Vector s = Vector::Ones(Tnw);
  for (Index t = 0; t < Tnw; ++t) {
    double scale = std::max(1.0, std::abs(dm.d(t)));
    if (dm.Z.cols() > 0) scale = std::max(scale, dm.Z.row(t).lpNorm<Eigen::Infinity>());
    s(t) = scale;
  }
  return s;
}

PsdBlock& add_invariance_block(LmiProgram& prog, const DataMatrices& dm, const Matrix& Hw,
                               Index W, Index N, const TripleVars& tv, const Vector& p_vertex,
                               const Vector& theta_vertex, const std::string& name) {
  const Index n = dm.n, D = dm.model_cols() * dm.n;
  const Index o2 = 1, o3 = 1 + D, o4 = 1 + D + n, o5 = 1 + D + 2 * n;
  const Index side = 1 + D + 3 * n;
  const Index Tnw = dm.T * dm.n_w;
  const Vector s = invariance_row_scales(dm);

  PsdBlock& blk = prog.add_psd_block(name, side);

  // (1,1): φ − 1ᵀΛ1 − 1ᵀΓ1 + dᵀΛd, with Λ_t = Λ̃_t/s_t².
  {
    AffineExpr e;
    e.add(prog.scalar_index(tv.phi, 0, 0), 1.0);
    for (Index t = 0; t < Tnw; ++t)
      e.add(prog.scalar_index(tv.Lambda, t, t), (dm.d(t) * dm.d(t) - 1.0) / (s(t) * s(t)));
    for (Index t = 0; t < dm.n_w; ++t) e.add(prog.scalar_index(tv.Gamma, t, t), -1.0);
    blk.set(0, 0, std::move(e));
  }
  // (1,2): −dᵀΛZ
  for (Index col = 0; col < D; ++col) {
    AffineExpr e;
    for (Index t = 0; t < Tnw; ++t)
      e.add(prog.scalar_index(tv.Lambda, t, t), -(dm.d(t) / s(t)) * (dm.Z(t, col) / s(t)));
    blk.set(0, o2 + col, std::move(e));
  }
  // (2,2): ZᵀΛZ
  for (Index r = 0; r < D; ++r)
    for (Index c = r; c < D; ++c) {
      AffineExpr e;
      for (Index t = 0; t < Tnw; ++t)
        e.add(prog.scalar_index(tv.Lambda, t, t), (dm.Z(t, r) / s(t)) * (dm.Z(t, c) / s(t)));
      blk.set(r + o2, c + o2, std::move(e));
    }
  // (2,4): 𝒢ᵀ
  const AffineMatrix g = gamma_row(prog, W, N, p_vertex, theta_vertex, dm.n, dm.m, dm.s);
  for (Index r = 0; r < D; ++r)
    for (Index c = 0; c < n; ++c) blk.set(o2 + r, o4 + c, g(c, r));
  // (3,3): H_wᵀΓH_w
  for (Index r = 0; r < n; ++r)
    for (Index c = r; c < n; ++c) {
      AffineExpr e;
      for (Index t = 0; t < dm.n_w; ++t)
        e.add(prog.scalar_index(tv.Gamma, t, t), Hw(t, r) * Hw(t, c));
      blk.set(o3 + r, o3 + c, std::move(e));
    }
  // (3,4): I_n
  for (Index r = 0; r < n; ++r) {
    AffineExpr e;
    e.constant = 1.0;
    blk.set(o3 + r, o4 + r, std::move(e));
  }
  // (4,4): V + Vᵀ
  for (Index r = 0; r < n; ++r)
    for (Index c = r; c < n; ++c) {
      AffineExpr e;
      e.add(prog.scalar_index(tv.V, r, c), 1.0);
      e.add(prog.scalar_index(tv.V, c, r), 1.0);
      blk.set(o4 + r, o4 + c, std::move(e));
    }
  // (4,5): Vᵀ
  for (Index r = 0; r < n; ++r)
    for (Index c = 0; c < n; ++c) blk.set(o4 + r, o5 + c, prog.entry(tv.V, c, r));
  // (5,5): X
  for (Index r = 0; r < n; ++r)
    for (Index c = r; c < n; ++c) blk.set(o5 + r, o5 + c, prog.entry(tv.X, r, c));

  blk.normalize();
  return blk;
}

PsdBlock& add_w_coupling_block_theorem(LmiProgram& prog, Index W, const TripleVars& tv,
                                       const Matrix& C, Index k, const std::string& name) {
  const Index n = prog.variable(W).rows;
  if (k < 0 || k >= C.rows()) throw Error("add_w_coupling_block_theorem: row index out of range");
  PsdBlock& blk = prog.add_psd_block(name, n + 1);
  for (Index r = 0; r < n; ++r)
    for (Index c = r; c < n; ++c) {
      AffineExpr e;
      e.add(prog.scalar_index(W, c, r), 1.0);
      e.add(prog.scalar_index(W, r, c), 1.0);
      e.add(prog.scalar_index(tv.X, r, c), -1.0);
      blk.set(r, c, std::move(e));
    }
  for (Index r = 0; r < n; ++r) {
    AffineExpr e;
    e.add(prog.scalar_index(tv.phi, 0, 0), C(k, r));
    blk.set(r, n, std::move(e));
  }
  blk.set(n, n, prog.entry(tv.phi, 0, 0));
  blk.normalize();
  return blk;
}

PsdBlock& add_w_coupling_block_iter(LmiProgram& prog, Index W, const TripleVars& tv,
                                    const Matrix& C, Index k, const Matrix& Zq,
                                    const std::string& name) {
  const Index n = prog.variable(W).rows;
  if (k < 0 || k >= C.rows()) throw Error("add_w_coupling_block_iter: row index out of range");
  if (Zq.rows() != n || Zq.cols() != n)
    throw DimensionError("add_w_coupling_block_iter: Z_q must be n×n");
  PsdBlock& blk = prog.add_psd_block(name, n + 1);
  // (1,1): WᵀZ_q + Z_qᵀW − Z_qᵀX Z_q
  for (Index r = 0; r < n; ++r)
    for (Index c = r; c < n; ++c) {
      AffineExpr e;
      for (Index a = 0; a < n; ++a) {
        e.add(prog.scalar_index(W, a, r), Zq(a, c));
        e.add(prog.scalar_index(W, a, c), Zq(a, r));
      }
      for (Index a = 0; a < n; ++a)
        for (Index b = 0; b < n; ++b)
          e.add(prog.scalar_index(tv.X, a, b), -Zq(a, r) * Zq(b, c));
      blk.set(r, c, std::move(e));
    }
  for (Index r = 0; r < n; ++r) {
    AffineExpr e;
    e.add(prog.scalar_index(tv.phi, 0, 0), C(k, r));
    blk.set(r, n, std::move(e));
  }
  blk.set(n, n, prog.entry(tv.phi, 0, 0));
  blk.normalize();
  return blk;
}

void add_volume_step_constraint(LmiProgram& prog, Index W, Index Wobj, const Matrix& Wq,
                                double epsilon) {
  const Index n = prog.variable(W).rows;
  if (Wq.rows() != n || Wq.cols() != n)
    throw DimensionError("add_volume_step_constraint: W_q must be n×n");
  Eigen::FullPivLU<Matrix> lu(Wq);
  lu.setThreshold(1e-12);
  if (!lu.isInvertible()) throw Error("add_volume_step_constraint: W_q is singular");

  const Matrix wqtwq = Wq.transpose() * Wq;
  PsdBlock& step = prog.add_psd_block("volume_step", n);
  for (Index r = 0; r < n; ++r)
    for (Index c = r; c < n; ++c) {
      AffineExpr e;
      e.constant = -wqtwq(r, c);
      for (Index a = 0; a < n; ++a) {
        e.add(prog.scalar_index(W, a, r), Wq(a, c));
        e.add(prog.scalar_index(W, a, c), Wq(a, r));
      }
      e.add(prog.scalar_index(Wobj, r, c), -1.0);
      step.set(r, c, std::move(e));
    }
  step.normalize();

  PsdBlock& pos = prog.add_psd_block("wobj_margin", n);
  for (Index r = 0; r < n; ++r)
    for (Index c = r; c < n; ++c) {
      AffineExpr e;
      e.add(prog.scalar_index(Wobj, r, c), 1.0);
      if (r == c) e.constant = -epsilon;
      pos.set(r, c, std::move(e));
    }
  pos.normalize();
}

namespace {

/// Shifts the block constraint to B(x) − δI ⪰ 0.
void apply_psd_margin(PsdBlock& blk, double margin) {
  if (margin == 0.0) return;
  for (Index r = 0; r < blk.side; ++r) {
    bool found = false;
    for (auto& e : blk.upper)
      if (e.row == r && e.col == r) {
        e.expr.constant -= margin;
        found = true;
        break;
      }
    if (!found) {
      AffineExpr e;
      e.constant = -margin;
      blk.upper.push_back({r, r, std::move(e)});
    }
  }
  blk.normalize();
}

}  // namespace

SynthesisProgram build_iteration_program(const DataMatrices& dm, const ConstraintSets& constraints,
                                         const Matrix& C, const std::vector<Vector>& theta_vertices,
                                         const IterationPoint& iter, const LmiOptions& options) {
  const Index n = dm.n, m = dm.m, s = dm.s;
  if (C.cols() != n) throw DimensionError("build_iteration_program: C columns != n");
  if (iter.W.rows() != n || iter.W.cols() != n)
    throw DimensionError("build_iteration_program: W_q must be n×n");

  SynthesisProgram sp;
  sp.indexer = {static_cast<Index>(theta_vertices.size()),
                static_cast<Index>(constraints.scheduling_vertices.size()), C.rows()};
  if (static_cast<Index>(iter.X.size()) != sp.indexer.count())
    throw DimensionError("build_iteration_program: one X_q per (i,j,k) triple required");

  LmiProgram& prog = sp.program;
  sp.vars.W = prog.add_variable("W", n, n, VarKind::Full);
  sp.vars.N = prog.add_variable("N", m, n * s, VarKind::Full);
  sp.vars.Wobj = prog.add_variable("W_obj", n, n, VarKind::Symmetric);

  add_state_constraints(prog, sp.vars.W, constraints.Hx, theta_vertices);
  add_input_constraints(prog, sp.vars.N, constraints.Hu, theta_vertices,
                        constraints.scheduling_vertices);

  const Index Tnw = dm.T * dm.n_w;
  sp.vars.triples.resize(static_cast<size_t>(sp.indexer.count()));
  for (Index i = 0; i < sp.indexer.two_sigma; ++i)
    for (Index j = 0; j < sp.indexer.v_p; ++j)
      for (Index k = 0; k < sp.indexer.n_c; ++k) {
        const Index f = sp.indexer.flat(i, j, k);
        const std::string sfx = "[" + std::to_string(i + 1) + "," + std::to_string(j + 1) + "," +
                                std::to_string(k + 1) + "]";
        TripleVars tv;
        tv.X = prog.add_variable("X" + sfx, n, n, VarKind::Symmetric);
        tv.V = prog.add_variable("V" + sfx, n, n, VarKind::Full);
        tv.phi = prog.add_variable("phi" + sfx, 1, 1, VarKind::Scalar);
        tv.Lambda = prog.add_variable("Lambda" + sfx, Tnw, Tnw, VarKind::Diagonal);
        tv.Gamma = prog.add_variable("Gamma" + sfx, dm.n_w, dm.n_w, VarKind::Diagonal);
        prog.add_nonneg_variable(tv.phi);
        prog.add_nonneg_variable(tv.Lambda);
        prog.add_nonneg_variable(tv.Gamma);
        sp.vars.triples[static_cast<size_t>(f)] = tv;

        auto& inv = add_invariance_block(prog, dm, constraints.Hw, sp.vars.W, sp.vars.N, tv,
                                         constraints.scheduling_vertices[static_cast<size_t>(j)],
                                         theta_vertices[static_cast<size_t>(i)], "invariance" + sfx);
        apply_psd_margin(inv, options.psd_margin);

        const Matrix& Xq = iter.X[static_cast<size_t>(f)];
        const Matrix Zq = Xq.llt().solve(iter.W);
        auto& cpl = add_w_coupling_block_iter(prog, sp.vars.W, tv, C, k, Zq, "coupling" + sfx);
        apply_psd_margin(cpl, options.psd_margin);
      }

  add_volume_step_constraint(prog, sp.vars.W, sp.vars.Wobj, iter.W, options.epsilon);
  prog.set_logdet_objective(sp.vars.Wobj);

  sp.stats.exact_variable_total = prog.num_scalars();
  sp.stats.paper_formula_total = 3 * n * n + m * n * s + (dm.T + 1) * dm.n_w + 1;
  sp.stats.num_triples = sp.indexer.count();
  sp.stats.num_psd_blocks = static_cast<Index>(prog.psd_blocks().size());
  sp.stats.num_linear = static_cast<Index>(prog.linear_constraints().size());
  sp.stats.invariance_block_side = 1 + dm.model_cols() * n + 3 * n;
  sp.stats.coupling_block_side = n + 1;
  return sp;
}

}  // namespace rci
