#include <cmath>
#include <cstdint>
#include <cstdlib>

#include <Eigen/Sparse>

#include "rci/solver.hpp"

extern "C" int rci_clarabel_solve(
    std::int64_t n, std::int64_t m, const std::int64_t* colptr, const std::int64_t* rowval,
    const double* nzval, std::int64_t nnz, const double* q, const double* b,
    const std::int32_t* cone_tags, const std::int64_t* cone_dims, std::int64_t n_cones,
    std::int64_t max_iter, double time_limit_secs, double tol_gap_abs, double tol_gap_rel,
    double tol_feas, std::int32_t verbose, double* x_out, std::int32_t* status_out,
    double* obj_out, std::int32_t* iters_out, double* solve_time_out);

namespace rci {

namespace {

constexpr std::int32_t kConeNonneg = 1;
constexpr std::int32_t kConePsdTriangle = 3;
constexpr std::int32_t kConeExp = 4;

/// Conic standard form  min q'x  s.t.  Ax + s = b, s ∈ K, over the extended
/// variable vector [program scalars; logdet auxiliaries L, t].
struct ConicData {
  Index n_prog = 0;
  Index n_ext = 0;
  Index rows = 0;
  std::vector<Eigen::Triplet<double>> triplets;
  std::vector<double> b;
  std::vector<double> q;
  std::vector<std::int32_t> cone_tags;
  std::vector<std::int64_t> cone_dims;
  double objective_constant = 0.0;
};

ConicData to_conic(const LmiProgram& prog) {
  ConicData cd;
  cd.n_prog = prog.num_scalars();
  cd.n_ext = cd.n_prog;

  // Auxiliary scalars for maximize log det(V): lower-triangular factor L and
  // per-diagonal hypograph variables t with (t_i, 1, L_ii) in the exp cone and
  // [[V, L],[Lᵀ, diag(L)]] PSD.
  Index logdet_n = 0;
  Index l_offset = 0, t_offset = 0;
  std::vector<Index> l_index;  // (r,c) r>=c -> extended scalar
  if (prog.logdet_variable()) {
    logdet_n = prog.variable(*prog.logdet_variable()).rows;
    l_offset = cd.n_ext;
    cd.n_ext += logdet_n * (logdet_n + 1) / 2;
    t_offset = cd.n_ext;
    cd.n_ext += logdet_n;
    l_index.assign(static_cast<size_t>(logdet_n * logdet_n), -1);
    Index slot = l_offset;
    for (Index r = 0; r < logdet_n; ++r)
      for (Index c = 0; c <= r; ++c) l_index[static_cast<size_t>(r * logdet_n + c)] = slot++;
  }

  Index row = 0;
  auto push_expr = [&](const AffineExpr& e, double scale) {
    for (const auto& [idx, coeff] : e.terms) cd.triplets.emplace_back(static_cast<int>(row), static_cast<int>(idx), -scale * coeff);
    cd.b.push_back(scale * e.constant);
    ++row;
  };

  const auto& linear = prog.linear_constraints();
  if (!linear.empty()) {
    for (const auto& c : linear) push_expr(c.expr, 1.0);
    cd.cone_tags.push_back(kConeNonneg);
    cd.cone_dims.push_back(static_cast<std::int64_t>(linear.size()));
  }

  const double sqrt2 = std::sqrt(2.0);
  for (const auto& blk : prog.psd_blocks()) {
    // Clarabel svec order: upper triangle, column-major, off-diagonal ×√2.
    std::vector<const AffineExpr*> grid(static_cast<size_t>(blk.side * blk.side), nullptr);
    for (const auto& e : blk.upper) grid[static_cast<size_t>(e.row * blk.side + e.col)] = &e.expr;
    for (Index c = 0; c < blk.side; ++c)
      for (Index r = 0; r <= c; ++r) {
        const AffineExpr* e = grid[static_cast<size_t>(r * blk.side + c)];
        const double scale = (r == c) ? 1.0 : sqrt2;
        if (e)
          push_expr(*e, scale);
        else {
          cd.b.push_back(0.0);
          ++row;
        }
      }
    cd.cone_tags.push_back(kConePsdTriangle);
    cd.cone_dims.push_back(static_cast<std::int64_t>(blk.side));
  }

  if (prog.logdet_variable()) {
    const Index v = *prog.logdet_variable();
    const Index n = logdet_n;
    const Index side = 2 * n;
    for (Index c = 0; c < side; ++c)
      for (Index r = 0; r <= c; ++r) {
        const double scale = (r == c) ? 1.0 : sqrt2;
        AffineExpr e;
        if (r < n && c < n) {
          e.add(prog.scalar_index(v, r, c), 1.0);
        } else if (r < n && c >= n) {
          const Index j = c - n;
          if (j <= r) e.add(l_index[static_cast<size_t>(r * n + j)], 1.0);
        } else {
          if (r == c) e.add(l_index[static_cast<size_t>((r - n) * n + (r - n))], 1.0);
        }
        push_expr(e, scale);
      }
    cd.cone_tags.push_back(kConePsdTriangle);
    cd.cone_dims.push_back(static_cast<std::int64_t>(side));

    for (Index i = 0; i < n; ++i) {
      AffineExpr et;
      et.add(t_offset + i, 1.0);
      push_expr(et, 1.0);
      AffineExpr eone;
      eone.constant = 1.0;
      push_expr(eone, 1.0);
      AffineExpr el;
      el.add(l_index[static_cast<size_t>(i * n + i)], 1.0);
      push_expr(el, 1.0);
      cd.cone_tags.push_back(kConeExp);
      cd.cone_dims.push_back(3);
    }
  }

  cd.rows = row;
  cd.q.assign(static_cast<size_t>(cd.n_ext), 0.0);
  for (const auto& [idx, coeff] : prog.linear_objective().terms)
    cd.q[static_cast<size_t>(idx)] -= coeff;  // maximize -> minimize
  cd.objective_constant = prog.linear_objective().constant;
  for (Index i = 0; i < logdet_n; ++i) cd.q[static_cast<size_t>(t_offset + i)] = -1.0;
  return cd;
}

}  // namespace

SolveResult solve_clarabel(const LmiProgram& prog, const SolverOptions& options) {
  // Clarabel's PSD cone ops go through BLAS; keep them single-threaded for
  // reproducibility.
  setenv("OPENBLAS_NUM_THREADS", "1", 0);

  ConicData cd = to_conic(prog);

  Eigen::SparseMatrix<double> A(static_cast<int>(cd.rows), static_cast<int>(cd.n_ext));
  A.setFromTriplets(cd.triplets.begin(), cd.triplets.end());
  A.makeCompressed();

  std::vector<std::int64_t> colptr(static_cast<size_t>(cd.n_ext) + 1);
  std::vector<std::int64_t> rowval(static_cast<size_t>(A.nonZeros()));
  for (Index c = 0; c <= cd.n_ext; ++c) colptr[static_cast<size_t>(c)] = A.outerIndexPtr()[c];
  for (Index i = 0; i < A.nonZeros(); ++i) rowval[static_cast<size_t>(i)] = A.innerIndexPtr()[i];

  std::vector<double> x(static_cast<size_t>(cd.n_ext), 0.0);
  std::int32_t status = 0, iters = 0;
  double obj = 0.0, solve_time = 0.0;

  const int rc = rci_clarabel_solve(
      cd.n_ext, cd.rows, colptr.data(), rowval.data(), A.valuePtr(),
      static_cast<std::int64_t>(A.nonZeros()), cd.q.data(), cd.b.data(), cd.cone_tags.data(),
      cd.cone_dims.data(), static_cast<std::int64_t>(cd.cone_tags.size()), options.max_iter,
      options.time_limit, options.gap_tol, options.gap_tol, options.solver_feas_tol,
      options.verbose ? 1 : 0, x.data(), &status, &obj, &iters, &solve_time);

  SolveResult res;
  res.backend = "clarabel";
  if (rc != 0) {
    res.status = SolveStatus::numerical_failure;
    res.message = "clarabel setup failed (code " + std::to_string(rc) + ")";
    return res;
  }
  switch (status) {
    case 0: res.status = SolveStatus::optimal; break;
    case 1: res.status = SolveStatus::near_optimal; break;
    case 2: res.status = SolveStatus::infeasible; break;
    case 3: res.status = SolveStatus::unbounded; break;
    default:
      res.status = SolveStatus::numerical_failure;
      res.message = "clarabel did not converge";
      break;
  }
  res.iterations = iters;
  res.solve_time = solve_time;
  res.objective = -obj + cd.objective_constant;
  res.x = Eigen::Map<const Vector>(x.data(), cd.n_prog);
  if (res.status == SolveStatus::optimal || res.status == SolveStatus::near_optimal) {
    for (Index v = 0; v < prog.num_variables(); ++v)
      res.assignments[prog.variable(v).name] = prog.variable_value(v, res.x);
  }
  return res;
}

}  // namespace rci
