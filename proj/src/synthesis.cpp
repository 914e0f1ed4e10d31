#include "rci/synthesis.hpp"

#include <cmath>

#include <nlohmann/json.hpp>

#include "rci/polytope.hpp"

namespace rci {

using nlohmann::json;

IterationPoint init_iteration(const SynthesisConfig& cfg, const std::vector<Vector>& theta_vertices) {
  const Index n = cfg.C.cols();
  double max_entry = 0.0;
  for (const auto& theta : theta_vertices) {
    if (cfg.constraints.Hx.rows() > 0)
      max_entry = std::max(max_entry, (cfg.constraints.Hx * theta).maxCoeff());
  }
  double alpha = cfg.alpha_cap;
  if (max_entry > 1.0 / cfg.alpha_cap) alpha = 1.0 / max_entry;

  IterationPoint pt;
  pt.W = alpha * Matrix::Identity(n, n);
  const Index triples = static_cast<Index>(theta_vertices.size()) *
                        static_cast<Index>(cfg.constraints.scheduling_vertices.size()) *
                        cfg.C.rows();
  pt.X.assign(static_cast<size_t>(triples), Matrix::Identity(n, n));
  pt.q = 0;
  pt.volume = 0.0;
  return pt;
}

std::vector<Matrix> extract_gains(const Matrix& W, const Matrix& N, Index s) {
  if (N.cols() != W.rows() * s) throw DimensionError("extract_gains: N must be m × ns");
  Eigen::FullPivLU<Matrix> lu(W);
  lu.setThreshold(1e-12);
  if (!lu.isInvertible()) throw Error("extract_gains: W is singular");
  const Matrix Winv = lu.inverse();
  std::vector<Matrix> K;
  K.reserve(static_cast<size_t>(s));
  for (Index l = 0; l < s; ++l)
    K.push_back(N.middleCols(l * W.rows(), W.rows()) * Winv);
  return K;
}

namespace {

/// Eigenvalue floor keeping X_q safely positive definite for the next
/// linearization (Z_q = X_q⁻¹W_q).
Matrix floor_pd(const Matrix& X, double floor, bool& shifted) {
  Eigen::SelfAdjointEigenSolver<Matrix> eig(symmetrized(X));
  const double mineig = eig.eigenvalues().minCoeff();
  if (mineig > floor) return symmetrized(X);
  shifted = true;
  return symmetrized(X) + (2 * floor - mineig) * Matrix::Identity(X.rows(), X.cols());
}

}  // namespace

std::vector<Vector> SynthesisResult::s_vertices() const {
  std::vector<Vector> out;
  out.reserve(theta_vertices.size());
  for (const auto& theta : theta_vertices) out.push_back(W * theta);
  return out;
}

SynthesisResult synthesize(const DataMatrices& dm, const SynthesisConfig& cfg) {
  SynthesisResult res;
  res.C = cfg.C;

  res.informativity = informativity(dm, cfg.constraints);
  if (!res.informativity.bounded && !cfg.allow_uninformative) {
    res.message = "data not informative: rank(Xpu) = " + std::to_string(res.informativity.rank_xpu) +
                  " < " + std::to_string(res.informativity.required_rank) +
                  " or H_w rank-deficient; the admissible model set is unbounded";
    return res;
  }

  const PolytopeH theta_set = PolytopeH::band(cfg.C);
  res.theta_vertices = enumerate_vertices(theta_set).vertices;
  const double theta_volume = volume(PolytopeV{res.theta_vertices});
  if (theta_volume <= 0) {
    res.message = "Θ is degenerate (zero volume); C must have full column rank";
    return res;
  }

  // Work in a rescaled θ-space with C̃ = C/‖C‖max so the loop variables stay
  // O(1): W̃ = W/‖C‖max and Ñ = N/‖C‖max describe the same set S = W̃Θ̃ = WΘ
  // and the same gains K = ÑW̃⁻¹. Mapped back on return.
  const double c_scale = cfg.C.cwiseAbs().maxCoeff();
  SynthesisConfig scaled_cfg = cfg;
  scaled_cfg.C = cfg.C / c_scale;
  std::vector<Vector> scaled_thetas;
  scaled_thetas.reserve(res.theta_vertices.size());
  for (const auto& v : res.theta_vertices) scaled_thetas.push_back(c_scale * v);

  IterationPoint point = init_iteration(scaled_cfg, scaled_thetas);

  Matrix best_W, best_N;
  bool have_iterate = false;
  double sticky_margin = 0.0;  // kept once a margin retry succeeded

  for (int q = 1; q <= cfg.max_iters; ++q) {
    // The margin-free program is the certification reference; a positive
    // margin shrinks the solve-side feasible set to buy certificate headroom
    // while leaving the variable layout identical.
    SynthesisProgram sp = build_iteration_program(dm, cfg.constraints, scaled_cfg.C, scaled_thetas,
                                                  point, LmiOptions{cfg.epsilon, 0.0});
    if (q == 1) res.stats = sp.stats;
    SolverOptions opts = cfg.solver;
    opts.program_name = opts.program_name + "_q" + std::to_string(q);

    auto solve_with_margin = [&](double margin, double epsilon) {
      if (margin == 0.0 && epsilon == cfg.epsilon) return solve(sp.program, opts);
      SynthesisProgram margined = build_iteration_program(dm, cfg.constraints, scaled_cfg.C,
                                                          scaled_thetas, point,
                                                          LmiOptions{epsilon, margin});
      return solve(margined.program, opts);
    };

    SolveResult sol = solve_with_margin(sticky_margin, cfg.epsilon);

    IterationLog log;
    log.q = q;
    log.status = sol.status;
    log.objective = sol.objective;
    log.solve_time = sol.solve_time;
    log.solver_iterations = sol.iterations;

    if (sol.status == SolveStatus::infeasible || sol.status == SolveStatus::unbounded) {
      log.note = "solver reported " + to_string(sol.status);
      res.iterations.push_back(log);
      if (!have_iterate) {
        res.message = "iteration 1 " + to_string(sol.status) + ": no invariant set of this shape "
                      "is certifiable from the data";
        return res;
      }
      res.message = "stopped at iteration " + std::to_string(q) + " (" + to_string(sol.status) +
                    "); returning the best earlier iterate";
      break;
    }
    if (sol.status == SolveStatus::numerical_failure) {
      log.note = sol.message;
      res.iterations.push_back(log);
      if (!have_iterate) {
        res.message = "solver failed on iteration 1: " + sol.message;
        return res;
      }
      res.message = "solver failure mid-loop; returning the best earlier iterate";
      break;
    }

    CertificateReport cert = verify_solution(sp.program, sol, cfg.solver.feas_tol);
    if (!cert.pass) {
      // Optimal-labeled results violating 10× the tolerance are downgraded
      // before the retry; the downgraded point itself is never used.
      const bool downgraded =
          sol.status == SolveStatus::optimal &&
          !verify_solution(sp.program, sol, 10 * cfg.solver.feas_tol).pass;

      // Retry once with tightened strictness: a PSD margin on the per-triple
      // blocks plus a stronger W_obj floor, certified against the margin-free
      // program.
      const double margin = std::max(1e-3, 20.0 * std::abs(cert.min_eigenvalue));
      SolveResult sol2 = solve_with_margin(margin, 10 * cfg.epsilon);
      CertificateReport cert2 = verify_solution(sp.program, sol2, cfg.solver.feas_tol);
      if ((sol2.status == SolveStatus::optimal || sol2.status == SolveStatus::near_optimal) &&
          cert2.pass) {
        sol = std::move(sol2);
        cert = cert2;
        sticky_margin = margin;
        log.note = "accepted after margin-tightened retry";
        log.status = sol.status;
        log.objective = sol.objective;
      } else {
        log.status = downgraded ? SolveStatus::numerical_failure : log.status;
        log.note = "certificate failed (min eig " + std::to_string(cert.min_eigenvalue) + " in " +
                   cert.worst_block + (downgraded ? "; optimal label downgraded" : "") + ")";
        res.iterations.push_back(log);
        if (!have_iterate) {
          res.message = "iteration 1 uncertifiable: " + log.note;
          return res;
        }
        res.message = "uncertifiable iterate at q=" + std::to_string(q) + "; keeping earlier result";
        break;
      }
    }
    log.certificate_min_eig = cert.min_eigenvalue;

    const Matrix W = sol.assignments.at("W");
    const Matrix N = sol.assignments.at("N");
    // |det W̃|·vol(Θ̃) equals the volume of S in the original coordinates.
    const double vol = std::abs(W.determinant()) * theta_volume * std::pow(c_scale, dm.n);
    log.volume = vol;

    if (!res.volume_history.empty()) {
      const double prev = res.volume_history.back();
      if (vol < prev * (1.0 - 1e-6)) {
        log.note += (log.note.empty() ? "" : "; ") + std::string("volume decreased (") +
                    std::to_string(prev) + " -> " + std::to_string(vol) + ")";
        res.iterations.push_back(log);
        res.message = "volume dipped beyond solver tolerance at q=" + std::to_string(q) +
                      "; keeping the previous iterate";
        break;
      }
      if (vol < prev) log.note += (log.note.empty() ? "" : "; ") + std::string("tolerated dip");
    }

    best_W = W;
    best_N = N;
    have_iterate = true;
    res.volume_history.push_back(vol);
    res.iterations.push_back(log);

    // Next linearization point.
    point.q = q;
    point.W = W;
    point.volume = vol;
    bool shifted = false;
    for (Index f = 0; f < sp.indexer.count(); ++f) {
      const auto& name = sp.program.variable(sp.vars.triples[static_cast<size_t>(f)].X).name;
      point.X[static_cast<size_t>(f)] = floor_pd(sol.assignments.at(name), 1e-9, shifted);
    }
    if (shifted) res.iterations.back().note += (res.iterations.back().note.empty() ? "" : "; ") +
                                               std::string("X_q eigenvalue floor applied");

    if (res.volume_history.size() >= 2) {
      const double prev = res.volume_history[res.volume_history.size() - 2];
      if (vol - prev < cfg.rel_vol_tol * std::max(prev, 1e-300)) break;
    }
  }

  if (!have_iterate) {
    if (res.message.empty()) res.message = "no feasible iterate";
    return res;
  }
  res.feasible = true;
  res.W = c_scale * best_W;
  res.N = c_scale * best_N;
  if (std::abs(res.W.determinant()) <= 1e-9)
    throw Error("synthesize: returned W is numerically singular");
  res.K = extract_gains(res.W, res.N, dm.s);
  return res;
}

nlohmann::json SynthesisResult::to_json() const {
  json j;
  j["feasible"] = feasible;
  j["message"] = message;
  auto mat = [](const Matrix& m) {
    json rows = json::array();
    for (Index r = 0; r < m.rows(); ++r) {
      json row = json::array();
      for (Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
      rows.push_back(row);
    }
    return rows;
  };
  if (feasible) {
    j["W"] = mat(W);
    j["N"] = mat(N);
    j["K"] = json::array();
    for (const auto& k : K) j["K"].push_back(mat(k));
    j["volume"] = volume();
  }
  j["C"] = mat(C);
  j["volume_history"] = volume_history;
  j["informativity"] = informativity.to_json();
  j["iterations"] = json::array();
  for (const auto& it : iterations)
    j["iterations"].push_back({{"q", it.q},
                               {"status", to_string(it.status)},
                               {"objective", it.objective},
                               {"volume", it.volume},
                               {"certificate_min_eig", it.certificate_min_eig},
                               {"solve_time", it.solve_time},
                               {"solver_iterations", it.solver_iterations},
                               {"note", it.note}});
  j["theta_vertices"] = json::array();
  for (const auto& v : theta_vertices) {
    json jv = json::array();
    for (Index i = 0; i < v.size(); ++i) jv.push_back(v(i));
    j["theta_vertices"].push_back(jv);
  }
  j["variables"] = {{"exact_total", stats.exact_variable_total},
                    {"paper_formula_total", stats.paper_formula_total},
                    {"triples", stats.num_triples},
                    {"psd_blocks", stats.num_psd_blocks},
                    {"linear_constraints", stats.num_linear},
                    {"invariance_block_side", stats.invariance_block_side},
                    {"coupling_block_side", stats.coupling_block_side}};
  return j;
}

}  // namespace rci
