#include "rci/verify.hpp"

#include <cmath>

#include <nlohmann/json.hpp>

#include "rci/polytope.hpp"

namespace rci {

Vector theta_successor(const Matrix& W, const Matrix& N, const Matrix& M, const Vector& p,
                       const Vector& theta, const Vector& w) {
  const Index n = W.rows(), s = p.size();
  // [I_s⊗W; N](p⊗θ) = [p ⊗ (Wθ); N(p⊗θ)]
  Vector stacked(M.cols());
  stacked.head(n * s) = kron(p, Vector(W * theta));
  stacked.tail(M.cols() - n * s) = N * kron(p, theta);
  return W.lu().solve(M * stacked + w);
}

Matrix gain_at(const std::vector<Matrix>& K, const Vector& p) {
  if (K.empty() || p.size() != static_cast<Index>(K.size()))
    throw DimensionError("gain_at: scheduling size != number of gains");
  Matrix out = Matrix::Zero(K.front().rows(), K.front().cols());
  for (size_t l = 0; l < K.size(); ++l) out += p(static_cast<Index>(l)) * K[l];
  return out;
}

ContainmentReport check_containment(const SynthesisResult& result, const ConstraintSets& constraints,
                                    double tol) {
  ContainmentReport rep;
  rep.tol = tol;
  const auto& thetas = result.theta_vertices;
  for (size_t i = 0; i < thetas.size(); ++i) {
    if (constraints.Hx.rows() == 0) break;
    const Vector v = constraints.Hx * result.W * thetas[i];
    for (Index r = 0; r < v.size(); ++r)
      if (v(r) > rep.max_state) {
        rep.max_state = v(r);
        rep.worst_state_vertex = static_cast<Index>(i);
        rep.worst_state_row = r;
      }
  }
  for (size_t j = 0; j < constraints.scheduling_vertices.size(); ++j)
    for (size_t i = 0; i < thetas.size(); ++i) {
      if (constraints.Hu.rows() == 0) break;
      const Vector v =
          constraints.Hu * result.N * kron(constraints.scheduling_vertices[j], thetas[i]);
      for (Index r = 0; r < v.size(); ++r)
        if (v(r) > rep.max_input) {
          rep.max_input = v(r);
          rep.worst_input_vertex = static_cast<Index>(i);
          rep.worst_input_pvertex = static_cast<Index>(j);
          rep.worst_input_row = r;
        }
    }
  rep.pass = rep.max_state <= 1.0 + tol && rep.max_input <= 1.0 + tol;
  return rep;
}

VertexInvarianceReport vertex_invariance_check(const SynthesisResult& result, const LpvPlant& plant,
                                               const ConstraintSets& constraints, double tol) {
  VertexInvarianceReport rep;
  rep.tol = tol;
  const auto wverts = enumerate_vertices(constraints.disturbance_polytope()).vertices;
  const Matrix Winv = result.W.inverse();
  for (const auto& theta : result.theta_vertices)
    for (const auto& p : constraints.scheduling_vertices) {
      const Matrix Kp = gain_at(result.K, p);
      const Vector x = result.W * theta;
      const Vector u = Kp * x;
      const Vector base = plant.dynamics(p) * x + plant.B * u;
      for (const auto& w : wverts) {
        const Vector theta_plus = Winv * (base + w);
        const double norm = (result.C * theta_plus).lpNorm<Eigen::Infinity>();
        rep.worst_norm = std::max(rep.worst_norm, norm);
        ++rep.checks;
        if (norm > 1.0 + tol) ++rep.violations;
      }
    }
  rep.pass = rep.violations == 0;
  return rep;
}

MonteCarloStats monte_carlo_invariance(const SynthesisResult& result, const LpvPlant& plant,
                                       const DataMatrices& dm, const ConstraintSets& constraints,
                                       const MonteCarloConfig& config) {
  MonteCarloStats stats;
  stats.trials = config.trials;
  stats.horizon = config.horizon;
  stats.seed = config.seed;

  std::vector<Matrix> models;
  if (config.mode == ModelMode::SampledModel) {
    SolverOptions lp_options;
    models = sample_admissible_models(dm, config.trials, config.seed ^ 0x5eedULL, lp_options,
                                      config.burn_in);
  }

  const Matrix Winv = result.W.inverse();
  DisturbanceSampler wsampler(constraints.Hw);
  Rng root(config.seed);
  const auto s_verts = result.s_vertices();

  for (Index trial = 0; trial < config.trials; ++trial) {
    Rng rng = root.fork(static_cast<std::uint64_t>(trial));
    Vector x;
    if (config.random_boundary) {
      // Random boundary point: scale a random vertex mix onto ∂Θ.
      Vector weights = rng.dirichlet(static_cast<Index>(result.theta_vertices.size()));
      Vector theta = Vector::Zero(result.W.rows());
      for (size_t i = 0; i < result.theta_vertices.size(); ++i)
        theta += weights(static_cast<Index>(i)) * result.theta_vertices[i];
      const double norm = (result.C * theta).lpNorm<Eigen::Infinity>();
      if (norm > 1e-12) theta /= norm;
      x = result.W * theta;
    } else {
      x = s_verts[static_cast<size_t>(trial) % s_verts.size()];
    }

    const Matrix model = config.mode == ModelMode::SampledModel
                             ? models[static_cast<size_t>(trial)]
                             : plant.stacked();
    const Index n = plant.n();

    double trial_max = (result.C * (Winv * x)).lpNorm<Eigen::Infinity>();
    for (Index step = 0; step < config.horizon; ++step) {
      Vector weights = rng.dirichlet(static_cast<Index>(constraints.scheduling_vertices.size()));
      Vector p = Vector::Zero(constraints.s());
      for (size_t j = 0; j < constraints.scheduling_vertices.size(); ++j)
        p += weights(static_cast<Index>(j)) * constraints.scheduling_vertices[j];
      const Vector u = gain_at(result.K, p) * x;
      const Vector w = wsampler.sample(rng);
      Vector stacked(model.cols());
      stacked.head(n * plant.s()) = kron(p, x);
      stacked.tail(plant.m()) = u;
      x = model * stacked + w;
      trial_max = std::max(trial_max, (result.C * (Winv * x)).lpNorm<Eigen::Infinity>());
    }
    stats.per_trial_max.push_back(trial_max);
    stats.max_norm = std::max(stats.max_norm, trial_max);
    if (trial_max > 1.0 + config.tol) ++stats.violations;
  }
  stats.pass = stats.violations == 0;
  return stats;
}

nlohmann::json MonteCarloStats::to_json() const {
  nlohmann::json j;
  j["trials"] = trials;
  j["horizon"] = horizon;
  j["max_norm"] = max_norm;
  j["violations"] = violations;
  j["seed"] = seed;
  j["pass"] = pass;
  j["per_trial_max"] = per_trial_max;
  return j;
}

Lemma2Report lemma2_consistency(const SynthesisResult& result, const LpvPlant& plant,
                                const ConstraintSets& constraints, Index samples,
                                std::uint64_t seed, double tol) {
  Lemma2Report rep;
  rep.samples = samples;
  rep.tol = tol;
  Rng rng(seed);
  DisturbanceSampler wsampler(constraints.Hw);
  const Matrix M = plant.stacked();
  const auto& thetas = result.theta_vertices;
  const auto& ps = constraints.scheduling_vertices;

  for (Index it = 0; it < samples; ++it) {
    const Vector alpha = rng.dirichlet(static_cast<Index>(thetas.size()));
    const Vector beta = rng.dirichlet(static_cast<Index>(ps.size()));
    const Vector w = wsampler.sample(rng);

    Vector theta = Vector::Zero(result.W.rows());
    for (size_t i = 0; i < thetas.size(); ++i) theta += alpha(static_cast<Index>(i)) * thetas[i];
    Vector p = Vector::Zero(constraints.s());
    for (size_t j = 0; j < ps.size(); ++j) p += beta(static_cast<Index>(j)) * ps[j];

    const Vector direct = theta_successor(result.W, result.N, M, p, theta, w);
    Vector combo = Vector::Zero(direct.size());
    for (size_t j = 0; j < ps.size(); ++j)
      for (size_t i = 0; i < thetas.size(); ++i)
        combo += beta(static_cast<Index>(j)) * alpha(static_cast<Index>(i)) *
                 theta_successor(result.W, result.N, M, ps[j], thetas[i], w);
    rep.max_error = std::max(rep.max_error, (direct - combo).lpNorm<Eigen::Infinity>());
  }
  rep.pass = rep.max_error <= tol;
  return rep;
}

Matrix chebyshev_center(const DataMatrices& dm, const SolverOptions& options) {
  if (dm.T == 0) throw Error("chebyshev_center: empty data");
  LmiProgram prog;
  const Index Mvar = prog.add_variable("M", dm.n, dm.model_cols(), VarKind::Full);
  const Index rvar = prog.add_variable("r", 1, 1, VarKind::Scalar);
  const Index rows = dm.Z.rows();
  for (Index t = 0; t < rows; ++t) {
    const double norm = dm.Z.row(t).norm();
    AffineExpr hi;  // (1 + d_t) − Z_t·vec(M) − r·‖Z_t‖ ≥ 0
    hi.constant = 1.0 + dm.d(t);
    for (Index v = 0; v < dm.Z.cols(); ++v)
      hi.add(prog.variable(Mvar).offset + v, -dm.Z(t, v));
    hi.add(prog.variable(rvar).offset, -norm);
    prog.add_linear("hi[" + std::to_string(t) + "]", std::move(hi));
    AffineExpr lo;  // Z_t·vec(M) − (d_t − 1) − r·‖Z_t‖ ≥ 0
    lo.constant = 1.0 - dm.d(t);
    for (Index v = 0; v < dm.Z.cols(); ++v)
      lo.add(prog.variable(Mvar).offset + v, dm.Z(t, v));
    lo.add(prog.variable(rvar).offset, -norm);
    prog.add_linear("lo[" + std::to_string(t) + "]", std::move(lo));
  }
  prog.add_nonneg_variable(rvar);
  AffineExpr obj;
  obj.add(prog.variable(rvar).offset, 1.0);
  prog.add_linear_objective(obj);

  SolverOptions opts = options;
  opts.program_name = "chebyshev";
  const SolveResult sol = solve(prog, opts);
  if (sol.status != SolveStatus::optimal && sol.status != SolveStatus::near_optimal)
    throw Error("chebyshev_center: LP " + to_string(sol.status) +
                " (admissible model set empty or unbounded)");
  return sol.assignments.at("M");
}

std::vector<Matrix> sample_admissible_models(const DataMatrices& dm, Index count,
                                             std::uint64_t seed, const SolverOptions& options,
                                             Index burn_in) {
  const Matrix center = chebyshev_center(dm, options);
  Vector point = vec(center);
  Rng rng(seed);
  const Index dim = point.size();

  auto step = [&](Vector& m) {
    // Random direction via Box-Muller normals, then the exact feasible chord.
    Vector dir(dim);
    for (Index i = 0; i < dim; ++i) {
      const double u1 = std::max(rng.uniform(), 1e-300);
      const double u2 = rng.uniform();
      dir(i) = std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
    }
    const double nrm = dir.norm();
    if (nrm <= 0) return;
    dir /= nrm;
    const Vector zm = dm.Z * m;
    const Vector zd = dm.Z * dir;
    double t_lo = -std::numeric_limits<double>::infinity();
    double t_hi = std::numeric_limits<double>::infinity();
    for (Index t = 0; t < dm.Z.rows(); ++t) {
      const double lo = dm.d(t) - 1.0 - zm(t), hi = dm.d(t) + 1.0 - zm(t);
      if (std::abs(zd(t)) < 1e-14) continue;
      const double a = lo / zd(t), b = hi / zd(t);
      t_lo = std::max(t_lo, std::min(a, b));
      t_hi = std::min(t_hi, std::max(a, b));
    }
    if (!std::isfinite(t_lo) || !std::isfinite(t_hi) || t_hi < t_lo) return;
    m += rng.uniform(t_lo, t_hi) * dir;
  };

  for (Index i = 0; i < burn_in; ++i) step(point);

  std::vector<Matrix> models;
  models.reserve(static_cast<size_t>(count));
  Index guard = 0;
  while (static_cast<Index>(models.size()) < count) {
    step(point);
    const Matrix M = unvec(point, dm.n, dm.model_cols());
    if (membership(dm, M).inside) {
      models.push_back(M);
    } else if (++guard > 100 * count) {
      throw Error("sample_admissible_models: sampler left the admissible set");
    }
  }
  return models;
}

VolumeVsTTable volume_vs_T(const LpvPlant& plant, const std::vector<Index>& T_list,
                           const StudyConfig& cfg, std::uint64_t seed) {
  if (T_list.empty()) throw Error("volume_vs_T: empty T list");
  for (size_t i = 1; i < T_list.size(); ++i)
    if (T_list[i] < T_list[i - 1]) throw Error("volume_vs_T: T list must be non-decreasing");

  const Index T_max = T_list.back();
  const auto sig = generate_excitation(T_max, cfg.input_box,
                                       cfg.synthesis.constraints.scheduling_vertices,
                                       cfg.synthesis.constraints.Hw, seed);
  const Trajectory full = simulate(plant, cfg.x0, sig.inputs, sig.scheduling, sig.disturbances,
                                   cfg.synthesis.constraints.scheduling_vertices);

  VolumeVsTTable table;
  for (const Index T : T_list) {
    VolumeVsTRow row;
    row.T = T;
    const Trajectory prefix = full.prefix(T);
    const DataMatrices dm = build_data_matrices(prefix, cfg.synthesis.constraints);
    const auto info = informativity(dm, cfg.synthesis.constraints);
    row.informative = info.bounded;
    row.rank_xpu = info.rank_xpu;
    if (!info.bounded) {
      row.status = "uninformative";
      table.rows.push_back(row);
      continue;
    }
    SynthesisConfig scfg = cfg.synthesis;
    scfg.solver.program_name = "volT" + std::to_string(T);
    const SynthesisResult result = synthesize(dm, scfg);
    row.feasible = result.feasible;
    row.volume = result.volume();
    row.status = result.feasible ? "ok" : result.message;
    table.rows.push_back(row);
  }

  table.trend_nondecreasing = true;
  double prev = -1.0;
  for (const auto& row : table.rows) {
    if (!row.feasible) continue;
    if (prev > 0 && row.volume < 0.95 * prev) table.trend_nondecreasing = false;
    prev = row.volume;
  }
  return table;
}

}  // namespace rci
