#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>

#include <nlohmann/json.hpp>

#include "rci/verify.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace rci;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitInformativity = 3;
constexpr int kExitInfeasible = 4;
constexpr int kExitViolation = 5;

struct CliError : Error {
  CliError(int code, const std::string& what) : Error(what), code(code) {}
  int code;
};

json load_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw CliError(kExitConfig, "cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw CliError(kExitConfig, path.string() + ": " + e.what());
  }
}

Matrix matrix_from(const json& j) {
  if (!j.is_array() || j.empty()) throw CliError(kExitConfig, "expected a matrix (array of rows)");
  Matrix out(static_cast<Index>(j.size()), static_cast<Index>(j.front().size()));
  for (size_t r = 0; r < j.size(); ++r) {
    if (j[r].size() != j.front().size()) throw CliError(kExitConfig, "ragged matrix rows");
    for (size_t c = 0; c < j[r].size(); ++c)
      out(static_cast<Index>(r), static_cast<Index>(c)) = j[r][c].get<double>();
  }
  return out;
}

json matrix_to(const Matrix& m) {
  json rows = json::array();
  for (Index r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(row);
  }
  return rows;
}

Vector vector_from(const json& j) {
  Vector v(static_cast<Index>(j.size()));
  for (size_t i = 0; i < j.size(); ++i) v(static_cast<Index>(i)) = j[i].get<double>();
  return v;
}

/// Shared command-line state; flags override the config file.
struct Options {
  std::string config_path;
  std::string out_dir = "out";
  std::string traj_path;
  std::string solver;
  long long seed = -1;
  int nc = 0;
  int max_iters = 0;
};

struct LoadedConfig {
  json raw;
  SystemConfig system;
  fs::path dir;  // config directory, base for relative paths
};

LoadedConfig load_config(const Options& opt) {
  if (opt.config_path.empty()) throw CliError(kExitConfig, "--config is required");
  LoadedConfig cfg;
  cfg.raw = load_json(opt.config_path);
  cfg.dir = fs::path(opt.config_path).parent_path();
  try {
    const auto& jp = cfg.raw.at("plant");
    const Index n = jp.at("n").get<Index>();
    for (const auto& ja : jp.at("A")) cfg.system.plant.A.push_back(matrix_from(ja));
    cfg.system.plant.B = matrix_from(jp.at("B"));
    cfg.system.plant.validate();
    if (cfg.system.plant.n() != n) throw Error("plant: declared n does not match matrices");
    const auto& jc = cfg.raw.at("constraints");
    cfg.system.constraints.Hx = matrix_from(jc.at("H_x"));
    cfg.system.constraints.Hu = matrix_from(jc.at("H_u"));
    cfg.system.constraints.Hw = matrix_from(jc.at("H_w"));
    for (const auto& jv : jc.at("scheduling_vertices"))
      cfg.system.constraints.scheduling_vertices.push_back(vector_from(jv));
    cfg.system.constraints.validate();
  } catch (const json::exception& e) {
    throw CliError(kExitConfig, std::string("config: ") + e.what());
  } catch (const Error& e) {
    throw CliError(kExitConfig, std::string("config: ") + e.what());
  }
  return cfg;
}

/// Bundled band matrices for --nc (two-state systems).
Matrix preset_C(int nc, Index n) {
  if (n != 2) throw CliError(kExitConfig, "--nc presets are defined for n = 2 systems only");
  if (nc == 2) return Matrix::Identity(2, 2);
  if (nc == 3) return (Matrix(3, 2) << 20.0, 20.0, -20.0, 0.0, 0.0, -25.0).finished();
  throw CliError(kExitConfig, "--nc must be 2 or 3 (or set synthesis.C in the config)");
}

SolverOptions solver_options(const LoadedConfig& cfg, const Options& opt) {
  SolverOptions s;
  if (cfg.raw.contains("solver")) {
    const auto& js = cfg.raw["solver"];
    s.backend = js.value("backend", std::string());
    s.feas_tol = js.value("feas_tol", s.feas_tol);
    s.gap_tol = js.value("gap_tol", s.gap_tol);
    s.solver_feas_tol = js.value("solver_feas_tol", s.solver_feas_tol);
    s.max_iter = js.value("max_iter", s.max_iter);
    s.verbose = js.value("verbose", s.verbose);
    s.exchange_dir = js.value("exchange_dir", s.exchange_dir);
  }
  if (!opt.solver.empty()) s.backend = opt.solver;
  return s;
}

SynthesisConfig synthesis_config(const LoadedConfig& cfg, const Options& opt) {
  SynthesisConfig sc;
  sc.constraints = cfg.system.constraints;
  const json js = cfg.raw.value("synthesis", json::object());
  if (opt.nc > 0)
    sc.C = preset_C(opt.nc, cfg.system.plant.n());
  else if (js.contains("C"))
    sc.C = matrix_from(js["C"]);
  else
    throw CliError(kExitConfig, "no band matrix: set synthesis.C in the config or pass --nc");
  sc.max_iters = js.value("max_iters", sc.max_iters);
  if (opt.max_iters > 0) sc.max_iters = opt.max_iters;
  sc.rel_vol_tol = js.value("rel_vol_tol", sc.rel_vol_tol);
  sc.epsilon = js.value("epsilon", sc.epsilon);
  sc.allow_uninformative = js.value("allow_uninformative", sc.allow_uninformative);
  sc.solver = solver_options(cfg, opt);
  return sc;
}

std::uint64_t resolved_seed(const LoadedConfig& cfg, const Options& opt, const char* section) {
  if (opt.seed >= 0) return static_cast<std::uint64_t>(opt.seed);
  if (cfg.raw.contains(section) && cfg.raw[section].contains("seed"))
    return cfg.raw[section]["seed"].get<std::uint64_t>();
  return 42;
}

fs::path trajectory_path(const LoadedConfig& cfg, const Options& opt) {
  if (!opt.traj_path.empty()) return opt.traj_path;
  if (cfg.raw.contains("trajectory")) {
    fs::path p = cfg.raw["trajectory"].get<std::string>();
    return p.is_absolute() ? p : cfg.dir / p;
  }
  throw CliError(kExitConfig, "no trajectory: set \"trajectory\" in the config or pass --traj");
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw CliError(kExitConfig, "cannot write " + path.string());
  out << text;
}

void write_json(const fs::path& path, const json& j) { write_text(path, j.dump(2) + "\n"); }

json vertices_to_json(const std::vector<Vector>& verts) {
  json out = json::array();
  for (const auto& v : verts) {
    json jv = json::array();
    for (Index i = 0; i < v.size(); ++i) jv.push_back(v(i));
    out.push_back(jv);
  }
  return out;
}

int cmd_generate(const Options& opt) {
  const auto cfg = load_config(opt);
  const json jg = cfg.raw.value("generate", json::object());
  const Index T = jg.value("T", 20);
  if (T < 1) throw CliError(kExitConfig, "generate.T must be >= 1");
  const std::uint64_t seed = resolved_seed(cfg, opt, "generate");

  Matrix input_box;
  if (jg.contains("input_box"))
    input_box = matrix_from(jg["input_box"]);
  else
    throw CliError(kExitConfig, "generate.input_box (m×2) is required");
  Vector x0 = jg.contains("x0") ? vector_from(jg["x0"]) : Vector::Zero(cfg.system.plant.n());

  const auto sig = generate_excitation(T, input_box, cfg.system.constraints.scheduling_vertices,
                                       cfg.system.constraints.Hw, seed);
  const auto traj = simulate(cfg.system.plant, x0, sig.inputs, sig.scheduling, sig.disturbances,
                             cfg.system.constraints.scheduling_vertices);

  fs::create_directories(opt.out_dir);
  const fs::path csv = fs::path(opt.out_dir) / "trajectory.csv";
  save_trajectory_csv(traj, csv);
  json prov;
  prov["seed"] = seed;
  prov["T"] = T;
  prov["plant_hash"] = plant_hash(cfg.system.plant);
  write_json(fs::path(opt.out_dir) / "provenance.json", prov);
  std::cout << "wrote " << csv.string() << " (T=" << T << ", seed=" << seed << ")\n";
  return kExitOk;
}

int cmd_synthesize(const Options& opt) {
  const auto cfg = load_config(opt);
  const auto traj = load_trajectory_csv(trajectory_path(cfg, opt));
  const auto dm = build_data_matrices(traj, cfg.system.constraints);
  SynthesisConfig sc = synthesis_config(cfg, opt);

  const auto info = informativity(dm, cfg.system.constraints);
  fs::create_directories(opt.out_dir);
  write_json(fs::path(opt.out_dir) / "informativity.json", info.to_json());
  if (!info.bounded && !sc.allow_uninformative) {
    std::cerr << "data not informative: rank(Xpu) = " << info.rank_xpu << " must equal ns+m = "
              << info.required_rank << " and H_w must have full column rank "
              << "(bounded admissible model set)\n";
    return kExitInformativity;
  }

  const auto result = synthesize(dm, sc);
  write_json(fs::path(opt.out_dir) / "result.json", result.to_json());
  if (!result.feasible) {
    // Dump the iteration-1 program for diagnosis.
    IterationPoint pt = init_iteration(sc, enumerate_vertices(PolytopeH::band(sc.C)).vertices);
    const auto sp = build_iteration_program(dm, sc.constraints, sc.C,
                                            enumerate_vertices(PolytopeH::band(sc.C)).vertices, pt);
    write_json(fs::path(opt.out_dir) / "infeasible_program.json", sp.program.to_json());
    std::cerr << "synthesis failed: " << result.message << "\n";
    return kExitInfeasible;
  }

  const auto containment = check_containment(result, cfg.system.constraints);
  write_json(fs::path(opt.out_dir) / "s_vertices.json",
             json{{"s_vertices", vertices_to_json(result.s_vertices())}});
  if (!containment.pass) {
    std::cerr << "synthesized set violates the state/input constraints\n";
    return kExitViolation;
  }
  std::cout << "feasible; volume " << result.volume() << " after "
            << result.volume_history.size() << " iterations\n";
  return kExitOk;
}

SynthesisResult result_from_json(const json& j) {
  SynthesisResult r;
  r.feasible = j.value("feasible", false);
  if (!r.feasible) throw CliError(kExitConfig, "result file records an infeasible synthesis");
  r.W = matrix_from(j.at("W"));
  r.N = matrix_from(j.at("N"));
  for (const auto& jk : j.at("K")) r.K.push_back(matrix_from(jk));
  r.C = matrix_from(j.at("C"));
  for (const auto& jv : j.at("theta_vertices")) r.theta_vertices.push_back(vector_from(jv));
  r.volume_history = j.at("volume_history").get<std::vector<double>>();
  return r;
}

int cmd_verify(const Options& opt) {
  const auto cfg = load_config(opt);
  const json jv = cfg.raw.value("verify", json::object());
  const fs::path result_path = fs::path(opt.out_dir) / "result.json";
  const auto result = result_from_json(load_json(result_path));
  const auto traj = load_trajectory_csv(trajectory_path(cfg, opt));
  const auto dm = build_data_matrices(traj, cfg.system.constraints);

  const std::uint64_t seed = resolved_seed(cfg, opt, "verify");
  MonteCarloConfig mc;
  mc.trials = jv.value("trials", mc.trials);
  mc.horizon = jv.value("horizon", mc.horizon);
  mc.seed = seed;
  mc.mode = jv.value("mode", std::string("true-model")) == "sampled-model"
                ? ModelMode::SampledModel
                : ModelMode::TrueModel;

  const auto containment = check_containment(result, cfg.system.constraints);
  const auto vertex = vertex_invariance_check(result, cfg.system.plant, cfg.system.constraints);
  const auto stats = monte_carlo_invariance(result, cfg.system.plant, dm, cfg.system.constraints, mc);
  const auto lemma = lemma2_consistency(result, cfg.system.plant, cfg.system.constraints,
                                        jv.value("lemma_samples", Index{200}), seed ^ 0xabcdULL);

  json rep;
  rep["containment"] = {{"max_state", containment.max_state},
                        {"max_input", containment.max_input},
                        {"pass", containment.pass}};
  rep["vertex_invariance"] = {{"checks", vertex.checks},
                              {"violations", vertex.violations},
                              {"worst_norm", vertex.worst_norm},
                              {"pass", vertex.pass}};
  rep["monte_carlo"] = stats.to_json();
  rep["vertex_decomposition"] = {{"samples", lemma.samples},
                                 {"max_error", lemma.max_error},
                                 {"pass", lemma.pass}};
  fs::create_directories(opt.out_dir);
  write_json(fs::path(opt.out_dir) / "verify_report.json", rep);

  // Plot data: the invariant set, the state-constraint polytope, and a few
  // closed-loop trajectories from each vertex of S.
  json fig;
  fig["s_vertices"] = vertices_to_json(result.s_vertices());
  try {
    const auto xset = enumerate_vertices(
        PolytopeH::general(cfg.system.constraints.Hx,
                           Vector::Ones(cfg.system.constraints.Hx.rows())));
    fig["state_constraint_vertices"] = vertices_to_json(xset.vertices);
  } catch (const Error&) {
    fig["state_constraint_vertices"] = json::array();  // unbounded X: skip
  }
  std::ofstream cl(fs::path(opt.out_dir) / "closed_loop.csv");
  cl << "trial,step";
  for (Index i = 1; i <= cfg.system.plant.n(); ++i) cl << ",x" << i;
  cl << ",u1\n";
  json jtraj = json::array();
  Rng rng(seed ^ 0xf16aULL);
  DisturbanceSampler wsampler(cfg.system.constraints.Hw);
  const auto s_verts = result.s_vertices();
  for (size_t trial = 0; trial < s_verts.size(); ++trial) {
    Vector x = s_verts[trial];
    json pts = json::array();
    for (Index step = 0; step <= mc.horizon; ++step) {
      json pt = json::array();
      for (Index i = 0; i < x.size(); ++i) pt.push_back(x(i));
      pts.push_back(pt);
      Vector weights =
          rng.dirichlet(static_cast<Index>(cfg.system.constraints.scheduling_vertices.size()));
      Vector p = Vector::Zero(cfg.system.constraints.s());
      for (size_t j = 0; j < cfg.system.constraints.scheduling_vertices.size(); ++j)
        p += weights(static_cast<Index>(j)) * cfg.system.constraints.scheduling_vertices[j];
      const Vector u = gain_at(result.K, p) * x;
      cl << trial << "," << step;
      for (Index i = 0; i < x.size(); ++i) cl << "," << x(i);
      cl << "," << u(0) << "\n";
      x = cfg.system.plant.dynamics(p) * x + cfg.system.plant.B * u + wsampler.sample(rng);
    }
    jtraj.push_back(pts);
  }
  fig["trajectories"] = jtraj;
  write_json(fs::path(opt.out_dir) / "fig_invariant_set.json", fig);

  const bool ok = containment.pass && vertex.pass && stats.pass && lemma.pass;
  std::cout << (ok ? "verification passed" : "verification FAILED") << ": containment "
            << (containment.pass ? "ok" : "VIOLATED") << ", vertex invariance "
            << vertex.violations << " violations, monte carlo " << stats.violations
            << " violations (max norm " << stats.max_norm << ")\n";
  return ok ? kExitOk : kExitViolation;
}

int cmd_study(const Options& opt) {
  const auto cfg = load_config(opt);
  const json js = cfg.raw.value("study", json::object());
  StudyConfig study;
  study.synthesis = synthesis_config(cfg, opt);
  const json jg = cfg.raw.value("generate", json::object());
  if (!jg.contains("input_box")) throw CliError(kExitConfig, "generate.input_box is required");
  study.input_box = matrix_from(jg["input_box"]);
  study.x0 = jg.contains("x0") ? vector_from(jg["x0"]) : Vector::Zero(cfg.system.plant.n());
  std::vector<Index> T_list;
  for (const auto& t : js.value("T_list", json::array({20, 50, 100, 200})))
    T_list.push_back(t.get<Index>());
  const std::uint64_t seed = resolved_seed(cfg, opt, "study");

  const auto table = volume_vs_T(cfg.system.plant, T_list, study, seed);

  fs::create_directories(opt.out_dir);
  std::ofstream csv(fs::path(opt.out_dir) / "volume_vs_T.csv");
  csv << "T,volume,feasible,informative,rank_xpu,status\n";
  for (const auto& row : table.rows)
    csv << row.T << "," << row.volume << "," << row.feasible << "," << row.informative << ","
        << row.rank_xpu << "," << row.status << "\n";

  // Per-iteration volume curve at the largest T.
  const auto sig = generate_excitation(T_list.back(), study.input_box,
                                       cfg.system.constraints.scheduling_vertices,
                                       cfg.system.constraints.Hw, seed);
  const auto traj = simulate(cfg.system.plant, study.x0, sig.inputs, sig.scheduling,
                             sig.disturbances, cfg.system.constraints.scheduling_vertices);
  const auto dm = build_data_matrices(traj, cfg.system.constraints);
  const auto result = synthesize(dm, study.synthesis);
  std::ofstream iters(fs::path(opt.out_dir) / "volume_vs_iterations.csv");
  iters << "iteration,volume\n";
  for (size_t q = 0; q < result.volume_history.size(); ++q)
    iters << q + 1 << "," << result.volume_history[q] << "\n";

  std::cout << "study written to " << opt.out_dir << " (" << table.rows.size() << " rows; trend "
            << (table.trend_nondecreasing ? "non-decreasing" : "NOT monotone") << ")\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Data-driven robust control invariant set synthesis for LPV systems"};
  app.require_subcommand(1);
  app.fallthrough();  // accept global flags after the subcommand

  Options opt;
  app.add_option("--config", opt.config_path, "configuration JSON")->required();
  app.add_option("--out", opt.out_dir, "output directory (default: out)");
  app.add_option("--seed", opt.seed, "RNG seed override");
  app.add_option("--solver", opt.solver, "solver backend (clarabel | sdpa-files)");
  app.add_option("--traj", opt.traj_path, "trajectory CSV (overrides the config path)");
  app.add_option("--nc", opt.nc, "band preset: 2 (unit box) or 3");
  app.add_option("--max-iters", opt.max_iters, "iteration cap override");

  auto* generate = app.add_subcommand("generate", "simulate an excitation trajectory");
  auto* synthesize = app.add_subcommand("synthesize", "compute the invariant set and gains");
  auto* verify = app.add_subcommand("verify", "certify a synthesis result");
  auto* study = app.add_subcommand("study", "volume vs sample count and iterations");

  CLI11_PARSE(app, argc, argv);

  try {
    if (generate->parsed()) return cmd_generate(opt);
    if (synthesize->parsed()) return cmd_synthesize(opt);
    if (verify->parsed()) return cmd_verify(opt);
    if (study->parsed()) return cmd_study(opt);
  } catch (const CliError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return e.code;
  } catch (const ParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "unexpected error: " << e.what() << "\n";
    return 1;
  }
  return kExitConfig;
}
