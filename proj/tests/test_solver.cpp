#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "rci/solver.hpp"
#include "test_support.hpp"

using namespace rci;

namespace {

/// max log det(W_obj) s.t. W_obj ⪯ I — analytic optimum W_obj = I, value 0.
LmiProgram cap_program(Index n) {
  LmiProgram prog;
  const Index Wobj = prog.add_variable("W_obj", n, n, VarKind::Symmetric);
  PsdBlock& cap = prog.add_psd_block("cap", n);
  for (Index r = 0; r < n; ++r)
    for (Index c = r; c < n; ++c) {
      AffineExpr e;
      if (r == c) e.constant = 1.0;
      e.add(prog.scalar_index(Wobj, r, c), -1.0);
      cap.set(r, c, std::move(e));
    }
  cap.normalize();
  prog.set_logdet_objective(Wobj);
  return prog;
}

}  // namespace

TEST_CASE("analytic log det optimum") {
  const auto prog = cap_program(2);
  SolverOptions opts;
  const auto res = solve(prog, opts);
  REQUIRE(res.status == SolveStatus::optimal);
  CHECK(res.objective == doctest::Approx(0.0).epsilon(1e-6));
  const Matrix Wobj = res.assignments.at("W_obj");
  CHECK((Wobj - Matrix::Identity(2, 2)).lpNorm<Eigen::Infinity>() <= 1e-5);
}

TEST_CASE("infeasible toy program") {
  LmiProgram prog;
  const Index x = prog.add_variable("x", 1, 1, VarKind::Scalar);
  AffineExpr ge1;  // x − 1 ≥ 0
  ge1.constant = -1.0;
  ge1.add(prog.scalar_index(x, 0, 0), 1.0);
  prog.add_linear("x>=1", std::move(ge1));
  AffineExpr le0;  // −x ≥ 0
  le0.add(prog.scalar_index(x, 0, 0), -1.0);
  prog.add_linear("x<=0", std::move(le0));
  AffineExpr obj;
  obj.add(prog.scalar_index(x, 0, 0), 1.0);
  prog.add_linear_objective(obj);
  const auto res = solve(prog, SolverOptions{});
  CHECK(res.status == SolveStatus::infeasible);
}

TEST_CASE("plain linear objective") {
  LmiProgram prog;
  const Index r = prog.add_variable("r", 1, 1, VarKind::Scalar);
  AffineExpr cap;  // 3 − r ≥ 0
  cap.constant = 3.0;
  cap.add(prog.scalar_index(r, 0, 0), -1.0);
  prog.add_linear("cap", std::move(cap));
  prog.add_nonneg_variable(r);
  AffineExpr obj;
  obj.add(prog.scalar_index(r, 0, 0), 1.0);
  prog.add_linear_objective(obj);
  const auto res = solve(prog, SolverOptions{});
  REQUIRE(res.status == SolveStatus::optimal);
  CHECK(res.objective == doctest::Approx(3.0).epsilon(1e-7));
  CHECK(res.assignments.at("r")(0, 0) == doctest::Approx(3.0).epsilon(1e-7));
}

TEST_CASE("unknown backend is a configuration error") {
  SolverOptions opts;
  opts.backend = "does-not-exist";
  CHECK_THROWS_WITH_AS(solve(cap_program(2), opts), doctest::Contains("unknown solver backend"),
                       Error);
}

TEST_CASE("verify_solution recomputes certificates from raw data") {
  const auto prog = cap_program(2);
  auto res = solve(prog, SolverOptions{});
  REQUIRE(res.status == SolveStatus::optimal);

  auto rep = verify_solution(prog, res, 1e-6);
  CHECK(rep.pass);
  CHECK(rep.min_eigenvalue >= -1e-6);
  REQUIRE(rep.blocks.size() == 1);
  CHECK(rep.blocks[0].name == "cap");

  // Hand-corrupt the point: W_obj = 2I violates the cap block.
  Vector bad = res.x;
  prog.set_value(*prog.find_variable("W_obj"), Matrix(2.0 * Matrix::Identity(2, 2)), bad);
  SolveResult corrupted = res;
  corrupted.x = bad;
  auto rep_bad = verify_solution(prog, corrupted, 1e-6);
  CHECK_FALSE(rep_bad.pass);
  CHECK(rep_bad.min_eigenvalue <= -0.9);
  CHECK(rep_bad.worst_block == "cap");
}

TEST_CASE("verify_solution on an empty program") {
  LmiProgram prog;
  SolveResult res;
  res.x = Vector();
  const auto rep = verify_solution(prog, res, 1e-6);
  CHECK(rep.blocks.empty());
  CHECK(rep.pass);
}

TEST_CASE("sdpa export golden file") {
  LmiProgram prog;
  const Index y = prog.add_variable("y", 1, 1, VarKind::Scalar);
  PsdBlock& blk = prog.add_psd_block("band", 2);
  blk.set(0, 0, prog.entry(y, 0, 0));
  AffineExpr off;
  off.constant = 1.0;
  blk.set(0, 1, std::move(off));
  blk.set(1, 1, prog.entry(y, 0, 0));
  blk.normalize();
  AffineExpr cap;
  cap.constant = 5.0;
  cap.add(prog.scalar_index(y, 0, 0), -1.0);
  prog.add_linear("cap", std::move(cap));
  AffineExpr obj;
  obj.add(prog.scalar_index(y, 0, 0), 1.0);
  prog.add_linear_objective(obj);

  std::ostringstream out;
  write_sdpa(prog, out, "tiny");
  const std::string expected =
      "*RCI-LMI export \"tiny\"\n"
      "*objective: minimize c'x with c = -(linear objective)\n"
      "1\n"
      "2\n"
      "2 -1\n"
      "-1\n"
      "1 1 1 1 1\n"
      "0 1 1 2 -1\n"
      "1 1 2 2 1\n"
      "0 2 1 1 -5\n"
      "1 2 1 1 -1\n";
  CHECK(out.str() == expected);
}

TEST_CASE("sdpa solution import") {
  {
    std::istringstream in("phase.value = pdOPT\nxVec = {1.5, -2.25e-1}\nyMat = {...}\n");
    const Vector x = read_sdpa_solution(in, 2);
    CHECK(x(0) == 1.5);
    CHECK(x(1) == -0.225);
  }
  {
    std::istringstream in("0.5\n1.25 3\n");
    const Vector x = read_sdpa_solution(in, 3);
    CHECK(x(2) == 3.0);
  }
  {
    std::istringstream in("1 2 3");
    CHECK_THROWS_AS(read_sdpa_solution(in, 2), ParseError);
  }
}

TEST_CASE("sdpa-files backend round trip") {
  namespace fs = std::filesystem;
  const fs::path dir = fs::temp_directory_path() / "rci_sdpa_exchange";
  fs::remove_all(dir);

  LmiProgram prog;
  const Index r = prog.add_variable("r", 1, 1, VarKind::Scalar);
  AffineExpr cap;
  cap.constant = 3.0;
  cap.add(prog.scalar_index(r, 0, 0), -1.0);
  prog.add_linear("cap", std::move(cap));
  AffineExpr obj;
  obj.add(prog.scalar_index(r, 0, 0), 1.0);
  prog.add_linear_objective(obj);

  SolverOptions opts;
  opts.backend = "sdpa-files";
  opts.exchange_dir = dir.string();
  opts.program_name = "toy";

  // First call exports the problem and asks for a solution file.
  CHECK_THROWS_WITH_AS(solve(prog, opts), doctest::Contains("toy.result"), Error);
  CHECK(fs::exists(dir / "toy.dat-s"));

  {
    std::ofstream sol(dir / "toy.result");
    sol << "xVec = {2.5}\n";
  }
  const auto res = solve(prog, opts);
  CHECK(res.status == SolveStatus::near_optimal);
  CHECK(res.backend == "sdpa-files");
  CHECK(res.assignments.at("r")(0, 0) == 2.5);
  CHECK(verify_solution(prog, res, 1e-9).pass);
}

TEST_CASE("RCI_SOLVER environment variable picks the default backend") {
  SolverOptions opts;
  setenv("RCI_SOLVER", "sdpa-files", 1);
  CHECK(opts.resolved_backend() == "sdpa-files");
  unsetenv("RCI_SOLVER");
  CHECK(opts.resolved_backend() == "clarabel");
  opts.backend = "explicit";
  CHECK(opts.resolved_backend() == "explicit");
}
