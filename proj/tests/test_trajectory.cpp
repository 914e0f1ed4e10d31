#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "rci/trajectory.hpp"
#include "test_support.hpp"

using namespace rci;

namespace fs = std::filesystem;

namespace {

fs::path temp_file(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "rci_tests";
  fs::create_directories(dir);
  return dir / name;
}

}  // namespace

TEST_CASE("trivial dynamics follow the recursion exactly") {
  const Vector x0 = (Vector(2) << 3.0, -1.0).finished();
  std::vector<Vector> u(5, Vector::Zero(1));
  std::vector<Vector> p(5, (Vector(2) << 0.5, 0.5).finished());
  std::vector<Vector> w(5, Vector::Zero(2));
  const auto verts = test::benchmark_constraints().scheduling_vertices;

  LpvPlant identity;
  identity.A = {Matrix::Identity(2, 2), Matrix::Identity(2, 2)};
  identity.B = Matrix::Zero(2, 1);
  for (const auto& x : simulate(identity, x0, u, p, w, verts).states)
    CHECK((x - x0).lpNorm<Eigen::Infinity>() == 0.0);

  LpvPlant zero;
  zero.A = {Matrix::Zero(2, 2), Matrix::Zero(2, 2)};
  zero.B = Matrix::Zero(2, 1);
  const auto traj = simulate(zero, x0, u, p, w, verts);
  CHECK((traj.states[0] - x0).lpNorm<Eigen::Infinity>() == 0.0);
  for (size_t k = 1; k < traj.states.size(); ++k)
    CHECK(traj.states[k].lpNorm<Eigen::Infinity>() == 0.0);
}

TEST_CASE("benchmark plant single step") {
  const auto plant = test::benchmark_plant();
  const auto verts = test::benchmark_constraints().scheduling_vertices;
  const auto traj = simulate(plant, (Vector(2) << 1.0, 0.0).finished(),
                             {Vector::Zero(1)}, {(Vector(2) << 1.0, 0.0).finished()},
                             {Vector::Zero(2)}, verts);
  CHECK(traj.states[1](0) == doctest::Approx(1.2).epsilon(1e-15));
  CHECK(traj.states[1](1) == doctest::Approx(0.0).epsilon(1e-15));
}

TEST_CASE("replay identity: recorded disturbances reproduce the residuals") {
  Rng rng(3);
  LpvPlant plant;
  plant.A = {test::random_matrix(rng, 3, 3), test::random_matrix(rng, 3, 3)};
  plant.B = test::random_matrix(rng, 3, 2);
  std::vector<Vector> verts = {(Vector(2) << 1, 0).finished(), (Vector(2) << 0, 1).finished()};

  std::vector<Vector> u, p, w;
  for (int k = 0; k < 40; ++k) {
    u.push_back(test::random_matrix(rng, 2, 1, 2.0));
    const double a = rng.uniform();
    p.push_back((Vector(2) << a, 1.0 - a).finished());
    w.push_back(test::random_matrix(rng, 3, 1, 0.1));
  }
  const auto traj = simulate(plant, test::random_matrix(rng, 3, 1), u, p, w, verts);

  const Matrix M = plant.stacked();
  double worst = 0.0;
  for (Index k = 0; k < traj.T(); ++k) {
    Vector reg(M.cols());
    reg.head(6) = kron(traj.scheduling[static_cast<size_t>(k)], traj.states[static_cast<size_t>(k)]);
    reg.tail(2) = traj.inputs[static_cast<size_t>(k)];
    const Vector residual = traj.states[static_cast<size_t>(k + 1)] - M * reg -
                            traj.disturbances[static_cast<size_t>(k)];
    worst = std::max(worst, residual.lpNorm<Eigen::Infinity>());
  }
  CHECK(worst <= 1e-12);
}

TEST_CASE("scheduling outside the polytope is rejected with the step index") {
  const auto plant = test::benchmark_plant();
  const auto verts = test::benchmark_constraints().scheduling_vertices;
  std::vector<Vector> p = {(Vector(2) << 0.5, 0.5).finished(),
                           (Vector(2) << 0.7, 0.6).finished()};  // sums to 1.3
  std::vector<Vector> u(2, Vector::Zero(1)), w(2, Vector::Zero(2));
  try {
    simulate(plant, Vector::Zero(2), u, p, w, verts);
    FAIL("expected rejection");
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find("step 1") != std::string::npos);
  }
}

TEST_CASE("excitation is reproducible, in bounds, and hits the simplex") {
  const auto cs = test::benchmark_constraints();
  const Matrix box = (Matrix(1, 2) << -3.0, 3.0).finished();
  const auto a = generate_excitation(20, box, cs.scheduling_vertices, cs.Hw, 99);
  const auto b = generate_excitation(20, box, cs.scheduling_vertices, cs.Hw, 99);
  REQUIRE(a.inputs.size() == 20);
  for (size_t k = 0; k < 20; ++k) {
    CHECK(a.inputs[k](0) == b.inputs[k](0));  // bit-reproducible
    CHECK(a.inputs[k](0) >= -3.0);
    CHECK(a.inputs[k](0) <= 3.0);
    CHECK(a.scheduling[k].sum() == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(a.scheduling[k].minCoeff() >= 0.0);
    CHECK(in_convex_hull(a.scheduling[k], cs.scheduling_vertices, 1e-9));
    CHECK((cs.Hw * a.disturbances[k]).lpNorm<Eigen::Infinity>() <= 1.0);
    CHECK((a.scheduling[k] - b.scheduling[k]).lpNorm<Eigen::Infinity>() == 0.0);
    CHECK((a.disturbances[k] - b.disturbances[k]).lpNorm<Eigen::Infinity>() == 0.0);
  }
}

TEST_CASE("degenerate input box gives exactly zero inputs") {
  const auto cs = test::benchmark_constraints();
  const Matrix box = (Matrix(1, 2) << 0.0, 0.0).finished();
  const auto sig = generate_excitation(5, box, cs.scheduling_vertices, cs.Hw, 1);
  for (const auto& u : sig.inputs) CHECK(u(0) == 0.0);
}

TEST_CASE("csv round trip is exact") {
  const auto traj = test::benchmark_trajectory(20, 42);
  const auto path = temp_file("roundtrip.csv");
  save_trajectory_csv(traj, path);
  const auto loaded = load_trajectory_csv(path);
  REQUIRE(loaded.T() == traj.T());
  CHECK(loaded.has_disturbances());
  for (Index k = 0; k <= traj.T(); ++k)
    CHECK((loaded.states[static_cast<size_t>(k)] - traj.states[static_cast<size_t>(k)])
              .lpNorm<Eigen::Infinity>() == 0.0);
  for (Index k = 0; k < traj.T(); ++k) {
    CHECK((loaded.inputs[static_cast<size_t>(k)] - traj.inputs[static_cast<size_t>(k)])
              .lpNorm<Eigen::Infinity>() == 0.0);
    CHECK((loaded.scheduling[static_cast<size_t>(k)] - traj.scheduling[static_cast<size_t>(k)])
              .lpNorm<Eigen::Infinity>() == 0.0);
    CHECK((loaded.disturbances[static_cast<size_t>(k)] - traj.disturbances[static_cast<size_t>(k)])
              .lpNorm<Eigen::Infinity>() == 0.0);
  }
}

TEST_CASE("truncated csv reports the offending line") {
  const auto path = temp_file("truncated.csv");
  {
    std::ofstream out(path);
    out << "x1,x2,u1,p1,p2\n";
    out << "0,0,1,0.5,0.5\n";
    out << "1,2,0.5\n";  // too few fields on line 3
  }
  try {
    load_trajectory_csv(path);
    FAIL("expected parse error");
  } catch (const ParseError& e) {
    CHECK(e.line == 3);
  }
}

TEST_CASE("empty trajectory file is rejected") {
  const auto path = temp_file("empty.csv");
  {
    std::ofstream out(path);
    out << "x1,x2,u1,p1,p2\n";
    out << "0,0,,,\n";  // only a terminal state
  }
  CHECK_THROWS_WITH_AS(load_trajectory_csv(path),
                       doctest::Contains("empty trajectory"), ParseError);
}

TEST_CASE("system config json round trip") {
  SystemConfig cfg{test::benchmark_plant(), test::benchmark_constraints()};
  const auto path = temp_file("system.json");
  save_system_json(cfg, path);
  const auto loaded = load_system_json(path);
  CHECK((loaded.plant.stacked() - cfg.plant.stacked()).lpNorm<Eigen::Infinity>() == 0.0);
  CHECK((loaded.constraints.Hx - cfg.constraints.Hx).lpNorm<Eigen::Infinity>() == 0.0);
  CHECK((loaded.constraints.Hw - cfg.constraints.Hw).lpNorm<Eigen::Infinity>() == 0.0);
  CHECK(loaded.constraints.scheduling_vertices.size() == 2);
  CHECK(plant_hash(loaded.plant) == plant_hash(cfg.plant));
}

TEST_CASE("missing plant file") {
  CHECK_THROWS_AS(load_system_json("/nonexistent/plant.json"), Error);
}

TEST_CASE("disturbance sampler handles non-identity H_w by rejection") {
  Matrix Hw(2, 2);
  Hw << 10.0, 2.0, 0.0, 8.0;
  DisturbanceSampler sampler(Hw);
  Rng rng(5);
  for (int i = 0; i < 200; ++i) {
    const Vector w = sampler.sample(rng);
    CHECK((Hw * w).lpNorm<Eigen::Infinity>() <= 1.0);
  }
}
