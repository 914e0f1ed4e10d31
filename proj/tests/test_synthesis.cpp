#include <doctest.h>

#include "rci/synthesis.hpp"
#include "rci/verify.hpp"
#include "test_support.hpp"

using namespace rci;

namespace {

SynthesisConfig benchmark_config(const Matrix& C) {
  SynthesisConfig cfg;
  cfg.C = C;
  cfg.constraints = test::benchmark_constraints();
  cfg.max_iters = 5;
  cfg.rel_vol_tol = 1e-3;
  return cfg;
}

}  // namespace

TEST_CASE("initial scaling") {
  SUBCASE("benchmark constraints give alpha = 4") {
    auto cfg = benchmark_config(test::benchmark_C2());
    const auto thetas = enumerate_vertices(PolytopeH::band(cfg.C)).vertices;
    const auto pt = init_iteration(cfg, thetas);
    // LP oracle: max_i,r (H_x θⁱ)_r = 0.25 over the 24 linear conditions.
    double max_entry = 0.0;
    for (const auto& theta : thetas)
      max_entry = std::max(max_entry, (cfg.constraints.Hx * theta).maxCoeff());
    CHECK(max_entry == doctest::Approx(0.25).epsilon(1e-15));
    CHECK((pt.W - 4.0 * Matrix::Identity(2, 2)).lpNorm<Eigen::Infinity>() <= 1e-12);
    CHECK(pt.X.size() == 16);
    for (const auto& x : pt.X) CHECK((x - Matrix::Identity(2, 2)).lpNorm<Eigen::Infinity>() == 0.0);
  }
  SUBCASE("unconstrained state set hits the cap") {
    auto cfg = benchmark_config(test::benchmark_C2());
    cfg.constraints.Hx = Matrix::Zero(6, 2);
    const auto thetas = enumerate_vertices(PolytopeH::band(cfg.C)).vertices;
    const auto pt = init_iteration(cfg, thetas);
    CHECK(pt.W(0, 0) == doctest::Approx(1e3));
  }
  SUBCASE("scalar system") {
    SynthesisConfig cfg;
    cfg.C = Matrix::Identity(1, 1);
    cfg.constraints.Hx = (Matrix(2, 1) << 0.5, -0.4).finished();
    cfg.constraints.Hu = Matrix::Identity(1, 1);
    cfg.constraints.Hw = Matrix::Identity(1, 1);
    cfg.constraints.scheduling_vertices = {Vector::Ones(1)};
    const auto thetas = enumerate_vertices(PolytopeH::band(cfg.C)).vertices;
    const auto pt = init_iteration(cfg, thetas);
    CHECK(pt.W(0, 0) == doctest::Approx(2.0).epsilon(1e-12));  // 1 / max|H_x|
  }
}

TEST_CASE("gain extraction") {
  SUBCASE("N built from W gives identity gains") {
    Matrix W(2, 2);
    W << 1.5, 0.2, -0.3, 0.9;
    Matrix N(2, 4);
    N << W, W;
    const auto K = extract_gains(W, N, 2);
    REQUIRE(K.size() == 2);
    for (const auto& k : K)
      CHECK((k - Matrix::Identity(2, 2)).lpNorm<Eigen::Infinity>() <= 1e-12);
  }
  SUBCASE("random round trip") {
    Rng rng(13);
    const Matrix W = test::random_matrix(rng, 3, 3) + 3.0 * Matrix::Identity(3, 3);
    const Matrix N = test::random_matrix(rng, 2, 6);
    const auto K = extract_gains(W, N, 2);
    for (Index l = 0; l < 2; ++l)
      CHECK((K[static_cast<size_t>(l)] * W - N.middleCols(l * 3, 3)).lpNorm<Eigen::Infinity>() <=
            1e-10);
  }
  SUBCASE("published gains reproduce N = K·W within print precision") {
    Matrix W2(2, 2);
    W2 << 6.02, -0.79, 0.02, 2.15;
    Matrix K1(1, 2), K2(1, 2);
    K1 << -0.11, -0.73;
    K2 << -0.18, -0.94;
    Matrix N(1, 4);
    N << K1 * W2, K2 * W2;
    const auto K = extract_gains(W2, N, 2);
    CHECK((K[0] - K1).lpNorm<Eigen::Infinity>() <= 5e-3);
    CHECK((K[1] - K2).lpNorm<Eigen::Infinity>() <= 5e-3);
  }
  SUBCASE("singular W is rejected") {
    CHECK_THROWS_AS(extract_gains(Matrix::Zero(2, 2), Matrix::Zero(1, 4), 2), Error);
  }
}

TEST_CASE("benchmark synthesis, complexity 2") {
  const auto cs = test::benchmark_constraints();
  const auto traj = test::benchmark_trajectory(20, 42);
  const auto dm = build_data_matrices(traj, cs);
  const auto cfg = benchmark_config(test::benchmark_C2());
  const auto result = synthesize(dm, cfg);

  REQUIRE(result.feasible);
  CHECK(result.volume() > 10.0);
  CHECK(result.volume() < 100.0);

  // Monotone volume within solver noise.
  for (size_t q = 1; q < result.volume_history.size(); ++q)
    CHECK(result.volume_history[q] >= result.volume_history[q - 1] * (1.0 - 1e-6));

  // Controller-scheduling identity K(p)x = N[p ⊗ W⁻¹x] on random samples.
  Rng rng(55);
  const Matrix Winv = result.W.inverse();
  for (int rep = 0; rep < 100; ++rep) {
    const double a = rng.uniform();
    const Vector p = (Vector(2) << a, 1.0 - a).finished();
    const Vector x = test::random_matrix(rng, 2, 1, 5.0);
    const Vector via_gain = gain_at(result.K, p) * x;
    const Vector via_n = result.N * kron(p, Vector(Winv * x));
    CHECK((via_gain - via_n).lpNorm<Eigen::Infinity>() <= 1e-9);
  }

  // Vertex constraints hold at the returned iterate.
  const auto containment = check_containment(result, cs);
  CHECK(containment.pass);
  CHECK(containment.max_state <= 1.0 + 1e-7);
  CHECK(containment.max_input <= 1.0 + 1e-7);
}

TEST_CASE("complexity 3 dominates complexity 2 on identical data") {
  const auto cs = test::benchmark_constraints();
  const auto traj = test::benchmark_trajectory(20, 42);
  const auto dm = build_data_matrices(traj, cs);
  const auto r2 = synthesize(dm, benchmark_config(test::benchmark_C2()));
  const auto r3 = synthesize(dm, benchmark_config(test::benchmark_C3()));
  REQUIRE(r2.feasible);
  REQUIRE(r3.feasible);
  CHECK(r3.volume() >= r2.volume());
}

TEST_CASE("uninformative data is refused unless overridden") {
  const auto cs = test::benchmark_constraints();
  const auto traj = test::benchmark_trajectory(2, 42);
  const auto dm = build_data_matrices(traj, cs);
  const auto cfg = benchmark_config(test::benchmark_C2());
  const auto result = synthesize(dm, cfg);
  CHECK_FALSE(result.feasible);
  CHECK(result.message.find("not informative") != std::string::npos);
}

TEST_CASE("hundredfold disturbance bound: no crash, infeasible or tiny") {
  const auto cs = test::benchmark_constraints();
  const auto plant = test::benchmark_plant();
  // Claimed disturbance band 100× wider than the real one.
  ConstraintSets wide = cs;
  wide.Hw = cs.Hw / 100.0;
  const auto traj = test::benchmark_trajectory(20, 42);
  const auto dm = build_data_matrices(traj, wide);
  auto cfg = benchmark_config(test::benchmark_C2());
  cfg.constraints = wide;
  const auto result = synthesize(dm, cfg);
  if (result.feasible) {
    // If a set exists at all it must still be certified and state-feasible.
    CHECK(check_containment(result, wide).pass);
  } else {
    CHECK_FALSE(result.message.empty());
  }
}
