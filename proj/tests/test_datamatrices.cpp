#include <doctest.h>

#include "rci/datamatrices.hpp"
#include "test_support.hpp"

using namespace rci;

namespace {

ConstraintSets scalar_constraints() {
  ConstraintSets cs;
  cs.Hx = Matrix::Identity(1, 1);
  cs.Hu = Matrix::Identity(1, 1);
  cs.Hw = Matrix::Identity(1, 1);
  cs.scheduling_vertices = {Vector::Ones(1)};
  return cs;
}

/// Residual-form membership oracle: every x_{k+1} − M[p_k⊗x_k; u_k] must lie
/// in the disturbance band, evaluated directly from the trajectory.
bool residual_membership(const Trajectory& traj, const Matrix& Hw, const Matrix& M, double tol) {
  for (Index k = 0; k < traj.T(); ++k) {
    Vector reg(M.cols());
    reg.head(traj.n() * traj.s()) =
        kron(traj.scheduling[static_cast<size_t>(k)], traj.states[static_cast<size_t>(k)]);
    reg.tail(traj.m()) = traj.inputs[static_cast<size_t>(k)];
    const Vector r = traj.states[static_cast<size_t>(k + 1)] - M * reg;
    if ((Hw * r).lpNorm<Eigen::Infinity>() > 1.0 + tol) return false;
  }
  return true;
}

}  // namespace

TEST_CASE("hand-expanded T=1 scalar example") {
  Trajectory traj;
  traj.states = {(Vector(1) << 2.0).finished(), (Vector(1) << 3.0).finished()};
  traj.inputs = {(Vector(1) << 5.0).finished()};
  traj.scheduling = {(Vector(1) << 1.0).finished()};
  const auto dm = build_data_matrices(traj, scalar_constraints());
  CHECK(dm.Xplus(0, 0) == 3.0);
  CHECK(dm.Xpu(0, 0) == 2.0);
  CHECK(dm.Xpu(1, 0) == 5.0);
  REQUIRE(dm.Z.rows() == 1);
  REQUIRE(dm.Z.cols() == 2);
  CHECK(dm.Z(0, 0) == 2.0);
  CHECK(dm.Z(0, 1) == 5.0);
  CHECK(dm.d(0) == 3.0);
}

TEST_CASE("benchmark shapes: Xpu is (ns+m) x T") {
  const auto traj = test::benchmark_trajectory(20, 42);
  const auto dm = build_data_matrices(traj, test::benchmark_constraints());
  CHECK(dm.Xpu.rows() == 5);
  CHECK(dm.Xpu.cols() == 20);
  CHECK(dm.Z.rows() == 40);
  CHECK(dm.Z.cols() == 10);
  // Column k of Xpu is [p_k ⊗ x_k; u_k].
  for (Index k = 0; k < dm.T; ++k) {
    const Vector expected_top =
        kron(traj.scheduling[static_cast<size_t>(k)], traj.states[static_cast<size_t>(k)]);
    CHECK((dm.Xpu.col(k).head(4) - expected_top).lpNorm<Eigen::Infinity>() == 0.0);
    CHECK(dm.Xpu(4, k) == traj.inputs[static_cast<size_t>(k)](0));
  }
}

TEST_CASE("zero trajectory produces zero Z and d") {
  Trajectory traj;
  for (int k = 0; k < 4; ++k) {
    traj.inputs.push_back(Vector::Zero(1));
    traj.scheduling.push_back((Vector(2) << 0.5, 0.5).finished());
  }
  for (int k = 0; k < 5; ++k) traj.states.push_back(Vector::Zero(2));
  const auto dm = build_data_matrices(traj, test::benchmark_constraints());
  CHECK(dm.Z.lpNorm<Eigen::Infinity>() == 0.0);
  CHECK(dm.d.lpNorm<Eigen::Infinity>() == 0.0);
}

TEST_CASE("vectorization identity") {
  CHECK(vectorize_check(Matrix::Identity(2, 2), Matrix::Identity(2, 2), Matrix::Identity(2, 2),
                        Matrix::Identity(2, 2)));
  Rng rng(17);
  for (int rep = 0; rep < 100; ++rep) {
    const Matrix A = test::random_matrix(rng, 3, 2);
    const Matrix B = test::random_matrix(rng, 2, 2);
    const Matrix C = test::random_matrix(rng, 2, 4);
    CHECK(vectorize_check(A, B, C, Matrix(A * B * C)));
    Matrix D = A * B * C;
    D(0, 0) += 1.0;
    CHECK_FALSE(vectorize_check(A, B, C, D));
  }
}

TEST_CASE("informativity on the benchmark data") {
  const auto cs = test::benchmark_constraints();
  const auto traj = test::benchmark_trajectory(20, 42);
  const auto dm = build_data_matrices(traj, cs);
  const auto rep = informativity(dm, cs);
  CHECK(rep.rank_xpu == 5);
  CHECK(rep.required_rank == 5);
  CHECK(rep.hw_full_column_rank);
  CHECK(rep.bounded);
}

TEST_CASE("short data cannot be informative") {
  const auto cs = test::benchmark_constraints();
  const auto traj = test::benchmark_trajectory(2, 42);
  const auto dm = build_data_matrices(traj, cs);
  const auto rep = informativity(dm, cs);
  CHECK(rep.rank_xpu <= 2);
  CHECK_FALSE(rep.bounded);
}

TEST_CASE("duplicate columns lower the rank") {
  const auto cs = test::benchmark_constraints();
  auto traj = test::benchmark_trajectory(20, 42);
  // Freeze the regressor: same state/input/scheduling at every step.
  for (Index k = 0; k < traj.T(); ++k) {
    traj.states[static_cast<size_t>(k)] = traj.states[0];
    traj.inputs[static_cast<size_t>(k)] = traj.inputs[0];
    traj.scheduling[static_cast<size_t>(k)] = traj.scheduling[0];
  }
  const auto dm = build_data_matrices(traj, cs);
  // SVD oracle: all columns equal, so exactly one nonzero singular value.
  Eigen::JacobiSVD<Matrix> svd(dm.Xpu);
  Index svd_rank = 0;
  for (Index i = 0; i < svd.singularValues().size(); ++i)
    if (svd.singularValues()(i) > 1e-8 * svd.singularValues()(0)) ++svd_rank;
  CHECK(svd_rank == 1);
  CHECK(informativity(dm, cs).rank_xpu == 1);
}

TEST_CASE("membership of the true and perturbed models") {
  const auto cs = test::benchmark_constraints();
  const auto plant = test::benchmark_plant();
  const auto traj = test::benchmark_trajectory(20, 42);
  const auto dm = build_data_matrices(traj, cs);

  CHECK(membership(dm, plant.stacked()).inside);

  Matrix bad = plant.stacked();
  bad(0, 0) += 10.0;
  CHECK_FALSE(membership(dm, bad).inside);
}

TEST_CASE("empty data is vacuously inside and flagged") {
  DataMatrices dm;  // T = 0
  const auto res = membership(dm, Matrix());
  CHECK(res.inside);
  CHECK(res.degenerate);
}

TEST_CASE("(Z,d) membership agrees with the residual form on random models") {
  const auto cs = test::benchmark_constraints();
  const auto plant = test::benchmark_plant();
  const auto traj = test::benchmark_trajectory(20, 42);
  const auto dm = build_data_matrices(traj, cs);
  Rng rng(23);
  Index agreements = 0;
  for (int rep = 0; rep < 100; ++rep) {
    // Mix near-feasible and far models so both verdicts occur.
    const double scale = rep % 2 ? 0.002 : 0.2;
    const Matrix M = plant.stacked() + test::random_matrix(rng, 2, 5, scale);
    const bool zd = membership(dm, M, 1e-9).inside;
    const bool residual = residual_membership(traj, cs.Hw, M, 1e-9);
    if (zd == residual) ++agreements;
  }
  CHECK(agreements == 100);
}

TEST_CASE("membership shrinks monotonically with more data") {
  const auto cs = test::benchmark_constraints();
  const auto plant = test::benchmark_plant();
  const auto traj = test::benchmark_trajectory(60, 42);
  const auto dm_long = build_data_matrices(traj, cs);
  const auto dm_short = build_data_matrices(traj.prefix(20), cs);
  Rng rng(29);
  for (int rep = 0; rep < 100; ++rep) {
    const Matrix M = plant.stacked() + test::random_matrix(rng, 2, 5, 0.01);
    if (membership(dm_long, M).inside) CHECK(membership(dm_short, M).inside);
  }
}

TEST_CASE("rank never exceeds min(ns+m, T)") {
  const auto cs = test::benchmark_constraints();
  for (Index T : {1, 2, 3, 5, 8, 20}) {
    const auto traj = test::benchmark_trajectory(T, 31);
    const auto dm = build_data_matrices(traj, cs);
    CHECK(informativity(dm, cs).rank_xpu <= std::min<Index>(5, T));
  }
}
