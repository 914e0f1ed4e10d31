#pragma once

#include <vector>

#include "rci/rng.hpp"
#include "rci/trajectory.hpp"

namespace rci::test {

/// Plant and constraint sets of the parameter-varying double-integrator
/// benchmark used across the integration tests.
inline LpvPlant benchmark_plant() {
  LpvPlant plant;
  plant.A.push_back((Matrix(2, 2) << 1.2, 1.2, 0.0, 1.2).finished());
  plant.A.push_back((Matrix(2, 2) << 0.8, 0.8, 0.0, 0.8).finished());
  plant.B = (Matrix(2, 1) << 1.0, 1.0).finished();
  return plant;
}

inline ConstraintSets benchmark_constraints() {
  ConstraintSets cs;
  cs.Hx = (Matrix(6, 2) << 0.10, 0.15,
                          -0.10, -0.10,
                           0.10, -0.15,
                          -0.10, 0.15,
                           0.00, 0.25,
                           0.00, -1.0 / 6.0).finished();
  cs.Hu = (Matrix(2, 1) << 1.0 / 3.0, -1.0 / 3.0).finished();
  cs.Hw = 10.0 * Matrix::Identity(2, 2);
  cs.scheduling_vertices = {(Vector(2) << 1.0, 0.0).finished(),
                            (Vector(2) << 0.0, 1.0).finished()};
  return cs;
}

inline Matrix benchmark_C2() { return Matrix::Identity(2, 2); }

inline Matrix benchmark_C3() {
  return (Matrix(3, 2) << 20.0, 20.0, -20.0, 0.0, 0.0, -25.0).finished();
}

inline Trajectory benchmark_trajectory(Index T, std::uint64_t seed) {
  const auto plant = benchmark_plant();
  const auto cs = benchmark_constraints();
  const Matrix box = (Matrix(1, 2) << -3.0, 3.0).finished();
  const auto sig = generate_excitation(T, box, cs.scheduling_vertices, cs.Hw, seed);
  return simulate(plant, Vector::Zero(2), sig.inputs, sig.scheduling, sig.disturbances,
                  cs.scheduling_vertices);
}

inline Matrix random_matrix(Rng& rng, Index rows, Index cols, double scale = 1.0) {
  Matrix m(rows, cols);
  for (Index r = 0; r < rows; ++r)
    for (Index c = 0; c < cols; ++c) m(r, c) = rng.uniform(-scale, scale);
  return m;
}

}  // namespace rci::test
