#include "rci/datamatrices.hpp"

#include <nlohmann/json.hpp>

namespace rci {

DataMatrices build_data_matrices(const Trajectory& traj, const ConstraintSets& constraints) {
  traj.validate();
  constraints.validate();
  if (constraints.Hw.cols() != traj.n())
    throw DimensionError("build_data_matrices: H_w columns != state dimension");

  DataMatrices dm;
  dm.T = traj.T();
  dm.n = traj.n();
  dm.m = traj.m();
  dm.s = traj.s();
  dm.n_w = constraints.nw();

  dm.Xplus.resize(dm.n, dm.T);
  dm.Xpu.resize(dm.n * dm.s + dm.m, dm.T);
  for (Index k = 0; k < dm.T; ++k) {
    dm.Xplus.col(k) = traj.states[static_cast<size_t>(k + 1)];
    dm.Xpu.col(k).head(dm.n * dm.s) =
        kron(traj.scheduling[static_cast<size_t>(k)], traj.states[static_cast<size_t>(k)]);
    dm.Xpu.col(k).tail(dm.m) = traj.inputs[static_cast<size_t>(k)];
  }

  dm.Z = kron(Matrix(dm.Xpu.transpose()), constraints.Hw);
  dm.d.resize(dm.T * dm.n_w);
  for (Index k = 0; k < dm.T; ++k)
    dm.d.segment(k * dm.n_w, dm.n_w) = constraints.Hw * dm.Xplus.col(k);
  return dm;
}

bool vectorize_check(const Matrix& A, const Matrix& B, const Matrix& C, const Matrix& D,
                     double tol) {
  if (A.cols() != B.rows() || B.cols() != C.rows())
    throw DimensionError("vectorize_check: ABC not conformable");
  if (D.rows() != A.rows() || D.cols() != C.cols())
    throw DimensionError("vectorize_check: D shape must match ABC");
  const Vector lhs = kron(Matrix(C.transpose()), A) * vec(B);
  const Vector direct = vec(Matrix(A * B * C));
  const Vector target = vec(D);
  return (lhs - target).lpNorm<Eigen::Infinity>() <= tol &&
         (direct - target).lpNorm<Eigen::Infinity>() <= tol;
}

InformativityReport informativity(const DataMatrices& dm, const ConstraintSets& constraints,
                                  double rank_rel_tol) {
  InformativityReport rep;
  rep.required_rank = dm.model_cols();
  rep.state_dim = dm.n;
  rep.rank_tol = rank_rel_tol;
  if (dm.Xpu.size() > 0) {
    Eigen::JacobiSVD<Matrix> svd(dm.Xpu);
    rep.sigma_max = svd.singularValues().size() ? svd.singularValues()(0) : 0.0;
    rep.rank_xpu = numeric_rank(dm.Xpu, rank_rel_tol);
  }
  rep.rank_hw = numeric_rank(constraints.Hw, rank_rel_tol);
  rep.hw_full_column_rank = rep.rank_hw == constraints.Hw.cols();
  rep.bounded = rep.rank_xpu == rep.required_rank && rep.hw_full_column_rank;
  return rep;
}

nlohmann::json InformativityReport::to_json() const {
  nlohmann::json j;
  j["rank_xpu"] = rank_xpu;
  j["required_rank"] = required_rank;
  j["rank_hw"] = rank_hw;
  j["state_dim"] = state_dim;
  j["hw_full_column_rank"] = hw_full_column_rank;
  j["bounded"] = bounded;
  j["sigma_max"] = sigma_max;
  j["rank_tol"] = rank_tol;
  return j;
}

MembershipResult membership(const DataMatrices& dm, const Matrix& M, double tol) {
  MembershipResult res;
  if (dm.T == 0) {
    res.inside = true;
    res.degenerate = true;
    return res;
  }
  if (M.rows() != dm.n || M.cols() != dm.model_cols())
    throw DimensionError("membership: M must be n × (ns+m)");
  const Vector zm = dm.Z * vec(M);
  const double upper = (zm - dm.d - Vector::Ones(zm.size())).maxCoeff();
  const double lower = (dm.d - Vector::Ones(zm.size()) - zm).maxCoeff();
  res.max_violation = std::max({upper, lower, 0.0});
  res.inside = res.max_violation <= tol;
  return res;
}

}  // namespace rci
