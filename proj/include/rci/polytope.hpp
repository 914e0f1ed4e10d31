#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "rci/linalg.hpp"

namespace rci {

/// H-representation H·x ≤ h. The 0-symmetric band form −1 ≤ C·x ≤ 1 is kept
/// alongside its expansion so callers can recover C.
template <typename Scalar>
struct BasicPolytopeH {
  DenseMatrix<Scalar> H;
  DenseVector<Scalar> h;
  bool symmetric_band = false;
  DenseMatrix<Scalar> C;  // valid when symmetric_band

  static BasicPolytopeH band(const DenseMatrix<Scalar>& c) {
    BasicPolytopeH p;
    p.symmetric_band = true;
    p.C = c;
    p.H.resize(2 * c.rows(), c.cols());
    p.H << c, -c;
    p.h = DenseVector<Scalar>::Ones(2 * c.rows());
    return p;
  }

  static BasicPolytopeH general(const DenseMatrix<Scalar>& H, const DenseVector<Scalar>& h) {
    if (H.rows() != h.size()) throw DimensionError("PolytopeH: H rows != h size");
    BasicPolytopeH p;
    p.H = H;
    p.h = h;
    return p;
  }

  Index dim() const { return H.cols(); }

  bool contains(const DenseVector<Scalar>& x, double tol) const {
    if (x.size() != dim()) throw DimensionError("PolytopeH::contains: dimension mismatch");
    if (H.rows() == 0) return true;
    return ((H * x - h).array() <= tol).all();
  }

  /// max_i (H x − h)_i; negative strictly inside.
  Scalar margin(const DenseVector<Scalar>& x) const {
    if (H.rows() == 0) return Scalar(-1);
    return (H * x - h).maxCoeff();
  }
};

template <typename Scalar>
struct BasicPolytopeV {
  std::vector<DenseVector<Scalar>> vertices;

  Index dim() const { return vertices.empty() ? 0 : vertices.front().size(); }

  bool symmetric(double tol = 1e-9) const;
};

using PolytopeH = BasicPolytopeH<double>;
using PolytopeV = BasicPolytopeV<double>;

namespace detail {

/// Visits all k-subsets of {0..m-1}.
template <typename F>
void for_each_combination(Index m, Index k, F&& f) {
  if (k > m || k < 0) return;
  std::vector<Index> idx(static_cast<size_t>(k));
  std::iota(idx.begin(), idx.end(), Index{0});
  while (true) {
    f(idx);
    Index i = k - 1;
    while (i >= 0 && idx[static_cast<size_t>(i)] == m - k + i) --i;
    if (i < 0) break;
    ++idx[static_cast<size_t>(i)];
    for (Index j = i + 1; j < k; ++j) idx[static_cast<size_t>(j)] = idx[static_cast<size_t>(j - 1)] + 1;
  }
}

}  // namespace detail

/// True if x is a convex combination of the given points (within tol).
template <typename Scalar>
bool in_convex_hull(const DenseVector<Scalar>& x,
                    const std::vector<DenseVector<Scalar>>& points, double tol = 1e-9) {
  if (points.empty()) return false;
  const Index d = points.front().size();
  if (x.size() != d) throw DimensionError("in_convex_hull: dimension mismatch");
  Scalar scale = x.template lpNorm<Eigen::Infinity>();
  for (const auto& p : points) scale = std::max(scale, p.template lpNorm<Eigen::Infinity>());
  const double eps = tol * (1.0 + static_cast<double>(scale));

  DenseVector<Scalar> target(d + 1);
  target << x, Scalar(1);
  const Index v = static_cast<Index>(points.size());
  const Index kmax = std::min(v, d + 1);
  // Caratheodory: membership is witnessed by some affinely independent subset.
  for (Index k = 1; k <= kmax; ++k) {
    bool found = false;
    detail::for_each_combination(v, k, [&](const std::vector<Index>& idx) {
      if (found) return;
      DenseMatrix<Scalar> A(d + 1, k);
      for (Index j = 0; j < k; ++j) {
        A.col(j).head(d) = points[static_cast<size_t>(idx[static_cast<size_t>(j)])];
        A(d, j) = Scalar(1);
      }
      DenseVector<Scalar> lambda = A.completeOrthogonalDecomposition().solve(target);
      if ((A * lambda - target).template lpNorm<Eigen::Infinity>() <= eps &&
          lambda.minCoeff() >= -tol)
        found = true;
    });
    if (found) return true;
  }
  return false;
}

template <typename Scalar>
bool BasicPolytopeV<Scalar>::symmetric(double tol) const {
  for (const auto& v : vertices) {
    bool matched = false;
    for (const auto& w : vertices)
      if ((v + w).template lpNorm<Eigen::Infinity>() <= tol * (1.0 + v.template lpNorm<Eigen::Infinity>())) {
        matched = true;
        break;
      }
    if (!matched) return false;
  }
  return true;
}

/// Exact vertex enumeration of a bounded H-polytope by active-set search:
/// every n-subset of rows is solved and kept when feasible. Throws on
/// rank-deficient or unbounded input.
template <typename Scalar>
BasicPolytopeV<Scalar> enumerate_vertices(const BasicPolytopeH<Scalar>& poly, double tol = 1e-9) {
  const Index n = poly.dim();
  const Index m = poly.H.rows();
  if (n < 1) throw DimensionError("enumerate_vertices: empty dimension");
  if (numeric_rank(Matrix(poly.H.template cast<double>())) < n)
    throw Error("enumerate_vertices: polytope is unbounded (rank-deficient H)");

  const double row_scale = poly.H.template lpNorm<Eigen::Infinity>();

  // Recession-cone scan: a nonzero ray satisfying H d <= 0 lies on n-1
  // linearly independent active rows; finding one means the set is unbounded.
  {
    bool unbounded = false;
    detail::for_each_combination(m, n - 1, [&](const std::vector<Index>& idx) {
      if (unbounded) return;
      DenseMatrix<Scalar> sub(n - 1, n);
      for (Index j = 0; j < n - 1; ++j) sub.row(j) = poly.H.row(idx[static_cast<size_t>(j)]);
      Eigen::FullPivLU<DenseMatrix<Scalar>> lu(sub);
      lu.setThreshold(1e-10);
      const auto kernel = lu.kernel();
      for (Index c = 0; c < kernel.cols(); ++c) {
        DenseVector<Scalar> dir = kernel.col(c);
        const double norm = dir.template lpNorm<Eigen::Infinity>();
        if (norm <= 0) continue;
        dir /= norm;
        const double eps = tol * (1.0 + row_scale);
        if (((poly.H * dir).array() <= eps).all() || ((poly.H * (-dir)).array() <= eps).all())
          unbounded = true;
      }
    });
    if (unbounded) throw Error("enumerate_vertices: polytope is unbounded (recession ray found)");
  }

  std::vector<DenseVector<Scalar>> candidates;
  detail::for_each_combination(m, n, [&](const std::vector<Index>& idx) {
    DenseMatrix<Scalar> sub(n, n);
    DenseVector<Scalar> rhs(n);
    for (Index j = 0; j < n; ++j) {
      sub.row(j) = poly.H.row(idx[static_cast<size_t>(j)]);
      rhs(j) = poly.h(idx[static_cast<size_t>(j)]);
    }
    Eigen::FullPivLU<DenseMatrix<Scalar>> lu(sub);
    lu.setThreshold(1e-10);
    if (!lu.isInvertible()) return;
    DenseVector<Scalar> x = lu.solve(rhs);
    const double eps = tol * (1.0 + static_cast<double>(x.template lpNorm<Eigen::Infinity>())) *
                       (1.0 + row_scale);
    if (((poly.H * x - poly.h).array() <= eps).all()) candidates.push_back(std::move(x));
  });

  // Merge duplicates relative to the polytope diameter.
  Scalar diameter(0);
  for (const auto& c : candidates) diameter = std::max(diameter, c.template lpNorm<Eigen::Infinity>());
  const double merge_eps = 1e-9 * (1.0 + 2.0 * static_cast<double>(diameter));

  BasicPolytopeV<Scalar> out;
  for (const auto& c : candidates) {
    bool dup = false;
    for (const auto& v : out.vertices)
      if ((c - v).template lpNorm<Eigen::Infinity>() <= merge_eps) {
        dup = true;
        break;
      }
    if (!dup) out.vertices.push_back(c);
  }
  std::sort(out.vertices.begin(), out.vertices.end(),
            [](const DenseVector<Scalar>& a, const DenseVector<Scalar>& b) {
              for (Index i = 0; i < a.size(); ++i)
                if (a(i) != b(i)) return a(i) < b(i);
              return false;
            });
  return out;
}

namespace detail {

template <typename Scalar>
Scalar hull_volume_impl(std::vector<DenseVector<Scalar>> pts, Index d);

/// 2-D convex polygon area: angular sort around the centroid + shoelace.
template <typename Scalar>
Scalar polygon_area(const std::vector<DenseVector<Scalar>>& pts) {
  if (pts.size() < 3) return Scalar(0);
  DenseVector<Scalar> c = DenseVector<Scalar>::Zero(2);
  for (const auto& p : pts) c += p;
  c /= Scalar(static_cast<double>(pts.size()));
  std::vector<DenseVector<Scalar>> sorted = pts;
  std::sort(sorted.begin(), sorted.end(), [&](const auto& a, const auto& b) {
    return std::atan2(static_cast<double>(a(1) - c(1)), static_cast<double>(a(0) - c(0))) <
           std::atan2(static_cast<double>(b(1) - c(1)), static_cast<double>(b(0) - c(0)));
  });
  Scalar twice_area(0);
  for (size_t i = 0; i < sorted.size(); ++i) {
    const auto& p = sorted[i];
    const auto& q = sorted[(i + 1) % sorted.size()];
    twice_area += p(0) * q(1) - q(0) * p(1);
  }
  return std::abs(twice_area) / Scalar(2);
}

/// Volume of conv(pts) in R^d by facet discovery and pyramid decomposition
/// from the centroid; facets recurse in their own hyperplane coordinates.
template <typename Scalar>
Scalar hull_volume_impl(std::vector<DenseVector<Scalar>> pts, Index d) {
  if (static_cast<Index>(pts.size()) < d + 1) return Scalar(0);
  if (d == 1) {
    Scalar lo = pts.front()(0), hi = lo;
    for (const auto& p : pts) {
      lo = std::min(lo, p(0));
      hi = std::max(hi, p(0));
    }
    return hi - lo;
  }
  if (d == 2) return polygon_area(pts);

  Scalar scale(0);
  for (const auto& p : pts) scale = std::max(scale, p.template lpNorm<Eigen::Infinity>());
  const double eps = 1e-9 * (1.0 + static_cast<double>(scale));

  DenseVector<Scalar> centroid = DenseVector<Scalar>::Zero(d);
  for (const auto& p : pts) centroid += p;
  centroid /= Scalar(static_cast<double>(pts.size()));

  struct Facet {
    DenseVector<Scalar> normal;  // outward unit
    Scalar offset;
  };
  std::vector<Facet> facets;
  const Index v = static_cast<Index>(pts.size());
  for_each_combination(v, d, [&](const std::vector<Index>& idx) {
    DenseMatrix<Scalar> span(d - 1, d);
    const auto& base = pts[static_cast<size_t>(idx[0])];
    for (Index j = 1; j < d; ++j) span.row(j - 1) = (pts[static_cast<size_t>(idx[static_cast<size_t>(j)])] - base).transpose();
    Eigen::FullPivLU<DenseMatrix<Scalar>> lu(span);
    lu.setThreshold(1e-10);
    if (lu.rank() != d - 1) return;  // degenerate tuple
    DenseVector<Scalar> normal = lu.kernel().col(0);
    normal.normalize();
    Scalar offset = normal.dot(base);
    Scalar lo(0), hi(0);
    for (const auto& p : pts) {
      const Scalar s = normal.dot(p) - offset;
      lo = std::min(lo, s);
      hi = std::max(hi, s);
    }
    if (lo < -eps && hi > eps) return;  // cuts through the hull
    if (hi > eps) {
      normal = -normal;
      offset = -offset;
    }
    for (const auto& f : facets)
      if ((f.normal - normal).template lpNorm<Eigen::Infinity>() <= 1e-7 &&
          std::abs(static_cast<double>(f.offset - offset)) <= 10 * eps)
        return;
    facets.push_back({normal, offset});
  });

  Scalar vol(0);
  for (const auto& f : facets) {
    std::vector<DenseVector<Scalar>> active;
    for (const auto& p : pts)
      if (std::abs(static_cast<double>(f.normal.dot(p) - f.offset)) <= 10 * eps) active.push_back(p);
    if (static_cast<Index>(active.size()) < d) continue;
    // Orthonormal frame of the hyperplane from a Householder QR of the normal.
    Eigen::HouseholderQR<DenseMatrix<Scalar>> qr(f.normal);
    DenseMatrix<Scalar> Q = qr.householderQ();
    DenseMatrix<Scalar> frame = Q.rightCols(d - 1);
    std::vector<DenseVector<Scalar>> flat;
    flat.reserve(active.size());
    for (const auto& p : active) flat.push_back(frame.transpose() * (p - active.front()));
    const Scalar area = hull_volume_impl(std::move(flat), d - 1);
    const Scalar height = std::abs(static_cast<double>(f.normal.dot(centroid) - f.offset));
    vol += area * height / Scalar(static_cast<double>(d));
  }
  return vol;
}

}  // namespace detail

/// Lebesgue volume of the convex hull of the vertex set; 0 when degenerate.
template <typename Scalar>
Scalar volume(const BasicPolytopeV<Scalar>& poly) {
  if (poly.vertices.empty()) return Scalar(0);
  return detail::hull_volume_impl(poly.vertices, poly.dim());
}

/// Image {W v : v ∈ vertices}; W must be square and nonsingular.
template <typename Scalar>
BasicPolytopeV<Scalar> transform(const BasicPolytopeV<Scalar>& poly, const DenseMatrix<Scalar>& W) {
  if (W.rows() != W.cols()) throw DimensionError("transform: W must be square");
  if (!poly.vertices.empty() && W.cols() != poly.dim())
    throw DimensionError("transform: W size does not match vertices");
  Eigen::FullPivLU<DenseMatrix<Scalar>> lu(W);
  lu.setThreshold(1e-12);
  if (!lu.isInvertible()) throw Error("transform: W is singular");
  BasicPolytopeV<Scalar> out;
  out.vertices.reserve(poly.vertices.size());
  for (const auto& v : poly.vertices) out.vertices.push_back(W * v);
  return out;
}

template <typename Scalar>
std::pair<DenseVector<Scalar>, DenseVector<Scalar>> bounding_box(
    const std::vector<DenseVector<Scalar>>& points) {
  if (points.empty()) throw Error("bounding_box: no points");
  DenseVector<Scalar> lo = points.front(), hi = points.front();
  for (const auto& p : points) {
    lo = lo.cwiseMin(p);
    hi = hi.cwiseMax(p);
  }
  return {lo, hi};
}

}  // namespace rci
