#pragma once

/**
 * @file ambient.hpp
 * @brief Finsler objects at a point of the slit tangent bundle.
 *
 * Everything is read off a single jet of F^2 in the 2n variables
 * (x^1..x^n, y^1..y^n) taken to order 4:
 *
 *   g_ij      = 1/2 d^2 F^2 / dy^i dy^j
 *   A_ijk     = F/2 dg_ij/dy^k
 *   G^i       = 1/4 g^il (2 dg_jl/dx^k - dg_jk/dx^l) y^j y^k
 *   N^i_j     = dG^i/dy^j
 *   G^i_jk    = d^2 G^i / dy^j dy^k       (Berwald coefficients)
 *
 * N and the Berwald coefficients come from a jet of G built with the
 * equivalent form G^i = 1/4 g^il (y^k (F^2)_{x^k y^l} - (F^2)_{x^l}), which
 * needs one derivative less of F^2 than the display above.
 *
 * Sign conventions: delta/delta x^j = d/dx^j - N^i_j d/dy^i and
 * delta y^i = dy^i + N^i_j dx^j.
 */

#include <span>
#include <vector>

#include "finsler_lab/errors.hpp"
#include "finsler_lab/jet.hpp"
#include "finsler_lab/metric.hpp"
#include "finsler_lab/tensor.hpp"

namespace finsler_lab {

inline constexpr double kConvexityThreshold = 1e-10;

struct AmbientEval {
  int dimension = 0;
  Vector x;
  Vector y;
  double F = 0.0;
  Matrix g;       ///< g_ij
  Matrix g_inv;   ///< g^ij
  Tensor3 A;      ///< A_ijk
  Tensor3 dg_dx;  ///< dg_ij/dx^k at [i][j][k]
  Tensor3 dg_dy;  ///< dg_ij/dy^k at [i][j][k]
  Vector G;       ///< spray coefficients G^i
  Matrix N;       ///< N^i_j at (i, j)
  Vector l;       ///< y / F
  Tensor3 berwald;  ///< G^i_jk at [i][j][k]; empty when the jet order is below 4
  double min_eigenvalue = 0.0;
};

/// Jet of F at (x, y) in the variables (x^1..x^n, y^1..y^n).
inline Jet finsler_jet(const MetricSpec& metric, const TangentPoint& p, int order = kMetricJetOrder) {
  const int n = metric.dimension();
  if (p.x.size() != n || p.y.size() != n) throw std::invalid_argument("tangent point dimension does not match metric");
  if (max_abs(p.y) == 0.0) throw DomainError("tangent point lies on the zero section (y = 0)");
  auto xs = lift_variables(as_span(p.x), 0, 2 * n, order);
  auto ys = lift_variables(as_span(p.y), n, 2 * n, order);
  return metric.finsler<Jet>(xs, ys);
}

/// Spray coefficients G^i as jets of order (F^2 order - 2) in the same variables.
inline std::vector<Jet> spray_jet(const Jet& f2, int n, const Vector& y) {
  const int r = f2.order() - 2;
  if (r < 0) throw std::invalid_argument("spray_jet: F^2 jet must have order >= 2");
  auto zero = Jet(JetLayout::get(2 * n, r), 0.0);
  JetMatrix g(n, n, zero);
  JetMatrix rhs(n, 1, zero);
  std::vector<Jet> dy;
  for (int i = 0; i < n; ++i) dy.push_back(f2.derivative(n + i));
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) g(i, j) = 0.5 * dy[static_cast<std::size_t>(i)].derivative(n + j);
  }
  for (int l = 0; l < n; ++l) {
    Jet t = -f2.derivative(l).truncated(r);
    for (int k = 0; k < n; ++k) {
      t += lift_variable(y(k), n + k, 2 * n, r) * dy[static_cast<std::size_t>(l)].derivative(k);
    }
    rhs(l, 0) = 0.25 * t;
  }
  JetMatrix G = jet_solve(std::move(g), std::move(rhs));
  std::vector<Jet> out;
  for (int i = 0; i < n; ++i) out.push_back(G(i, 0));
  return out;
}

/// All ambient objects from the jet of F (order >= 3; order >= 4 adds Berwald coefficients).
inline AmbientEval ambient_from_jet(const Jet& F_jet, const Vector& x, const Vector& y) {
  const int n = static_cast<int>(x.size());
  if (F_jet.num_vars() != 2 * n) throw std::invalid_argument("ambient_from_jet: jet has the wrong number of variables");
  if (F_jet.order() < 3) throw std::invalid_argument("ambient_from_jet: jet order must be >= 3");
  if (!(F_jet.value() > 0.0)) {
    throw DomainError("Finsler function is not positive at the point (F = " + detail::describe(F_jet.value()) + ")");
  }
  const Jet f2 = F_jet * F_jet;

  AmbientEval a;
  a.dimension = n;
  a.x = x;
  a.y = y;
  a.F = F_jet.value();
  a.g.resize(n, n);
  a.dg_dx = Tensor3(n);
  a.dg_dy = Tensor3(n);
  a.A = Tensor3(n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      a.g(i, j) = 0.5 * partial(f2, {n + i, n + j});
      for (int k = 0; k < n; ++k) {
        a.dg_dy(i, j, k) = 0.5 * partial(f2, {n + i, n + j, n + k});
        a.dg_dx(i, j, k) = 0.5 * partial(f2, {n + i, n + j, k});
        a.A(i, j, k) = 0.5 * a.F * a.dg_dy(i, j, k);
      }
    }
  }

  Eigen::SelfAdjointEigenSolver<Matrix> eig(a.g);
  a.min_eigenvalue = eig.eigenvalues().minCoeff();
  if (!(a.min_eigenvalue > kConvexityThreshold)) {
    throw ConvexityError("fundamental tensor is not positive definite (min eigenvalue " +
                         detail::describe(a.min_eigenvalue) + ")");
  }
  a.g_inv = checked_inverse(a.g, "fundamental tensor");

  a.G = Vector::Zero(n);
  for (int i = 0; i < n; ++i) {
    double s = 0.0;
    for (int l = 0; l < n; ++l) {
      double bracket = 0.0;
      for (int j = 0; j < n; ++j)
        for (int k = 0; k < n; ++k) bracket += (2.0 * a.dg_dx(j, l, k) - a.dg_dx(j, k, l)) * y(j) * y(k);
      s += a.g_inv(i, l) * bracket;
    }
    a.G(i) = 0.25 * s;
  }

  const auto G_jet = spray_jet(f2, n, y);
  a.N.resize(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) a.N(i, j) = partial(G_jet[static_cast<std::size_t>(i)], {n + j});
  if (G_jet.front().order() >= 2) {
    a.berwald = Tensor3(n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        for (int k = 0; k < n; ++k) a.berwald(i, j, k) = partial(G_jet[static_cast<std::size_t>(i)], {n + j, n + k});
  }
  a.l = y / a.F;
  return a;
}

inline AmbientEval ambient_eval(const MetricSpec& metric, const TangentPoint& p) {
  metric.validate_at(as_span(p.x));
  return ambient_from_jet(finsler_jet(metric, p), p.x, p.y);
}

/// max |F(x,ly) - lF|, |g(x,ly) - g|, |G(x,ly) - l^2 G|, |N(x,ly) - l N|.
inline double spray_homogeneity_check(const MetricSpec& metric, const TangentPoint& p, double lambda) {
  if (!(lambda > 0.0)) throw std::invalid_argument("homogeneity check needs lambda > 0");
  const AmbientEval a = ambient_eval(metric, p);
  const AmbientEval b = ambient_eval(metric, TangentPoint{p.x, lambda * p.y});
  double r = std::abs(b.F - lambda * a.F);
  r = std::max(r, max_abs(b.g - a.g));
  r = std::max(r, max_abs(b.G - lambda * lambda * a.G));
  r = std::max(r, max_abs(b.N - lambda * a.N));
  return r;
}

/// Adapted frame and coframe of T(TM_0) as vectors in the (d/dx, d/dy) basis.
struct AdaptedFrames {
  Matrix horizontal;  ///< 2n x n, column j = delta/delta x^j
  Matrix vertical;    ///< 2n x n, column j = F d/dy^j
  Matrix dx;          ///< n x 2n, row i = dx^i
  Matrix delta_y;     ///< n x 2n, row i = delta y^i / F
};

inline AdaptedFrames adapted_frames(const AmbientEval& a) {
  const int n = a.dimension;
  AdaptedFrames f;
  f.horizontal = Matrix::Zero(2 * n, n);
  f.vertical = Matrix::Zero(2 * n, n);
  f.dx = Matrix::Zero(n, 2 * n);
  f.delta_y = Matrix::Zero(n, 2 * n);
  for (int j = 0; j < n; ++j) {
    f.horizontal(j, j) = 1.0;
    for (int i = 0; i < n; ++i) f.horizontal(n + i, j) = -a.N(i, j);
    f.vertical(n + j, j) = a.F;
  }
  for (int i = 0; i < n; ++i) {
    f.dx(i, i) = 1.0;
    f.delta_y(i, n + i) = 1.0 / a.F;
    for (int j = 0; j < n; ++j) f.delta_y(i, j) = a.N(i, j) / a.F;
  }
  return f;
}

struct EhresmannSplit {
  Vector pi;     ///< pi_* X
  Vector theta;  ///< theta(X)
};

/// X is a 2n-vector in the (d/dx, d/dy) basis.
inline EhresmannSplit ehresmann_apply(const AmbientEval& a, const Vector& X) {
  const int n = a.dimension;
  if (X.size() != 2 * n) throw std::invalid_argument("ehresmann_apply: vector must have 2n components");
  EhresmannSplit s;
  s.pi = X.head(n);
  s.theta = (X.tail(n) + a.N * X.head(n)) / a.F;
  return s;
}

/// Sasaki-type inner product g(pi X, pi Y) + g(theta X, theta Y).
inline double sasaki_inner(const AmbientEval& a, const Vector& X, const Vector& Y) {
  const auto sx = ehresmann_apply(a, X);
  const auto sy = ehresmann_apply(a, Y);
  return sx.pi.dot(a.g * sy.pi) + sx.theta.dot(a.g * sy.theta);
}

}  // namespace finsler_lab
