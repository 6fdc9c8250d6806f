#pragma once

/**
 * @file submanifold.hpp
 * @brief Induced geometry of an immersed Finsler submanifold x(u) of an
 *        ambient Finsler space.
 *
 * Index conventions (m = submanifold dimension, n = codimension, N = m + n):
 *
 *   B(i, a)          = dx^i/du^a                       N x m
 *   B2(i, a, b)      = d^2 x^i / du^a du^b              N x m x m
 *   B0(i, a)         = B2(i, a, b) v^b                  N x m
 *   normal(i, a)     = normal frame column a            N x n
 *   Btilde, Ntilde   = row blocks of [B | normal]^-1    m x N, n x N
 *   H(a, l)          = Ntilde (B0 + N~ B)               n x m
 *
 * Coefficient arrays keep the upper index first: Gamma(l, a, b) is the
 * component along B_l of the derivative of B_a in the direction b.
 * Normal-frame coefficients are frame-dependent; every check below is not.
 *
 * Terms in which the ambient vertical coefficients meet H are divided by F:
 * the vertical coefficients are taken with respect to F d/dy, and
 * theta~(delta/delta u^b) = normal H_b / F.
 */

#include <algorithm>
#include <map>
#include <numeric>
#include <string>
#include <vector>

#include "finsler_lab/ambient.hpp"
#include "finsler_lab/connections.hpp"
#include "finsler_lab/errors.hpp"
#include "finsler_lab/expr.hpp"
#include "finsler_lab/jet.hpp"
#include "finsler_lab/metric.hpp"
#include "finsler_lab/tensor.hpp"

namespace finsler_lab {

/// Immersion jets carry one order more than F^2 so that y = B(u) v is exact.
inline constexpr int kImmersionJetOrder = kMetricJetOrder + 1;
inline constexpr double kRankThreshold = 1e-8;
inline constexpr double kGramSchmidtThreshold = 1e-10;
inline constexpr double kInducedMetricTolerance = 1e-9;
inline constexpr double kKoszulTolerance = 1e-8;

/// x^i(u^1..u^m) for i = 1..N, as expressions in u1..um.
class ImmersionSpec {
public:
  ImmersionSpec() = default;
  ImmersionSpec(int dimension, const std::vector<std::string>& components,
                const std::map<std::string, double>& params = {})
      : dimension_(dimension) {
    if (dimension < 1) throw ParseError("immersion dimension must be >= 1");
    if (static_cast<int>(components.size()) <= dimension) {
      throw ParseError("immersion needs more components (" + std::to_string(components.size()) +
                       ") than its dimension (" + std::to_string(dimension) + ")");
    }
    for (const auto& text : components) components_.push_back(parse(text, numbered_names("u", dimension), params));
  }

  int dimension() const noexcept { return dimension_; }
  int ambient_dimension() const noexcept { return static_cast<int>(components_.size()); }
  int codimension() const noexcept { return ambient_dimension() - dimension_; }
  const std::vector<Expr>& components() const noexcept { return components_; }

private:
  int dimension_ = 0;
  std::vector<Expr> components_;
};

/// A point (u, v) of the slit tangent bundle of the submanifold.
struct SubPoint {
  Vector u;
  Vector v;
};

struct FramePackage {
  int dimension = 0;    // m
  int codimension = 0;  // n
  Vector u, v;
  Vector x, y;  // ambient point (x(u), B v)
  Matrix B;
  Tensor3 B2;
  Matrix B0;
  Matrix normal;
  Matrix Btilde;
  Matrix Ntilde;
  Matrix H;
  Tensor3 dN_du;  // d normal(i, a) / du^b at (i, a, b)
  Tensor3 dN_dv;  // d normal(i, a) / dv^b at (i, a, b)
  std::vector<int> normal_seed;  // coordinate axes that seeded the normal frame
  AmbientEval ambient;
  Jet induced_F;  // F(u, v) = F~(x(u), B(u) v), jet in (u, v)
};

namespace detail {

inline Vector bilinear(const Tensor3& t, const Vector& a, const Vector& b) {
  Vector out = Vector::Zero(t.dim(0));
  for (int i = 0; i < t.dim(0); ++i)
    for (int j = 0; j < t.dim(1); ++j) {
      if (a(j) == 0.0) continue;
      for (int k = 0; k < t.dim(2); ++k) out(i) += t(i, j, k) * a(j) * b(k);
    }
  return out;
}

inline Vector slice(const Tensor3& t, int j, int k) {
  Vector out(t.dim(0));
  for (int i = 0; i < t.dim(0); ++i) out(i) = t(i, j, k);
  return out;
}

inline void set_slice(Tensor3& t, int j, int k, const Vector& v) {
  for (int i = 0; i < t.dim(0); ++i) t(i, j, k) = v(i);
}

inline Jet jet_inner(const std::vector<Jet>& a, const std::vector<std::vector<Jet>>& g, const std::vector<Jet>& b) {
  Jet s = a.front() * 0.0;
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = 0; j < b.size(); ++j) s += a[i] * g[i][j] * b[j];
  return s;
}

}  // namespace detail

/**
 * B, B2, the ambient evaluation, the normal frame with its first derivatives,
 * the dual frames and H at one point.
 *
 * The normal frame is built by Gram-Schmidt in jet arithmetic: every
 * coordinate axis is projected onto the g~-orthogonal complement of span(B),
 * the n axes with the largest g~-norm residual are kept and orthonormalised in
 * increasing index order.
 */
inline FramePackage frame_package(const MetricSpec& metric, const ImmersionSpec& imm, const SubPoint& sp) {
  const int m = imm.dimension();
  const int N = imm.ambient_dimension();
  const int n = N - m;
  if (metric.dimension() != N) {
    throw ParseError("immersion has " + std::to_string(N) + " components but the metric has dimension " +
                     std::to_string(metric.dimension()));
  }
  if (sp.u.size() != m || sp.v.size() != m) throw std::invalid_argument("sub point dimension does not match immersion");
  if (max_abs(sp.v) == 0.0) throw DomainError("sub point lies on the zero section (v = 0)");

  FramePackage fp;
  fp.dimension = m;
  fp.codimension = n;
  fp.u = sp.u;
  fp.v = sp.v;

  const auto us = lift_variables(as_span(sp.u), 0, 2 * m, kImmersionJetOrder);
  std::vector<Jet> X;
  for (const auto& e : imm.components()) X.push_back(e.evaluate(std::span<const Jet>(us)));

  fp.x.resize(N);
  fp.B.resize(N, m);
  fp.B2 = Tensor3(N, m, m);
  for (int i = 0; i < N; ++i) {
    const Jet& xi = X[static_cast<std::size_t>(i)];
    fp.x(i) = xi.value();
    for (int a = 0; a < m; ++a) {
      fp.B(i, a) = partial(xi, {a});
      for (int b = 0; b < m; ++b) fp.B2(i, a, b) = partial(xi, {a, b});
    }
  }
  Eigen::JacobiSVD<Matrix> svd(fp.B);
  const double smin = svd.singularValues()(m - 1);
  if (!(smin > kRankThreshold)) {
    throw RankError("immersion Jacobian is rank deficient (smallest singular value " + detail::describe(smin) + ")");
  }
  fp.B0 = Matrix::Zero(N, m);
  for (int i = 0; i < N; ++i)
    for (int a = 0; a < m; ++a)
      for (int b = 0; b < m; ++b) fp.B0(i, a) += fp.B2(i, a, b) * sp.v(b);
  fp.y = fp.B * sp.v;

  const TangentPoint tp{fp.x, fp.y};
  metric.validate_at(as_span(fp.x));
  const Jet Fa = finsler_jet(metric, tp);
  fp.ambient = ambient_from_jet(Fa, fp.x, fp.y);

  // Induced F as a jet in (u, v).
  {
    const int r = kImmersionJetOrder - 1;
    std::vector<Jet> xs, ys;
    for (int i = 0; i < N; ++i) {
      const Jet& xi = X[static_cast<std::size_t>(i)];
      xs.push_back(xi.truncated(r));
      Jet yi(JetLayout::get(2 * m, r), 0.0);
      for (int a = 0; a < m; ++a) yi += xi.derivative(a) * lift_variable(sp.v(a), m + a, 2 * m, r);
      ys.push_back(yi);
    }
    fp.induced_F = metric.finsler<Jet>(xs, ys);
  }

  // g~ along (u, v) as first-order jets, by composing its (x, y) expansion.
  const int fo = 1;
  std::vector<Jet> inner;
  std::vector<std::vector<Jet>> Bj(static_cast<std::size_t>(N));
  for (int i = 0; i < N; ++i) inner.push_back(X[static_cast<std::size_t>(i)].truncated(fo));
  for (int i = 0; i < N; ++i) {
    Jet yi(JetLayout::get(2 * m, fo), 0.0);
    for (int a = 0; a < m; ++a) {
      Jet b = X[static_cast<std::size_t>(i)].derivative(a).truncated(fo);
      yi += b * lift_variable(sp.v(a), m + a, 2 * m, fo);
      Bj[static_cast<std::size_t>(i)].push_back(b);
    }
    inner.push_back(yi);
  }
  const Jet f2 = Fa * Fa;
  std::vector<std::vector<Jet>> gj(static_cast<std::size_t>(N));
  for (int i = 0; i < N; ++i) {
    const Jet di = f2.derivative(N + i);
    for (int j = 0; j < N; ++j) {
      gj[static_cast<std::size_t>(i)].push_back(0.5 * compose(di.derivative(N + j).truncated(fo), inner));
    }
  }

  // Tangent columns and their Gram matrix.
  std::vector<std::vector<Jet>> cols(static_cast<std::size_t>(m));
  for (int a = 0; a < m; ++a)
    for (int i = 0; i < N; ++i) cols[static_cast<std::size_t>(a)].push_back(Bj[static_cast<std::size_t>(i)][static_cast<std::size_t>(a)]);
  const Jet zero(JetLayout::get(2 * m, fo), 0.0);
  JetMatrix gram(m, m, zero);
  for (int a = 0; a < m; ++a)
    for (int b = 0; b < m; ++b) gram(a, b) = detail::jet_inner(cols[static_cast<std::size_t>(a)], gj, cols[static_cast<std::size_t>(b)]);

  // Project every axis onto the complement of span(B).
  std::vector<std::vector<Jet>> residual(static_cast<std::size_t>(N));
  std::vector<double> residual_norm(static_cast<std::size_t>(N));
  for (int k = 0; k < N; ++k) {
    std::vector<Jet> e(static_cast<std::size_t>(N), zero);
    e[static_cast<std::size_t>(k)] = Jet(zero.layout(), 1.0);
    JetMatrix rhs(m, 1, zero);
    for (int a = 0; a < m; ++a) rhs(a, 0) = detail::jet_inner(cols[static_cast<std::size_t>(a)], gj, e);
    const JetMatrix c = jet_solve(gram, rhs);
    for (int a = 0; a < m; ++a)
      for (int i = 0; i < N; ++i) e[static_cast<std::size_t>(i)] -= c(a, 0) * cols[static_cast<std::size_t>(a)][static_cast<std::size_t>(i)];
    residual_norm[static_cast<std::size_t>(k)] = std::sqrt(std::max(0.0, detail::jet_inner(e, gj, e).value()));
    residual[static_cast<std::size_t>(k)] = std::move(e);
  }
  std::vector<int> order(static_cast<std::size_t>(N));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    return residual_norm[static_cast<std::size_t>(a)] > residual_norm[static_cast<std::size_t>(b)];
  });
  order.resize(static_cast<std::size_t>(n));
  std::sort(order.begin(), order.end());
  fp.normal_seed = order;

  std::vector<std::vector<Jet>> normal;
  for (int k : order) {
    std::vector<Jet> w = residual[static_cast<std::size_t>(k)];
    for (const auto& prev : normal) {
      const Jet c = detail::jet_inner(w, gj, prev);
      for (int i = 0; i < N; ++i) w[static_cast<std::size_t>(i)] -= c * prev[static_cast<std::size_t>(i)];
    }
    const Jet norm2 = detail::jet_inner(w, gj, w);
    if (!(norm2.value() > kGramSchmidtThreshold * kGramSchmidtThreshold)) {
      throw RankError("normal frame Gram-Schmidt broke down on axis " + std::to_string(k + 1) + " (residual " +
                      detail::describe(std::sqrt(std::max(0.0, norm2.value()))) + ")");
    }
    const Jet inv = reciprocal(sqrt(norm2));
    for (auto& c : w) c = c * inv;
    normal.push_back(std::move(w));
  }

  fp.normal.resize(N, n);
  fp.dN_du = Tensor3(N, n, m);
  fp.dN_dv = Tensor3(N, n, m);
  for (int a = 0; a < n; ++a)
    for (int i = 0; i < N; ++i) {
      const Jet& c = normal[static_cast<std::size_t>(a)][static_cast<std::size_t>(i)];
      fp.normal(i, a) = c.value();
      for (int b = 0; b < m; ++b) {
        fp.dN_du(i, a, b) = partial(c, {b});
        fp.dN_dv(i, a, b) = partial(c, {m + b});
      }
    }

  Matrix T(N, N);
  T << fp.B, fp.normal;
  Matrix Ti;
  try {
    Ti = checked_inverse(T, "transition matrix [B | normal]");
  } catch (const SingularError& e) {
    throw RankError(e.what());
  }
  fp.Btilde = Ti.topRows(m);
  fp.Ntilde = Ti.bottomRows(n);
  fp.H = fp.Ntilde * (fp.B0 + fp.ambient.N * fp.B);
  return fp;
}

/// Residuals of the frame relations: orthonormality, annihilation, duality and completeness.
struct FrameResiduals {
  double tangent_normal = 0.0;  // g~(B_a, normal_b)
  double normal_normal = 0.0;   // g~(normal_a, normal_b) - delta_ab
  double duality = 0.0;         // [Btilde; Ntilde] [B | normal] - I
  double completeness = 0.0;    // B Btilde + normal Ntilde - I
  double max() const { return std::max({tangent_normal, normal_normal, duality, completeness}); }
};

inline FrameResiduals frame_residuals(const FramePackage& fp) {
  const Matrix& g = fp.ambient.g;
  const int N = static_cast<int>(fp.B.rows());
  FrameResiduals r;
  r.tangent_normal = max_abs(fp.B.transpose() * g * fp.normal);
  r.normal_normal = max_abs(fp.normal.transpose() * g * fp.normal - Matrix::Identity(fp.codimension, fp.codimension));
  Matrix dual(N, N);
  dual << fp.Btilde * fp.B, fp.Btilde * fp.normal, fp.Ntilde * fp.B, fp.Ntilde * fp.normal;
  r.duality = max_abs(dual - Matrix::Identity(N, N));
  r.completeness = max_abs(fp.B * fp.Btilde + fp.normal * fp.Ntilde - Matrix::Identity(N, N));
  return r;
}

struct InducedMetric {
  double F = 0.0;
  Matrix g;           // 1/2 d^2 F^2 / dv dv of the composed function
  Matrix g_pullback;  // B^T g~ B
  double residual = 0.0;
};

inline InducedMetric induced_metric_and_F(const FramePackage& fp) {
  const int m = fp.dimension;
  const Jet f2 = fp.induced_F * fp.induced_F;
  InducedMetric r;
  r.F = fp.induced_F.value();
  r.g.resize(m, m);
  for (int a = 0; a < m; ++a)
    for (int b = 0; b < m; ++b) r.g(a, b) = 0.5 * partial(f2, {m + a, m + b});
  r.g_pullback = fp.B.transpose() * fp.ambient.g * fp.B;
  r.residual = max_abs(r.g - r.g_pullback);
  if (!(r.residual < kInducedMetricTolerance * std::max(1.0, max_abs(r.g)))) {
    throw ConsistencyError("induced metric: pullback and composed-jet routes disagree by " + detail::describe(r.residual));
  }
  return r;
}

inline InducedMetric induced_metric_and_F(const MetricSpec& metric, const ImmersionSpec& imm, const SubPoint& sp) {
  return induced_metric_and_F(frame_package(metric, imm, sp));
}

/// N^a_b = Btilde (B0 + N~ B).
inline Matrix induced_nonlinear(const FramePackage& fp) { return fp.Btilde * (fp.B0 + fp.ambient.N * fp.B); }

/// Full ambient-style evaluation of the induced Finsler function (dimension m).
inline AmbientEval intrinsic_eval(const FramePackage& fp) { return ambient_from_jet(fp.induced_F, fp.u, fp.v); }

inline Matrix intrinsic_nonlinear(const FramePackage& fp) { return intrinsic_eval(fp).N; }

inline Matrix intrinsic_nonlinear(const MetricSpec& metric, const ImmersionSpec& imm, const SubPoint& sp) {
  return intrinsic_nonlinear(frame_package(metric, imm, sp));
}

/// A~(B_l, B_b, normal_a) at (l, b, a).
inline Tensor3 mixed_cartan(const FramePackage& fp) {
  const int m = fp.dimension, n = fp.codimension;
  const int N = m + n;
  const Tensor3& A = fp.ambient.A;
  Tensor3 out(m, m, n);
  for (int l = 0; l < m; ++l)
    for (int b = 0; b < m; ++b)
      for (int a = 0; a < n; ++a) {
        double s = 0.0;
        for (int i = 0; i < N; ++i)
          for (int j = 0; j < N; ++j)
            for (int k = 0; k < N; ++k) s += A(i, j, k) * fp.B(i, l) * fp.B(j, b) * fp.normal(k, a);
        out(l, b, a) = s;
      }
  return out;
}

/// D^a_b = g^{al} A~(B_l, B_b, normal_c) (H v)^c.
inline Matrix deformation_tensor(const FramePackage& fp, const AmbientEval& sub_eval) {
  const int m = fp.dimension, n = fp.codimension;
  const Tensor3 Am = mixed_cartan(fp);
  const Vector Hv = fp.H * fp.v;
  Matrix lowered = Matrix::Zero(m, m);
  for (int l = 0; l < m; ++l)
    for (int b = 0; b < m; ++b)
      for (int c = 0; c < n; ++c) lowered(l, b) += Am(l, b, c) * Hv(c);
  return sub_eval.g_inv * lowered;
}

struct NormalConnection {
  Tensor3 horizontal;  // (b, a, alpha)
  Tensor3 vertical;    // (b, a, alpha)
};

struct InducedConnection {
  ConnectionCoeffs tangent;  // Gamma^l_ab, gamma^l_ab
  NormalConnection normal;
  Tensor3 S_h, S_v;  // (a, alpha, beta)
  Tensor3 A_h, A_v;  // (beta, a, alpha)
};

namespace detail {

// Ambient derivatives of B_a along delta/delta u^b and of normal_a along delta/delta u^b,
// assembled from coefficient formulas (vectors in R^N).
struct CoefficientSides {
  std::vector<std::vector<Vector>> tangent_h, tangent_v;  // [a][b]
  std::vector<std::vector<Vector>> normal_h, normal_v;    // [a][alpha]
};

inline CoefficientSides coefficient_sides(const FramePackage& fp, const ConnectionCoeffs& ambient_conn,
                                          const Matrix& N_ind) {
  const int m = fp.dimension, n = fp.codimension;
  const double F = fp.ambient.F;
  CoefficientSides s;
  s.tangent_h.assign(static_cast<std::size_t>(m), std::vector<Vector>(static_cast<std::size_t>(m)));
  s.tangent_v = s.tangent_h;
  s.normal_h.assign(static_cast<std::size_t>(n), std::vector<Vector>(static_cast<std::size_t>(m)));
  s.normal_v = s.normal_h;
  const Matrix NH = fp.normal * fp.H / F;
  for (int a = 0; a < m; ++a)
    for (int b = 0; b < m; ++b) {
      const Vector Ba = fp.B.col(a), Bb = fp.B.col(b);
      s.tangent_h[a][b] = slice(fp.B2, a, b) + bilinear(ambient_conn.horizontal, Ba, Bb) +
                          bilinear(ambient_conn.vertical, Ba, NH.col(b));
      s.tangent_v[a][b] = bilinear(ambient_conn.vertical, Ba, Bb);
    }
  for (int a = 0; a < n; ++a)
    for (int al = 0; al < m; ++al) {
      Vector delta = slice(fp.dN_du, a, al);
      Vector vert = Vector::Zero(fp.B.rows());
      for (int be = 0; be < m; ++be) {
        delta -= N_ind(be, al) * slice(fp.dN_dv, a, be);
      }
      vert = F * slice(fp.dN_dv, a, al);
      const Vector Na = fp.normal.col(a);
      s.normal_h[a][al] = delta + bilinear(ambient_conn.horizontal, Na, fp.B.col(al)) +
                          bilinear(ambient_conn.vertical, Na, NH.col(al));
      s.normal_v[a][al] = vert + bilinear(ambient_conn.vertical, Na, fp.B.col(al));
    }
  return s;
}

}  // namespace detail

/// Induced, normal, second-fundamental-form and shape-operator coefficients for an ambient pair.
inline InducedConnection induced_connection(const FramePackage& fp, const ConnectionCoeffs& ambient_conn) {
  const int m = fp.dimension, n = fp.codimension;
  const auto s = detail::coefficient_sides(fp, ambient_conn, induced_nonlinear(fp));
  InducedConnection ic;
  ic.tangent.dimension = m;
  ic.tangent.kind = ambient_conn.kind;
  ic.tangent.horizontal = Tensor3(m);
  ic.tangent.vertical = Tensor3(m);
  ic.S_h = Tensor3(n, m, m);
  ic.S_v = Tensor3(n, m, m);
  ic.normal.horizontal = Tensor3(n, n, m);
  ic.normal.vertical = Tensor3(n, n, m);
  ic.A_h = Tensor3(m, n, m);
  ic.A_v = Tensor3(m, n, m);
  for (int a = 0; a < m; ++a)
    for (int b = 0; b < m; ++b) {
      detail::set_slice(ic.tangent.horizontal, a, b, fp.Btilde * s.tangent_h[a][b]);
      detail::set_slice(ic.tangent.vertical, a, b, fp.Btilde * s.tangent_v[a][b]);
      detail::set_slice(ic.S_h, a, b, fp.Ntilde * s.tangent_h[a][b]);
      detail::set_slice(ic.S_v, a, b, fp.Ntilde * s.tangent_v[a][b]);
    }
  for (int a = 0; a < n; ++a)
    for (int al = 0; al < m; ++al) {
      detail::set_slice(ic.normal.horizontal, a, al, fp.Ntilde * s.normal_h[a][al]);
      detail::set_slice(ic.normal.vertical, a, al, fp.Ntilde * s.normal_v[a][al]);
      detail::set_slice(ic.A_h, a, al, -(fp.Btilde * s.normal_h[a][al]));
      detail::set_slice(ic.A_v, a, al, -(fp.Btilde * s.normal_v[a][al]));
    }
  return ic;
}

/**
 * Gauss and Weingarten reconstruction. The ambient derivative of B_a and of
 * normal_a along the induced horizontal and vertical frames is computed
 * directly (push forward, split with the ambient Ehresmann form, apply the
 * connection form) and compared with B (tangent part) + normal (normal part)
 * assembled from the coefficients.
 */
inline double gauss_weingarten_residual(const FramePackage& fp, const ConnectionCoeffs& ambient_conn,
                                        const InducedConnection& ic) {
  const int m = fp.dimension, n = fp.codimension;
  const int N = m + n;
  const double F = fp.ambient.F;
  const Matrix N_ind = induced_nonlinear(fp);

  auto push = [&](const Vector& Xu, const Vector& Xv) {
    Vector Z(2 * N);
    Z.head(N) = fp.B * Xu;
    Z.tail(N) = fp.B0 * Xu + fp.B * Xv;
    return ehresmann_apply(fp.ambient, Z);
  };
  auto omega = [&](const EhresmannSplit& sp, const Vector& xi) {
    return Vector(detail::bilinear(ambient_conn.horizontal, xi, sp.pi) + detail::bilinear(ambient_conn.vertical, xi, sp.theta));
  };

  std::vector<Vector> hu(static_cast<std::size_t>(m)), hv(static_cast<std::size_t>(m));
  std::vector<Vector> vu(static_cast<std::size_t>(m)), vv(static_cast<std::size_t>(m));
  for (int b = 0; b < m; ++b) {
    hu[b] = Vector::Unit(m, b);
    hv[b] = -N_ind.col(b);
    vu[b] = Vector::Zero(m);
    vv[b] = F * Vector::Unit(m, b);
  }

  double r = 0.0;
  for (int b = 0; b < m; ++b) {
    for (int dir = 0; dir < 2; ++dir) {
      const Vector& Xu = dir == 0 ? hu[b] : vu[b];
      const Vector& Xv = dir == 0 ? hv[b] : vv[b];
      const EhresmannSplit sp = push(Xu, Xv);
      for (int a = 0; a < m; ++a) {
        Vector d = Vector::Zero(N);
        for (int c = 0; c < m; ++c) d += Xu(c) * detail::slice(fp.B2, a, c);
        d += omega(sp, fp.B.col(a));
        const Tensor3& T = dir == 0 ? ic.tangent.horizontal : ic.tangent.vertical;
        const Tensor3& S = dir == 0 ? ic.S_h : ic.S_v;
        const Vector rhs = fp.B * detail::slice(T, a, b) + fp.normal * detail::slice(S, a, b);
        r = std::max(r, max_abs(d - rhs));
      }
      for (int a = 0; a < n; ++a) {
        Vector d = Vector::Zero(N);
        for (int c = 0; c < m; ++c) d += Xu(c) * detail::slice(fp.dN_du, a, c) + Xv(c) * detail::slice(fp.dN_dv, a, c);
        d += omega(sp, fp.normal.col(a));
        const Tensor3& W = dir == 0 ? ic.A_h : ic.A_v;
        const Tensor3& P = dir == 0 ? ic.normal.horizontal : ic.normal.vertical;
        const Vector rhs = -(fp.B * detail::slice(W, a, b)) + fp.normal * detail::slice(P, a, b);
        r = std::max(r, max_abs(d - rhs));
      }
    }
  }
  return r;
}

/// Restriction of the ambient Ehresmann form along the induced horizontal frame.
struct EhresmannRestriction {
  double literal = 0.0;     // |theta~(i_* Z) - B theta(Z)|
  double tangential = 0.0;  // |Btilde theta~(i_* Z) - theta(Z)|
  double corrected = 0.0;   // |theta~(i_* Z) - B theta(Z) - normal H Z_u / F|
};

/// Evaluated on the coordinate fields d/du^b and F d/dv^b of TM_0.
inline EhresmannRestriction ehresmann_restriction(const FramePackage& fp) {
  const int m = fp.dimension;
  const int N = static_cast<int>(fp.B.rows());
  const double F = fp.ambient.F;
  const Matrix N_ind = induced_nonlinear(fp);
  EhresmannRestriction r;
  for (int b = 0; b < m; ++b) {
    for (int dir = 0; dir < 2; ++dir) {
      Vector Xu = Vector::Zero(m), Xv = Vector::Zero(m);
      if (dir == 0) Xu(b) = 1.0;
      else Xv(b) = F;
      Vector Z(2 * N);
      Z.head(N) = fp.B * Xu;
      Z.tail(N) = fp.B0 * Xu + fp.B * Xv;
      const Vector ambient_theta = ehresmann_apply(fp.ambient, Z).theta;
      const Vector theta = (Xv + N_ind * Xu) / F;
      r.literal = std::max(r.literal, max_abs(ambient_theta - fp.B * theta));
      r.tangential = std::max(r.tangential, max_abs(fp.Btilde * ambient_theta - theta));
      r.corrected = std::max(r.corrected, max_abs(ambient_theta - fp.B * theta - fp.normal * fp.H * Xu / F));
    }
  }
  return r;
}

struct InducedHashiguchi {
  ConnectionCoeffs coeffs;
  Tensor3 L_restricted;  // (i, j, alpha)
};

/// H^l_ab = Btilde(B2_ab + H~(B_a, B_b)), h^l_ab = Btilde h~(B_a, B_b).
inline InducedHashiguchi induced_hashiguchi(const FramePackage& fp, const ConnectionCoeffs& ambient_hash,
                                            const LandsbergEval& L) {
  if (ambient_hash.kind != ConnectionKind::hashiguchi) throw std::invalid_argument("induced_hashiguchi: expects Hashiguchi coefficients");
  const int m = fp.dimension, n = fp.codimension;
  const int N = m + n;
  InducedHashiguchi out;
  out.coeffs.dimension = m;
  out.coeffs.kind = ConnectionKind::hashiguchi;
  out.coeffs.horizontal = Tensor3(m);
  out.coeffs.vertical = Tensor3(m);
  for (int a = 0; a < m; ++a)
    for (int b = 0; b < m; ++b) {
      const Vector Ba = fp.B.col(a), Bb = fp.B.col(b);
      detail::set_slice(out.coeffs.horizontal, a, b,
                        fp.Btilde * (detail::slice(fp.B2, a, b) + detail::bilinear(ambient_hash.horizontal, Ba, Bb)));
      detail::set_slice(out.coeffs.vertical, a, b, fp.Btilde * detail::bilinear(ambient_hash.vertical, Ba, Bb));
    }
  const double F = fp.ambient.F;
  out.L_restricted = Tensor3(N, N, m);
  for (int i = 0; i < N; ++i)
    for (int j = 0; j < N; ++j)
      for (int al = 0; al < m; ++al) {
        double s = 0.0;
        for (int k = 0; k < N; ++k) {
          s += fp.B(k, al) * L.L(i, j, k);
          for (int a = 0; a < n; ++a) s -= fp.H(a, al) / F * fp.normal(k, a) * fp.ambient.A(i, j, k);
        }
        out.L_restricted(i, j, al) = s;
      }
  return out;
}

struct IntrinsicHashiguchi {
  ConnectionCoeffs coeffs;
  double koszul_residual = 0.0;
};

/**
 * Hashiguchi pair of the induced Finsler function, plus an independent
 * evaluation of 2 g_ml H^m_ab = d*_a g_bl + d*_b g_al - d*_l g_ab + 2 L_abl
 * with d*_a = d/du^a - N^e_a d/dv^e applied to the jet of g.
 */
inline IntrinsicHashiguchi intrinsic_hashiguchi(const FramePackage& fp, const AmbientEval& sub_eval) {
  const int m = fp.dimension;
  IntrinsicHashiguchi out;
  const LandsbergEval L = landsberg_tensor(sub_eval);
  out.coeffs = hashiguchi_coefficients(chern_coefficients(sub_eval), L);

  const Jet f2 = fp.induced_F * fp.induced_F;
  Tensor3 dg(m);  // delta*_c g_ab at (a, b, c)
  for (int a = 0; a < m; ++a)
    for (int b = 0; b < m; ++b) {
      const Jet gab = 0.5 * f2.derivative(m + a).derivative(m + b);
      for (int c = 0; c < m; ++c) {
        double s = partial(gab, {c});
        for (int e = 0; e < m; ++e) s -= sub_eval.N(e, c) * partial(gab, {m + e});
        dg(a, b, c) = s;
      }
    }
  double scale = 1.0;
  for (int mu = 0; mu < m; ++mu)
    for (int a = 0; a < m; ++a)
      for (int b = 0; b < m; ++b) {
        double s = 0.0;
        for (int l = 0; l < m; ++l) {
          const double bracket = dg(b, l, a) + dg(a, l, b) - dg(a, b, l) + 2.0 * L.L(a, b, l);
          s += 0.5 * sub_eval.g_inv(mu, l) * bracket;
        }
        scale = std::max(scale, std::abs(s));
        out.koszul_residual = std::max(out.koszul_residual, std::abs(s - out.coeffs.horizontal(mu, a, b)));
      }
  if (!(out.koszul_residual < kKoszulTolerance * scale)) {
    throw ConsistencyError("intrinsic Hashiguchi: Koszul-form cross-check failed (residual " +
                           detail::describe(out.koszul_residual) + ")");
  }
  return out;
}

struct HashiguchiComparison {
  double inds_residual = 0.0;      // |H - (H* + D-corrections)|
  double deformation_norm = 0.0;   // max |D|
  double horizontal_gap = 0.0;     // max |H - H*|
  double vertical_gap = 0.0;       // max |h - h*|
  double fiber_identity = 0.0;     // max |(H - H*)^m_ab v^b + D^m_a / F|
  double radial_gap = 0.0;         // max |(H - H*)^m_ab v^a v^b|
};

inline HashiguchiComparison hashiguchi_comparison(const FramePackage& fp, const Matrix& D, const ConnectionCoeffs& induced,
                                                  const ConnectionCoeffs& intrinsic) {
  const int m = fp.dimension;
  const double F = fp.ambient.F;
  const Tensor3& hB = induced.vertical;  // Btilde h~(B_a, B_b)
  HashiguchiComparison c;
  c.deformation_norm = max_abs(D);
  c.horizontal_gap = (induced.horizontal - intrinsic.horizontal).max_abs();
  c.vertical_gap = (induced.vertical - intrinsic.vertical).max_abs();
  for (int mu = 0; mu < m; ++mu) {
    double radial = 0.0;
    for (int a = 0; a < m; ++a) {
      double fiber = 0.0;
      for (int b = 0; b < m; ++b) {
        double rhs = intrinsic.horizontal(mu, a, b);
        for (int t = 0; t < m; ++t) rhs += D(t, a) * hB(mu, t, b) + D(t, b) * hB(mu, t, a) - D(mu, t) * hB(t, a, b);
        c.inds_residual = std::max(c.inds_residual, std::abs(induced.horizontal(mu, a, b) - rhs));
        const double gap = induced.horizontal(mu, a, b) - intrinsic.horizontal(mu, a, b);
        fiber += gap * fp.v(b);
        radial += gap * fp.v(a) * fp.v(b);
      }
      c.fiber_identity = std::max(c.fiber_identity, std::abs(fiber + D(mu, a) / F));
    }
    c.radial_gap = std::max(c.radial_gap, std::abs(radial));
  }
  return c;
}

/// Every submanifold-level object at one (u, v).
struct InducedPackage {
  FramePackage frames;
  InducedMetric metric;
  AmbientEval intrinsic;  // ambient-style evaluation of the induced F
  Matrix N_ind;
  Matrix N_int;
  Matrix D;
  ConnectionCoeffs ambient_chern;
  ConnectionCoeffs ambient_hashiguchi;
  LandsbergEval ambient_landsberg;
  InducedConnection connection;  // from the ambient Chern pair
  InducedHashiguchi hash_ind;
  IntrinsicHashiguchi hash_int;
  HashiguchiComparison comparison;
  EhresmannRestriction restriction;
  double gauss_weingarten = 0.0;
};

inline InducedPackage induce(const MetricSpec& metric, const ImmersionSpec& imm, const SubPoint& sp) {
  InducedPackage p;
  p.frames = frame_package(metric, imm, sp);
  p.metric = induced_metric_and_F(p.frames);
  p.intrinsic = intrinsic_eval(p.frames);
  p.N_ind = induced_nonlinear(p.frames);
  p.N_int = p.intrinsic.N;
  p.D = deformation_tensor(p.frames, p.intrinsic);
  p.ambient_chern = chern_coefficients(p.frames.ambient);
  p.ambient_landsberg = landsberg_tensor(p.frames.ambient);
  p.ambient_hashiguchi = hashiguchi_coefficients(p.ambient_chern, p.ambient_landsberg);
  p.connection = induced_connection(p.frames, p.ambient_chern);
  p.gauss_weingarten = gauss_weingarten_residual(p.frames, p.ambient_chern, p.connection);
  p.hash_ind = induced_hashiguchi(p.frames, p.ambient_hashiguchi, p.ambient_landsberg);
  p.hash_int = intrinsic_hashiguchi(p.frames, p.intrinsic);
  p.comparison = hashiguchi_comparison(p.frames, p.D, p.hash_ind.coeffs, p.hash_int.coeffs);
  p.restriction = ehresmann_restriction(p.frames);
  return p;
}

}  // namespace finsler_lab
