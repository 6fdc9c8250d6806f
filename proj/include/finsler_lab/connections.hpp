#pragma once

// Pullback connection coefficients on pi*TM at a point: Chern, Landsberg, Hashiguchi.
// Coefficient arrays are stored [upper][lower][lower].

#include "finsler_lab/ambient.hpp"
#include "finsler_lab/tensor.hpp"

namespace finsler_lab {

enum class ConnectionKind { chern, hashiguchi };

inline const char* kind_name(ConnectionKind k) { return k == ConnectionKind::chern ? "chern" : "hashiguchi"; }

struct ConnectionCoeffs {
  int dimension = 0;
  Tensor3 horizontal;  // Gamma^k_ij at (k, i, j)
  Tensor3 vertical;    // gamma^k_ij at (k, i, j)
  ConnectionKind kind = ConnectionKind::chern;
};

struct LandsbergEval {
  Tensor3 L;         // L_ijk
  Tensor3 L_raised;  // L^k_ij at (k, i, j)
};

// delta g_ij / delta x^k at (i, j, k).
inline Tensor3 delta_dg(const AmbientEval& a) {
  const int n = a.dimension;
  Tensor3 d(n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k) {
        double s = a.dg_dx(i, j, k);
        for (int m = 0; m < n; ++m) s -= a.N(m, k) * a.dg_dy(i, j, m);
        d(i, j, k) = s;
      }
  return d;
}

// Raise the first index of a fully lowered tensor: out(k, i, j) = g^{ks} T_sij.
inline Tensor3 raise_first(const Matrix& g_inv, const Tensor3& t) {
  const int n = t.dim(0);
  Tensor3 out(n);
  for (int k = 0; k < n; ++k)
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        double s = 0.0;
        for (int q = 0; q < n; ++q) s += g_inv(k, q) * t(q, i, j);
        out(k, i, j) = s;
      }
  return out;
}

inline ConnectionCoeffs chern_coefficients(const AmbientEval& a) {
  const int n = a.dimension;
  const Tensor3 d = delta_dg(a);
  Tensor3 lowered(n);  // Gamma_sjk
  for (int s = 0; s < n; ++s)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k) lowered(s, j, k) = 0.5 * (d(s, j, k) - d(j, k, s) + d(k, s, j));
  ConnectionCoeffs c;
  c.dimension = n;
  c.kind = ConnectionKind::chern;
  c.horizontal = raise_first(a.g_inv, lowered);
  c.vertical = raise_first(a.g_inv, a.A);
  return c;
}

// -1/2 of the horizontal covariant derivative of g taken with the Chern coefficients.
// Chern is h-metric compatible, so this vanishes; kept as a consistency check.
inline Tensor3 chern_metric_derivative(const AmbientEval& a, const ConnectionCoeffs& chern) {
  const int n = a.dimension;
  const Tensor3 d = delta_dg(a);
  Tensor3 out(n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k) {
        double s = d(i, j, k);
        for (int l = 0; l < n; ++l) s -= a.g(l, j) * chern.horizontal(l, i, k) + a.g(i, l) * chern.horizontal(l, j, k);
        out(i, j, k) = -0.5 * s;
      }
  return out;
}

// L_ijk = -1/2 g_ij|k with the Berwald horizontal derivative.
inline LandsbergEval landsberg_tensor(const AmbientEval& a) {
  if (a.berwald.data().empty()) throw std::invalid_argument("landsberg_tensor: ambient evaluation lacks Berwald coefficients");
  const int n = a.dimension;
  const Tensor3 d = delta_dg(a);
  LandsbergEval out;
  out.L = Tensor3(n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k) {
        double s = d(i, j, k);
        for (int l = 0; l < n; ++l) s -= a.g(l, j) * a.berwald(l, i, k) + a.g(i, l) * a.berwald(l, j, k);
        out.L(i, j, k) = -0.5 * s;
      }
  out.L_raised = raise_first(a.g_inv, out.L);
  return out;
}

inline LandsbergEval landsberg_tensor(const MetricSpec& metric, const TangentPoint& p, const ConnectionCoeffs& chern) {
  if (chern.kind != ConnectionKind::chern) throw std::invalid_argument("landsberg_tensor: expects Chern coefficients");
  return landsberg_tensor(ambient_eval(metric, p));
}

inline ConnectionCoeffs hashiguchi_coefficients(const ConnectionCoeffs& chern, const LandsbergEval& L) {
  if (chern.kind != ConnectionKind::chern) throw std::invalid_argument("hashiguchi_coefficients: expects Chern coefficients");
  ConnectionCoeffs h = chern;
  h.kind = ConnectionKind::hashiguchi;
  h.horizontal = chern.horizontal + L.L_raised;
  return h;
}

inline ConnectionCoeffs hashiguchi_coefficients(const AmbientEval& a) {
  return hashiguchi_coefficients(chern_coefficients(a), landsberg_tensor(a));
}

}  // namespace finsler_lab
