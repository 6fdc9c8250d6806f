#pragma once

/**
 * @file verify.hpp
 * @brief Finite-difference oracle and the invariant-suite runner.
 *
 * The oracle only evaluates its argument on doubles; it never touches jets.
 */

#include <algorithm>
#include <cstdint>
#include <cstdlib>
#include <functional>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <thread>
#include <vector>

#include "finsler_lab/ambient.hpp"
#include "finsler_lab/connections.hpp"
#include "finsler_lab/metric.hpp"
#include "finsler_lab/submanifold.hpp"

namespace finsler_lab {

// ---------------------------------------------------------------------------
// Finite differences

namespace detail {

// Tensor-product central stencil: offsets (in units of h) and weights for one variable.
inline const std::vector<std::pair<int, double>>& stencil(int order) {
  static const std::vector<std::pair<int, double>> s0{{0, 1.0}};
  static const std::vector<std::pair<int, double>> s1{{-1, -0.5}, {1, 0.5}};
  static const std::vector<std::pair<int, double>> s2{{-1, 1.0}, {0, -2.0}, {1, 1.0}};
  static const std::vector<std::pair<int, double>> s3{{-2, -0.5}, {-1, 1.0}, {1, -1.0}, {2, 0.5}};
  switch (order) {
    case 0: return s0;
    case 1: return s1;
    case 2: return s2;
    case 3: return s3;
  }
  throw std::invalid_argument("fd_oracle: per-variable order must be <= 3");
}

inline double central_difference(const std::function<double(std::span<const double>)>& f, std::span<const double> point,
                                 const MultiIndex& mu, std::span<const double> h) {
  std::vector<int> active;
  for (std::size_t i = 0; i < mu.size(); ++i)
    if (mu[i] > 0) active.push_back(static_cast<int>(i));
  std::vector<double> x(point.begin(), point.end());
  double total = 0.0;
  std::function<void(std::size_t, double)> rec = [&](std::size_t depth, double weight) {
    if (depth == active.size()) {
      total += weight * f(x);
      return;
    }
    const auto var = static_cast<std::size_t>(active[depth]);
    const double base = x[var];
    for (const auto& [offset, w] : stencil(mu[var])) {
      x[var] = base + offset * h[var];
      rec(depth + 1, weight * w);
    }
    x[var] = base;
  };
  rec(0, 1.0);
  for (int var : active) total /= std::pow(h[static_cast<std::size_t>(var)], mu[static_cast<std::size_t>(var)]);
  return total;
}

}  // namespace detail

/// Step used by default: 1e-3 (1e-2 for third derivatives) times max(1, |x_i|).
inline double default_fd_step(int total_order) { return total_order >= 3 ? 1e-2 : 1e-3; }

/**
 * Central-difference estimate of d^|mu| f / dx^mu with one Richardson step:
 * (4 D(h/2) - D(h)) / 3. `h` <= 0 selects the default step.
 */
inline double fd_oracle(const std::function<double(std::span<const double>)>& f, std::span<const double> point,
                        const MultiIndex& mu, double h = 0.0) {
  if (mu.size() != point.size()) throw std::invalid_argument("fd_oracle: multi-index length does not match point");
  const int order = degree(mu);
  if (order > 3) throw std::invalid_argument("fd_oracle: total order must be <= 3");
  if (order == 0) return f(point);
  const double base = h > 0.0 ? h : default_fd_step(order);
  std::vector<double> step(point.size()), half(point.size());
  for (std::size_t i = 0; i < point.size(); ++i) {
    step[i] = base * std::max(1.0, std::abs(point[i]));
    half[i] = 0.5 * step[i];
  }
  const double coarse = detail::central_difference(f, point, mu, step);
  const double fine = detail::central_difference(f, point, mu, half);
  return (4.0 * fine - coarse) / 3.0;
}

/// Relative error used against the oracle: |a - b| / max(|b|, 1).
inline double oracle_error(double value, double oracle) { return std::abs(value - oracle) / std::max(std::abs(oracle), 1.0); }

/// Largest oracle error over every partial of F^2 up to total order 3 in (x, y).
inline double jet_vs_oracle_residual(const MetricSpec& metric, const TangentPoint& p) {
  const int n = metric.dimension();
  const Jet F = finsler_jet(metric, p, 3);
  const Jet f2 = F * F;
  auto f = [&](std::span<const double> z) {
    const double v = metric.finsler<double>(z.subspan(0, static_cast<std::size_t>(n)), z.subspan(static_cast<std::size_t>(n)));
    return v * v;
  };
  std::vector<double> z(p.x.data(), p.x.data() + n);
  z.insert(z.end(), p.y.data(), p.y.data() + n);
  const auto& layout = *f2.layout();
  double worst = 0.0;
  for (std::size_t r = 1; r < layout.size(); ++r) {
    const MultiIndex& mu = layout.index(r);
    worst = std::max(worst, oracle_error(extract(f2, mu), fd_oracle(f, z, mu)));
  }
  return worst;
}

/// Christoffel symbols of a_ij(x) from finite differences of the expressions, stored (k, i, j).
inline Tensor3 fd_christoffel(const MetricSpec& metric, const Vector& x) {
  const int n = metric.dimension();
  Tensor3 da(n);  // d a_ij / dx^k at (i, j, k)
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      auto f = [&](std::span<const double> z) { return metric.riemannian_part(z)(i, j); };
      for (int k = 0; k < n; ++k) {
        MultiIndex mu(static_cast<std::size_t>(n), 0);
        mu[static_cast<std::size_t>(k)] = 1;
        da(i, j, k) = fd_oracle(f, as_span(x), mu);
      }
    }
  const Matrix a_inv = metric.riemannian_part(as_span(x)).inverse();
  Tensor3 out(n);
  for (int k = 0; k < n; ++k)
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        double s = 0.0;
        for (int l = 0; l < n; ++l) s += 0.5 * a_inv(k, l) * (da(j, l, i) + da(i, l, j) - da(i, j, l));
        out(k, i, j) = s;
      }
  return out;
}

// ---------------------------------------------------------------------------
// Scenes

enum class DeformationExpectation { automatic, zero, nonzero };

struct Scene {
  std::string name;
  MetricSpec metric;
  std::optional<ImmersionSpec> immersion;
  std::vector<Vector> base;   // x (ambient scenes) or u (immersion scenes)
  std::vector<Vector> fiber;  // y or v
  std::uint64_t seed = 0;
  std::map<std::string, double> tolerances;
  DeformationExpectation deformation = DeformationExpectation::automatic;

  std::size_t size() const { return base.size(); }
  TangentPoint tangent_point(std::size_t i) const { return {base.at(i), fiber.at(i)}; }
  SubPoint sub_point(std::size_t i) const { return {base.at(i), fiber.at(i)}; }
};

/**
 * `count` points with base coordinates uniform in the box [low, high] and
 * fiber directions uniform on the unit sphere, scaled cyclically by 0.5, 1, 2.
 */
inline void sample_points(Scene& scene, int count, std::uint64_t seed, const Vector& low, const Vector& high, int fiber_dim) {
  if (low.size() != high.size()) throw ParseError("sample box bounds have different lengths");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> gauss(0.0, 1.0);
  static constexpr double kScales[] = {0.5, 1.0, 2.0};
  for (int p = 0; p < count; ++p) {
    Vector b(low.size());
    for (Eigen::Index i = 0; i < low.size(); ++i) b(i) = low(i) + (high(i) - low(i)) * unit(rng);
    Vector f(fiber_dim);
    do {
      for (int i = 0; i < fiber_dim; ++i) f(i) = gauss(rng);
    } while (f.norm() < 1e-6);
    f *= kScales[p % 3] / f.norm();
    scene.base.push_back(b);
    scene.fiber.push_back(f);
  }
}

// ---------------------------------------------------------------------------
// Report

enum class CheckMode { at_most, at_least };

inline const char* mode_name(CheckMode m) { return m == CheckMode::at_most ? "at_most" : "at_least"; }

struct CheckInfo {
  std::string identity;
  CheckMode mode = CheckMode::at_most;
  double tolerance = 0.0;
};

/// Every check the suite knows, with its default tolerance.
inline const std::map<std::string, CheckInfo>& check_catalogue() {
  static const std::map<std::string, CheckInfo> c{
      {"ambient.cartan.fiber_contraction", {"A_ijk y^k = 0", CheckMode::at_most, 1e-8}},
      {"ambient.cartan.symmetric", {"A_ijk is totally symmetric", CheckMode::at_most, 1e-8}},
      {"ambient.euler", {"g_ij y^i y^j = F^2 (relative to max(1, F^2))", CheckMode::at_most, 1e-10}},
      {"ambient.frame_duality", {"adapted coframe (dx, delta y / F) is dual to frame (delta/delta x, F d/dy)", CheckMode::at_most, 1e-10}},
      {"ambient.fundamental_tensor.inverse", {"g g^-1 = I", CheckMode::at_most, 1e-10}},
      {"ambient.fundamental_tensor.min_eigenvalue", {"smallest eigenvalue of g is positive", CheckMode::at_least, 0.0}},
      {"ambient.fundamental_tensor.symmetric", {"g_ij = g_ji", CheckMode::at_most, 1e-10}},
      {"ambient.homogeneity", {"F, g, G, N scale with degrees 1, 0, 2, 1 under y -> l y, l in {0.5, 2, 3}", CheckMode::at_most, 1e-9}},
      {"ambient.jet_vs_oracle", {"every partial of F^2 up to order 3 matches the finite-difference oracle (relative)", CheckMode::at_most, 1e-6}},
      {"ambient.riemannian.cartan_vanishes", {"A = 0 for a Riemannian metric", CheckMode::at_most, 1e-10}},
      {"ambient.riemannian.fiber_independent", {"g(x, y) does not depend on y for a Riemannian metric", CheckMode::at_most, 1e-10}},
      {"ambient.sasaki", {"Sasaki product: horizontal block = g, mixed block = 0, vertical block = g", CheckMode::at_most, 1e-10}},
      {"ambient.spray.two_routes", {"displayed spray formula equals 1/2 N y from the spray jet", CheckMode::at_most, 1e-9}},
      {"connections.chern.metric_compatible", {"Chern horizontal derivative of g vanishes", CheckMode::at_most, 1e-8}},
      {"connections.chern.symmetric", {"Chern horizontal coefficients symmetric in the lower indices", CheckMode::at_most, 1e-10}},
      {"connections.chern.spray_compatible", {"Gamma^l_jk y^j y^k = 2 G^l", CheckMode::at_most, 1e-8}},
      {"connections.chern.vertical_is_cartan", {"gamma^k_ij = g^ks A_sij", CheckMode::at_most, 1e-10}},
      {"connections.hashiguchi.berwald", {"Hashiguchi horizontal coefficients equal the Berwald coefficients d^2 G / dy dy", CheckMode::at_most, 1e-8}},
      {"connections.landsberg.fiber_contraction", {"L_ijk y^k = 0", CheckMode::at_most, 1e-8}},
      {"connections.landsberg.symmetric", {"L_ijk is totally symmetric", CheckMode::at_most, 1e-8}},
      {"connections.riemannian.levi_civita", {"Chern and Hashiguchi horizontal coefficients equal finite-difference Christoffel symbols of a_ij", CheckMode::at_most, 1e-8}},
      {"connections.riemannian.vertical_vanishes", {"Hashiguchi vertical coefficients vanish for a Riemannian metric", CheckMode::at_most, 1e-10}},
      {"evaluation.errors", {"number of sample points whose evaluation raised an error", CheckMode::at_most, 0.0}},
      {"submanifold.deformation.fiber_contraction", {"D^a_b v^b = 0", CheckMode::at_most, 1e-8}},
      {"submanifold.deformation.nonzero", {"max |D| is bounded away from 0", CheckMode::at_least, 1e-3}},
      {"submanifold.deformation.zero", {"max |D| = 0", CheckMode::at_most, 1e-10}},
      {"submanifold.ehresmann.corrected", {"delta y / F~ = B delta v / F + normal H du / F along the submanifold", CheckMode::at_most, 1e-8}},
      {"submanifold.ehresmann.tangential", {"tangential part of delta y / F~ equals delta v / F", CheckMode::at_most, 1e-8}},
      {"submanifold.frames", {"normal frame orthonormal and g~-orthogonal to B; dual frames and completeness", CheckMode::at_most, 1e-9}},
      {"submanifold.gauss_weingarten", {"ambient derivative of B and of the normal frame splits into induced, second fundamental form, shape operator and normal parts", CheckMode::at_most, 1e-8}},
      {"submanifold.hashiguchi.coincide", {"induced and intrinsic Hashiguchi horizontal coefficients coincide", CheckMode::at_most, 1e-8}},
      {"submanifold.hashiguchi.deformation_relation", {"induced = intrinsic Hashiguchi + D-weighted vertical corrections", CheckMode::at_most, 1e-7}},
      {"submanifold.hashiguchi.differ", {"induced and intrinsic Hashiguchi horizontal coefficients differ", CheckMode::at_least, 1e-6}},
      {"submanifold.hashiguchi.fiber_relation", {"(induced - intrinsic Hashiguchi)^m_ab v^b = -D^m_a / F", CheckMode::at_most, 1e-8}},
      {"submanifold.hashiguchi.iff", {"|D| < 1e-10 exactly when |induced - intrinsic Hashiguchi| < 1e-8 (otherwise > 1e-6); residual counts violations", CheckMode::at_most, 0.0}},
      {"submanifold.hashiguchi.koszul", {"intrinsic Hashiguchi coefficients agree with the Koszul-type coordinate formula", CheckMode::at_most, 1e-8}},
      {"submanifold.hashiguchi.vertical", {"induced and intrinsic Hashiguchi vertical coefficients coincide", CheckMode::at_most, 1e-8}},
      {"submanifold.induced_metric", {"B^T g~ B equals 1/2 d^2 F^2 / dv dv of the composed function", CheckMode::at_most, 1e-9}},
      {"submanifold.intrinsic_nonlinear", {"intrinsic N = induced N + D / F", CheckMode::at_most, 1e-7}},
  };
  return c;
}

struct CheckRecord {
  std::string name;
  std::string identity;
  CheckMode mode = CheckMode::at_most;
  double tolerance = 0.0;
  double residual = 0.0;
  bool passed = false;
  int worst_point = -1;
};

struct PointError {
  int point = -1;
  std::string kind;
  std::string message;
};

struct Report {
  std::string scene;
  std::size_t points = 0;
  bool passed = false;
  std::vector<CheckRecord> records;  // sorted by name
  std::vector<PointError> errors;    // sorted by point
};

// ---------------------------------------------------------------------------
// Per-point residuals

namespace detail {

using Residuals = std::map<std::string, double>;

inline double symmetry_residual(const Tensor3& t) {
  const int n = t.dim(0);
  double r = 0.0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k)
        r = std::max({r, std::abs(t(i, j, k) - t(j, i, k)), std::abs(t(i, j, k) - t(i, k, j)), std::abs(t(i, j, k) - t(k, j, i))});
  return r;
}

inline double last_contraction(const Tensor3& t, const Vector& y) {
  double r = 0.0;
  for (int i = 0; i < t.dim(0); ++i)
    for (int j = 0; j < t.dim(1); ++j) {
      double s = 0.0;
      for (int k = 0; k < t.dim(2); ++k) s += t(i, j, k) * y(k);
      r = std::max(r, std::abs(s));
    }
  return r;
}

inline void ambient_residuals(const MetricSpec& metric, const TangentPoint& p, Residuals& out) {
  const int n = metric.dimension();
  const AmbientEval a = ambient_eval(metric, p);
  out["ambient.fundamental_tensor.symmetric"] = max_abs(a.g - a.g.transpose());
  out["ambient.fundamental_tensor.inverse"] = max_abs(a.g * a.g_inv - Matrix::Identity(n, n));
  out["ambient.fundamental_tensor.min_eigenvalue"] = a.min_eigenvalue;
  out["ambient.euler"] = std::abs(p.y.dot(a.g * p.y) - a.F * a.F) / std::max(1.0, a.F * a.F);
  out["ambient.cartan.symmetric"] = symmetry_residual(a.A);
  out["ambient.cartan.fiber_contraction"] = last_contraction(a.A, p.y);
  double h = 0.0;
  for (double l : {0.5, 2.0, 3.0}) h = std::max(h, spray_homogeneity_check(metric, p, l));
  out["ambient.homogeneity"] = h;
  out["ambient.spray.two_routes"] = max_abs(a.G - 0.5 * a.N * p.y);
  out["ambient.jet_vs_oracle"] = jet_vs_oracle_residual(metric, p);

  const AdaptedFrames f = adapted_frames(a);
  Matrix frame(2 * n, 2 * n), coframe(2 * n, 2 * n);
  frame << f.horizontal, f.vertical;
  coframe << f.dx, f.delta_y;
  out["ambient.frame_duality"] = max_abs(coframe * frame - Matrix::Identity(2 * n, 2 * n));
  double s = 0.0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      s = std::max(s, std::abs(sasaki_inner(a, f.horizontal.col(i), f.horizontal.col(j)) - a.g(i, j)));
      s = std::max(s, std::abs(sasaki_inner(a, f.horizontal.col(i), f.vertical.col(j))));
      s = std::max(s, std::abs(sasaki_inner(a, f.vertical.col(i), f.vertical.col(j)) - a.g(i, j)));
    }
  out["ambient.sasaki"] = s;

  const ConnectionCoeffs chern = chern_coefficients(a);
  const LandsbergEval L = landsberg_tensor(a);
  const ConnectionCoeffs hash = hashiguchi_coefficients(chern, L);
  double sym = 0.0;
  for (int k = 0; k < n; ++k)
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) sym = std::max(sym, std::abs(chern.horizontal(k, i, j) - chern.horizontal(k, j, i)));
  out["connections.chern.symmetric"] = sym;
  out["connections.chern.spray_compatible"] = max_abs(bilinear(chern.horizontal, p.y, p.y) - 2.0 * a.G);
  out["connections.chern.vertical_is_cartan"] = (chern.vertical - raise_first(a.g_inv, a.A)).max_abs();
  out["connections.chern.metric_compatible"] = chern_metric_derivative(a, chern).max_abs();
  out["connections.landsberg.symmetric"] = symmetry_residual(L.L);
  out["connections.landsberg.fiber_contraction"] = last_contraction(L.L, p.y);
  out["connections.hashiguchi.berwald"] = (hash.horizontal - a.berwald).max_abs();

  if (metric.is_riemannian()) {
    out["ambient.riemannian.cartan_vanishes"] = a.A.max_abs();
    Vector y2 = p.y.reverse() + Vector::Constant(n, 0.5);
    if (y2.norm() < 1e-3) y2(0) += 1.0;
    out["ambient.riemannian.fiber_independent"] = max_abs(ambient_eval(metric, {p.x, y2}).g - a.g);
    const Tensor3 fd = fd_christoffel(metric, p.x);
    out["connections.riemannian.levi_civita"] =
        std::max((chern.horizontal - fd).max_abs(), (hash.horizontal - fd).max_abs());
    out["connections.riemannian.vertical_vanishes"] = hash.vertical.max_abs();
  }
}

inline void submanifold_residuals(const Scene& scene, const SubPoint& sp, Residuals& out) {
  const InducedPackage p = induce(scene.metric, *scene.immersion, sp);
  ambient_residuals(scene.metric, TangentPoint{p.frames.x, p.frames.y}, out);
  const double F = p.metric.F;
  out["submanifold.frames"] = frame_residuals(p.frames).max();
  out["submanifold.induced_metric"] = p.metric.residual;
  out["submanifold.intrinsic_nonlinear"] = max_abs(p.N_int - p.N_ind - p.D / F);
  out["submanifold.deformation.fiber_contraction"] = max_abs(p.D * sp.v);
  out["submanifold.gauss_weingarten"] = p.gauss_weingarten;
  out["submanifold.ehresmann.tangential"] = p.restriction.tangential;
  out["submanifold.ehresmann.corrected"] = p.restriction.corrected;
  out["submanifold.hashiguchi.deformation_relation"] = p.comparison.inds_residual;
  out["submanifold.hashiguchi.vertical"] = p.comparison.vertical_gap;
  out["submanifold.hashiguchi.fiber_relation"] = p.comparison.fiber_identity;
  out["submanifold.hashiguchi.koszul"] = p.hash_int.koszul_residual;

  DeformationExpectation e = scene.deformation;
  if (e == DeformationExpectation::automatic && scene.metric.is_riemannian()) e = DeformationExpectation::zero;
  switch (e) {
    case DeformationExpectation::zero:
      out["submanifold.deformation.zero"] = p.comparison.deformation_norm;
      out["submanifold.hashiguchi.coincide"] = p.comparison.horizontal_gap;
      break;
    case DeformationExpectation::nonzero:
      out["submanifold.deformation.nonzero"] = p.comparison.deformation_norm;
      out["submanifold.hashiguchi.differ"] = p.comparison.horizontal_gap;
      break;
    case DeformationExpectation::automatic: {
      const bool flat = p.comparison.deformation_norm < 1e-10;
      const bool consistent = flat ? p.comparison.horizontal_gap < 1e-8 : p.comparison.horizontal_gap > 1e-6;
      out["submanifold.hashiguchi.iff"] = consistent ? 0.0 : 1.0;
      break;
    }
  }
}

}  // namespace detail

/// Parallelism cap: FINSLER_LAB_THREADS if set to a positive integer, else hardware concurrency.
inline unsigned default_thread_count() {
  if (const char* env = std::getenv("FINSLER_LAB_THREADS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && v > 0) return static_cast<unsigned>(v);
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

/// Applies `fn(i)` for i in [0, count) on up to `threads` workers; results are indexed, so order is irrelevant.
inline void parallel_for(std::size_t count, unsigned threads, const std::function<void(std::size_t)>& fn) {
  threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(std::max<std::size_t>(count, 1))));
  if (threads == 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::vector<std::thread> pool;
  for (unsigned t = 0; t < threads; ++t) {
    pool.emplace_back([&, t] {
      for (std::size_t i = t; i < count; i += threads) fn(i);
    });
  }
  for (auto& th : pool) th.join();
}

/// Runs every applicable check at every sample point. Errors at a point are captured, not thrown.
inline Report run_suite(const Scene& scene, unsigned threads = default_thread_count()) {
  if (scene.size() == 0) throw std::invalid_argument("run_suite: scene has no sample points");
  const std::size_t count = scene.size();
  std::vector<detail::Residuals> results(count);
  std::vector<std::optional<PointError>> errors(count);
  parallel_for(count, threads, [&](std::size_t i) {
    try {
      if (scene.immersion) detail::submanifold_residuals(scene, scene.sub_point(i), results[i]);
      else detail::ambient_residuals(scene.metric, scene.tangent_point(i), results[i]);
    } catch (const std::exception& e) {
      const char* kind = dynamic_cast<const RankError*>(&e)           ? "rank"
                         : dynamic_cast<const ConvexityError*>(&e)    ? "convexity"
                         : dynamic_cast<const DomainError*>(&e)       ? "domain"
                         : dynamic_cast<const ConsistencyError*>(&e)  ? "consistency"
                                                                      : "error";
      errors[i] = PointError{static_cast<int>(i), kind, e.what()};
      results[i].clear();
    }
  });

  Report report;
  report.scene = scene.name;
  report.points = count;
  std::map<std::string, CheckRecord> records;
  const auto& catalogue = check_catalogue();
  for (std::size_t i = 0; i < count; ++i) {
    for (const auto& [name, value] : results[i]) {
      auto it = records.find(name);
      if (it == records.end()) {
        const CheckInfo& info = catalogue.at(name);
        CheckRecord r;
        r.name = name;
        r.identity = info.identity;
        r.mode = info.mode;
        r.tolerance = info.tolerance;
        if (auto o = scene.tolerances.find(name); o != scene.tolerances.end()) r.tolerance = o->second;
        r.residual = value;
        r.worst_point = static_cast<int>(i);
        records.emplace(name, r);
        continue;
      }
      CheckRecord& r = it->second;
      const bool worse = std::isnan(value) ? !std::isnan(r.residual)
                                           : (r.mode == CheckMode::at_most ? value > r.residual : value < r.residual);
      if (worse) {
        r.residual = value;
        r.worst_point = static_cast<int>(i);
      }
    }
    if (errors[i]) report.errors.push_back(*errors[i]);
  }
  {
    const CheckInfo& info = catalogue.at("evaluation.errors");
    CheckRecord r{"evaluation.errors", info.identity, info.mode, info.tolerance,
                  static_cast<double>(report.errors.size()), false,
                  report.errors.empty() ? -1 : report.errors.front().point};
    if (auto o = scene.tolerances.find(r.name); o != scene.tolerances.end()) r.tolerance = o->second;
    records.emplace(r.name, r);
  }
  report.passed = true;
  for (auto& [name, r] : records) {
    r.passed = r.mode == CheckMode::at_most ? r.residual <= r.tolerance : r.residual > r.tolerance;
    report.passed = report.passed && r.passed;
    report.records.push_back(r);
  }
  return report;
}

}  // namespace finsler_lab
