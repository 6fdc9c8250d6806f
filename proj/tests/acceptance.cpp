// Acceptance gate: one PASS/FAIL line per criterion, exit status 1 if any fails.

#include <sys/wait.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "finsler_lab/finsler_lab.hpp"
#include "finsler_lab/scene_io.hpp"

namespace fl = finsler_lab;

namespace {

int failures = 0;

void report(const std::string& id, const std::string& what, bool ok, const std::string& detail) {
  std::printf("[%s] %-4s %s: %s\n", ok ? "PASS" : "FAIL", id.c_str(), what.c_str(), detail.c_str());
  std::fflush(stdout);
  if (!ok) ++failures;
}

std::string sci(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3e", v);
  return buf;
}

std::string at_most(double value, double tol) { return "max " + sci(value) + " (tol " + sci(tol) + ")"; }

fl::Scene scene(const std::string& name) { return fl::load_scene(std::string(FINSLER_LAB_SCENES_DIR) + "/" + name + ".json"); }

const std::vector<std::string> kImmersionScenes{"euclidean-plane", "circle", "riemannian-sphere", "randers-sphere"};
const std::vector<std::string> kAllScenes{"euclidean-plane",   "circle",         "round-sphere-chart",
                                          "riemannian-sphere", "randers-sphere", "randers-minkowski",
                                          "randers-curved",    "nonconvex",      "nonhomogeneous"};

fl::MetricSpec randers_example() {
  return fl::MetricSpec::randers(3, {"1", "0", "0", "0", "1", "0", "0", "0", "1"}, {"0.3", "0", "0"});
}

fl::MetricSpec curved_randers() {
  return fl::MetricSpec::randers(3, {"1 + 0.1*x2^2", "0", "0", "0", "1", "0", "0", "0", "1 + 0.1*x1^2"},
                                 {"0.2*sin(x2)", "0.1*x1*x3", "0.1*cos(x1)"});
}

fl::Scene sampled(const fl::MetricSpec& m, int count, std::uint64_t seed) {
  fl::Scene s;
  s.metric = m;
  fl::Vector low = fl::Vector::Constant(m.dimension(), -1.5), high = fl::Vector::Constant(m.dimension(), 1.5);
  fl::sample_points(s, count, seed, low, high, m.dimension());
  return s;
}

double symmetry(const fl::Tensor3& t) {
  const int n = t.dim(0);
  double r = 0.0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k)
        r = std::max({r, std::abs(t(i, j, k) - t(j, i, k)), std::abs(t(i, j, k) - t(k, j, i))});
  return r;
}

double contraction(const fl::Tensor3& t, const fl::Vector& y) {
  const int n = t.dim(0);
  double r = 0.0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      double s = 0.0;
      for (int k = 0; k < n; ++k) s += t(i, j, k) * y(k);
      r = std::max(r, std::abs(s));
    }
  return r;
}

// Induced packages for every point of every bundled immersion scene, computed once.
std::map<std::string, std::vector<fl::InducedPackage>> induced_cache() {
  std::map<std::string, std::vector<fl::InducedPackage>> out;
  for (const auto& name : kImmersionScenes) {
    const fl::Scene s = scene(name);
    std::vector<fl::InducedPackage> pkgs(s.size());
    fl::parallel_for(s.size(), fl::default_thread_count(),
                     [&](std::size_t i) { pkgs[i] = fl::induce(s.metric, *s.immersion, s.sub_point(i)); });
    out.emplace(name, std::move(pkgs));
  }
  return out;
}

struct CliRun {
  int code = -1;
  std::string out;
};

CliRun cli(const std::string& args) {
  const std::string cmd = std::string(FINSLER_LAB_CLI) + " " + args + " 2>/dev/null";
  CliRun r;
  FILE* pipe = ::popen(cmd.c_str(), "r");
  if (!pipe) return r;
  char buf[4096];
  std::size_t n;
  while ((n = std::fread(buf, 1, sizeof buf, pipe)) > 0) r.out.append(buf, n);
  const int status = ::pclose(pipe);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

void criterion_1() {
  const fl::Scene s = sampled(randers_example(), 20, 101);
  double worst = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i) worst = std::max(worst, fl::jet_vs_oracle_residual(s.metric, s.tangent_point(i)));
  report("1", "jet partials of F^2 up to order 3 vs finite-difference oracle (Randers, 20 points)", worst < 1e-6,
         "relative " + at_most(worst, 1e-6));
}

void criterion_2() {
  double homog = 0.0, min_eig = INFINITY;
  for (const auto& m : {randers_example(), curved_randers()}) {
    const fl::Scene s = sampled(m, 20, 202);
    for (std::size_t i = 0; i < s.size(); ++i) {
      const auto p = s.tangent_point(i);
      for (double l : {0.5, 2.0, 3.0}) homog = std::max(homog, fl::spray_homogeneity_check(m, p, l));
      min_eig = std::min(min_eig, fl::ambient_eval(m, p).min_eigenvalue);
    }
  }
  report("2", "homogeneity of F, g, G, N and positive definiteness of g", homog < 1e-9 && min_eig > 0.0,
         "homogeneity " + at_most(homog, 1e-9) + ", min eigenvalue " + sci(min_eig));
}

void criterion_3() {
  double a_sym = 0.0, a_y = 0.0, l_sym = 0.0, l_y = 0.0, gamma = 0.0;
  for (const auto& m : {randers_example(), curved_randers()}) {
    const fl::Scene s = sampled(m, 20, 303);
    for (std::size_t i = 0; i < s.size(); ++i) {
      const auto a = fl::ambient_eval(m, s.tangent_point(i));
      const auto L = fl::landsberg_tensor(a);
      const auto c = fl::chern_coefficients(a);
      a_sym = std::max(a_sym, symmetry(a.A));
      a_y = std::max(a_y, contraction(a.A, a.y));
      l_sym = std::max(l_sym, symmetry(L.L));
      l_y = std::max(l_y, contraction(L.L, a.y));
      gamma = std::max(gamma, fl::max_abs(c.vertical - fl::raise_first(a.g_inv, a.A)));
    }
  }
  const bool ok = a_sym < 1e-8 && a_y < 1e-8 && l_sym < 1e-8 && l_y < 1e-8 && gamma < 1e-10;
  report("3", "Cartan and Landsberg symmetry and fiber contraction; vertical = raised Cartan", ok,
         "A sym " + sci(a_sym) + ", A y " + sci(a_y) + ", L sym " + sci(l_sym) + ", L y " + sci(l_y) + " (tol 1e-8); gamma " +
             at_most(gamma, 1e-10));
}

void criterion_4() {
  const fl::Scene s = scene("round-sphere-chart");
  double h = 0.0, v = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    const auto a = fl::ambient_eval(s.metric, s.tangent_point(i));
    const auto c = fl::hashiguchi_coefficients(a);
    const double t = a.x(0);
    fl::Tensor3 exact(2);
    exact(0, 1, 1) = -std::sin(t) * std::cos(t);
    exact(1, 0, 1) = exact(1, 1, 0) = std::cos(t) / std::sin(t);
    h = std::max(h, fl::max_abs(c.horizontal - exact));
    v = std::max(v, fl::max_abs(c.vertical));
  }
  report("4", "Riemannian reduction on the round sphere chart: closed-form Christoffel symbols", h < 1e-8 && v < 1e-10,
         "horizontal " + at_most(h, 1e-8) + ", vertical " + at_most(v, 1e-10));
}

void criterion_5(const std::map<std::string, std::vector<fl::InducedPackage>>& cache) {
  double duality = 0.0;
  for (const auto& m : {randers_example(), curved_randers()}) {
    const fl::Scene s = sampled(m, 20, 505);
    for (std::size_t i = 0; i < s.size(); ++i) {
      const auto a = fl::ambient_eval(m, s.tangent_point(i));
      const auto f = fl::adapted_frames(a);
      const int n = a.dimension;
      fl::Matrix co(2 * n, 2 * n), fr(2 * n, 2 * n);
      co << f.dx, f.delta_y;
      fr << f.horizontal, f.vertical;
      duality = std::max(duality, fl::max_abs(co * fr - fl::Matrix::Identity(2 * n, 2 * n)));
    }
  }
  report("5a", "frame and coframe duality", duality < 1e-10, at_most(duality, 1e-10));

  double literal = 0.0, corrected = 0.0;
  for (const auto& p : cache.at("randers-sphere")) {
    literal = std::max(literal, p.restriction.literal);
    corrected = std::max(corrected, p.restriction.corrected);
  }
  report("5b", "restriction delta y / F~ = B delta v / F on S^2 in Randers R^3", literal < 1e-8,
         at_most(literal, 1e-8) + "; with the normal term N H du / F added: " + sci(corrected));
}

void criterion_6(const std::map<std::string, std::vector<fl::InducedPackage>>& cache) {
  double worst = 0.0;
  for (const auto& [name, pkgs] : cache)
    for (const auto& p : pkgs) worst = std::max(worst, fl::frame_residuals(p.frames).max());
  report("6", "normal frame orthonormality, duality and completeness on every scene", worst < 1e-9, at_most(worst, 1e-9));
}

void criterion_7(const std::map<std::string, std::vector<fl::InducedPackage>>& cache) {
  double worst = 0.0;
  for (const auto& p : cache.at("randers-sphere")) worst = std::max(worst, fl::max_abs(p.N_int - p.N_ind - p.D / p.metric.F));
  report("7", "intrinsic N = induced N + D / F on S^2 in Randers R^3", worst < 1e-7, at_most(worst, 1e-7));
}

void criterion_8(const std::map<std::string, std::vector<fl::InducedPackage>>& cache) {
  double worst = 0.0;
  for (const auto& [name, pkgs] : cache)
    for (const auto& p : pkgs) worst = std::max(worst, fl::max_abs(p.D * p.frames.v));
  report("8", "D v = 0 on every scene", worst < 1e-8, at_most(worst, 1e-8));
}

void criterion_9(const std::map<std::string, std::vector<fl::InducedPackage>>& cache) {
  double worst = 0.0;
  for (const auto& [name, pkgs] : cache)
    for (const auto& p : pkgs) worst = std::max(worst, p.gauss_weingarten);
  report("9", "Gauss and Weingarten reconstruction from the coefficient formulas", worst < 1e-8, at_most(worst, 1e-8));
}

void criterion_10(const std::map<std::string, std::vector<fl::InducedPackage>>& cache) {
  double rel = 0.0, gap = INFINITY, dnorm = INFINITY;
  for (const auto& p : cache.at("randers-sphere")) {
    rel = std::max(rel, p.comparison.inds_residual);
    gap = std::min(gap, p.comparison.horizontal_gap);
    dnorm = std::min(dnorm, p.comparison.deformation_norm);
  }
  report("10a", "induced = intrinsic Hashiguchi + D corrections on S^2 in Randers R^3 (nontrivial instance)",
         rel < 1e-7 && gap > 1e-6 && dnorm > 1e-3,
         "residual " + at_most(rel, 1e-7) + ", min |H - H*| " + sci(gap) + " (> 1e-6), min |D| " + sci(dnorm) + " (> 1e-3)");

  double d = 0.0, h = 0.0;
  for (const auto& name : {"euclidean-plane", "circle", "riemannian-sphere"}) {
    for (const auto& p : cache.at(name)) {
      d = std::max(d, p.comparison.deformation_norm);
      h = std::max(h, p.comparison.horizontal_gap);
    }
  }
  report("10b", "Riemannian scenes: D = 0 and induced = intrinsic Hashiguchi", d < 1e-10 && h < 1e-8,
         "|D| " + at_most(d, 1e-10) + ", |H - H*| " + at_most(h, 1e-8));

  double v = 0.0, fiber = 0.0;
  for (const auto& [name, pkgs] : cache)
    for (const auto& p : pkgs) {
      v = std::max(v, p.comparison.vertical_gap);
      fiber = std::max(fiber, p.comparison.fiber_identity);
    }
  report("10c", "vertical parts coincide on every scene", v < 1e-8,
         at_most(v, 1e-8) + "; (H - H*) v = -D / F residual " + sci(fiber));
}

void criterion_11() {
  const std::map<std::string, int> documented{
      {"euclidean-plane", 0},   {"circle", 0},         {"round-sphere-chart", 0}, {"riemannian-sphere", 0},
      {"randers-minkowski", 0}, {"randers-curved", 0}, {"randers-sphere", 1},     {"nonconvex", 3},
      {"nonhomogeneous", 1}};
  bool identical = true, codes = true;
  std::string mismatches;
  for (const auto& name : kAllScenes) {
    const std::string args = "verify --scene " + std::string(FINSLER_LAB_SCENES_DIR) + "/" + name + ".json";
    const CliRun a = cli(args), b = cli(args);
    if (a.out != b.out || a.code != b.code) {
      identical = false;
      mismatches += " " + name + "(output)";
    }
    if (a.code != documented.at(name)) {
      codes = false;
      mismatches += " " + name + "(exit " + std::to_string(a.code) + ")";
    }
  }
  report("11a", "verify output bit-identical across two runs on every bundled scene", identical,
         identical ? std::to_string(kAllScenes.size()) + " scenes" : mismatches);
  report("11b", "verify exit codes match the documented table", codes, codes ? "all match" : mismatches);
  const CliRun r = cli("verify --scene " + std::string(FINSLER_LAB_SCENES_DIR) + "/randers-sphere.json");
  report("11c", "verify on randers-sphere exits 0 with expected-nonzero checks configured", r.code == 0,
         "exit " + std::to_string(r.code) + " (the deformation relation of 10a is part of the suite)");
}

}  // namespace

int main() {
  const auto start = std::chrono::steady_clock::now();
  try {
    criterion_1();
    criterion_2();
    criterion_3();
    criterion_4();
    const auto cache = induced_cache();
    criterion_5(cache);
    criterion_6(cache);
    criterion_7(cache);
    criterion_8(cache);
    criterion_9(cache);
    criterion_10(cache);
    criterion_11();
  } catch (const std::exception& e) {
    std::printf("[FAIL] acceptance aborted: %s\n", e.what());
    return 1;
  }
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  std::printf("%d criteria failed; %.1f s\n", failures, seconds);
  return failures == 0 ? 0 : 1;
}
