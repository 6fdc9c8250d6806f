#pragma once

#include <gtest/gtest.h>

#include <string>
#include <vector>

#include "finsler_lab/finsler_lab.hpp"

namespace fl_test {

using namespace finsler_lab;

inline const std::vector<std::string> kIdentity3{"1", "0", "0", "0", "1", "0", "0", "0", "1"};

/// a = identity, b = (0.3, 0, 0) on R^3.
inline MetricSpec randers_example() { return MetricSpec::randers(3, kIdentity3, {"0.3", "0", "0"}); }

/// Randers metric with x-dependent a and b (non-vanishing spray and Landsberg tensor).
inline MetricSpec curved_randers() {
  return MetricSpec::randers(3, {"1 + 0.1*x2^2", "0", "0", "0", "1", "0", "0", "0", "1 + 0.1*x1^2"},
                             {"0.2*sin(x2)", "0.1*x1*x3", "0.1*cos(x1)"});
}

inline MetricSpec round_sphere_chart() { return MetricSpec::riemannian(2, {"1", "0", "0", "sin(x1)^2"}); }

inline MetricSpec conformal_riemannian() {
  return MetricSpec::riemannian(3, {"1 + 0.2*x3^2", "0", "0.1*x2", "0", "1 + 0.2*x1^2", "0", "0.1*x2", "0", "2"});
}

inline ImmersionSpec unit_sphere() { return ImmersionSpec(2, {"sin(u1)*cos(u2)", "sin(u1)*sin(u2)", "cos(u1)"}); }
inline ImmersionSpec plane() { return ImmersionSpec(2, {"u1", "u2", "0"}); }
inline ImmersionSpec unit_circle() { return ImmersionSpec(1, {"cos(u1)", "sin(u1)"}); }

inline Vector vec(std::initializer_list<double> v) {
  Vector out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) out(i++) = x;
  return out;
}

inline TangentPoint tp(std::initializer_list<double> x, std::initializer_list<double> y) { return {vec(x), vec(y)}; }
inline SubPoint sub(std::initializer_list<double> u, std::initializer_list<double> v) { return {vec(u), vec(v)}; }

/// Deterministic sample points in a box, fibers on spheres of radius 0.5, 1, 2.
inline std::vector<std::pair<Vector, Vector>> samples(int count, std::uint64_t seed, const Vector& low, const Vector& high) {
  Scene s;
  sample_points(s, count, seed, low, high, static_cast<int>(low.size()));
  std::vector<std::pair<Vector, Vector>> out;
  for (std::size_t i = 0; i < s.size(); ++i) out.emplace_back(s.base[i], s.fiber[i]);
  return out;
}

}  // namespace fl_test
