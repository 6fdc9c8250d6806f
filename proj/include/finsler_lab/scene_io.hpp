#pragma once

// JSON scene files and JSON serialisation of results.

#include <charconv>
#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "finsler_lab/errors.hpp"
#include "finsler_lab/submanifold.hpp"
#include "finsler_lab/verify.hpp"

namespace finsler_lab {

using Json = nlohmann::ordered_json;

namespace detail {

inline void require_keys(const Json& obj, const std::string& where, const std::set<std::string>& allowed) {
  if (!obj.is_object()) throw ParseError(where + ": expected an object");
  for (const auto& [key, value] : obj.items()) {
    if (!allowed.count(key)) throw ParseError("unknown key '" + (where.empty() ? key : where + "." + key) + "'");
  }
}

inline const Json& required(const Json& obj, const std::string& where, const std::string& key) {
  auto it = obj.find(key);
  if (it == obj.end()) throw ParseError("missing key '" + (where.empty() ? key : where + "." + key) + "'");
  return *it;
}

inline std::string shortest(double v) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  if (ec != std::errc()) throw ParseError("cannot format number");
  return std::string(buf, end);
}

inline std::string expression_text(const Json& j, const std::string& where) {
  if (j.is_string()) return j.get<std::string>();
  if (j.is_number()) return shortest(j.get<double>());
  throw ParseError(where + ": expected an expression string or a number");
}

inline std::vector<std::string> expression_list(const Json& j, const std::string& where) {
  if (!j.is_array()) throw ParseError(where + ": expected an array");
  std::vector<std::string> out;
  for (std::size_t i = 0; i < j.size(); ++i) out.push_back(expression_text(j[i], where + "[" + std::to_string(i) + "]"));
  return out;
}

inline Vector number_vector(const Json& j, const std::string& where) {
  if (!j.is_array()) throw ParseError(where + ": expected an array of numbers");
  Vector v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_number()) throw ParseError(where + "[" + std::to_string(i) + "]: expected a number");
    v(static_cast<Eigen::Index>(i)) = j[i].get<double>();
  }
  return v;
}

inline int integer(const Json& j, const std::string& where) {
  if (!j.is_number_integer()) throw ParseError(where + ": expected an integer");
  return j.get<int>();
}

inline std::map<std::string, double> parameters(const Json& obj, const std::string& where) {
  std::map<std::string, double> out;
  auto it = obj.find("parameters");
  if (it == obj.end()) return out;
  if (!it->is_object()) throw ParseError(where + ".parameters: expected an object");
  for (const auto& [k, v] : it->items()) {
    if (!v.is_number()) throw ParseError(where + ".parameters." + k + ": expected a number");
    out[k] = v.get<double>();
  }
  return out;
}

inline MetricSpec parse_metric(const Json& j) {
  require_keys(j, "metric", {"kind", "dimension", "a", "b", "F", "parameters"});
  const Json& kind_j = required(j, "metric", "kind");
  if (!kind_j.is_string()) throw ParseError("metric.kind: expected a string");
  const std::string kind = kind_j.get<std::string>();
  const int n = integer(required(j, "metric", "dimension"), "metric.dimension");
  const auto params = parameters(j, "metric");
  auto forbid = [&](std::initializer_list<const char*> keys) {
    for (const char* k : keys)
      if (j.contains(k)) throw ParseError("unknown key 'metric." + std::string(k) + "' for kind '" + kind + "'");
  };
  auto matrix = [&]() {
    const Json& a = required(j, "metric", "a");
    if (!a.is_array()) throw ParseError("metric.a: expected an array of rows");
    std::vector<std::string> out;
    for (std::size_t r = 0; r < a.size(); ++r) {
      auto row = expression_list(a[r], "metric.a[" + std::to_string(r) + "]");
      if (static_cast<int>(row.size()) != n) throw ParseError("metric.a[" + std::to_string(r) + "]: expected " + std::to_string(n) + " entries");
      out.insert(out.end(), row.begin(), row.end());
    }
    return out;
  };
  if (kind == "euclidean") {
    forbid({"a", "b", "F"});
    return MetricSpec::euclidean(n);
  }
  if (kind == "riemannian") {
    forbid({"b", "F"});
    return MetricSpec::riemannian(n, matrix(), params);
  }
  if (kind == "randers") {
    forbid({"F"});
    return MetricSpec::randers(n, matrix(), expression_list(required(j, "metric", "b"), "metric.b"), params);
  }
  if (kind == "custom") {
    forbid({"a", "b"});
    return MetricSpec::custom(n, expression_text(required(j, "metric", "F"), "metric.F"), params);
  }
  throw ParseError("metric.kind: unknown kind '" + kind + "'");
}

}  // namespace detail

/// Parses a scene document. Unknown keys are rejected with their dotted path.
inline Scene parse_scene(const std::string& text, const std::string& default_name = "scene") {
  Json doc;
  try {
    doc = Json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(std::string("scene is not valid JSON: ") + e.what(), e.byte);
  }
  using namespace detail;
  require_keys(doc, "", {"name", "metric", "immersion", "points", "tolerances", "expect"});
  Scene s;
  s.name = default_name;
  if (doc.contains("name")) {
    if (!doc["name"].is_string()) throw ParseError("name: expected a string");
    s.name = doc["name"].get<std::string>();
  }
  s.metric = parse_metric(required(doc, "", "metric"));
  const auto metric_params = parameters(doc["metric"], "metric");

  if (doc.contains("immersion")) {
    const Json& im = doc["immersion"];
    require_keys(im, "immersion", {"dimension", "components", "parameters"});
    auto params = metric_params;
    for (const auto& [k, v] : parameters(im, "immersion")) params[k] = v;
    s.immersion = ImmersionSpec(integer(required(im, "immersion", "dimension"), "immersion.dimension"),
                                expression_list(required(im, "immersion", "components"), "immersion.components"), params);
    if (s.immersion->ambient_dimension() != s.metric.dimension()) {
      throw ParseError("immersion.components: expected " + std::to_string(s.metric.dimension()) + " components, got " +
                       std::to_string(s.immersion->ambient_dimension()));
    }
  }
  const bool sub = s.immersion.has_value();
  const int base_dim = sub ? s.immersion->dimension() : s.metric.dimension();
  const std::string bk = sub ? "u" : "x", fk = sub ? "v" : "y";

  const Json& pts = required(doc, "", "points");
  require_keys(pts, "points", {"explicit", "sample"});
  if (pts.contains("explicit")) {
    const Json& ex = pts["explicit"];
    if (!ex.is_array()) throw ParseError("points.explicit: expected an array");
    for (std::size_t i = 0; i < ex.size(); ++i) {
      const std::string where = "points.explicit[" + std::to_string(i) + "]";
      require_keys(ex[i], where, {bk, fk});
      Vector b = number_vector(required(ex[i], where, bk), where + "." + bk);
      Vector f = number_vector(required(ex[i], where, fk), where + "." + fk);
      if (b.size() != base_dim || f.size() != base_dim) {
        throw ParseError(where + ": expected " + std::to_string(base_dim) + " coordinates in '" + bk + "' and '" + fk + "'");
      }
      if (max_abs(f) == 0.0) throw ParseError(where + "." + fk + ": fiber coordinates must not all vanish");
      s.base.push_back(b);
      s.fiber.push_back(f);
    }
  }
  if (pts.contains("sample")) {
    const Json& sm = pts["sample"];
    require_keys(sm, "points.sample", {"count", "seed", "low", "high"});
    const int count = integer(required(sm, "points.sample", "count"), "points.sample.count");
    if (count < 1) throw ParseError("points.sample.count: must be >= 1");
    const Json& seed = required(sm, "points.sample", "seed");
    if (!seed.is_number_unsigned() && !seed.is_number_integer()) throw ParseError("points.sample.seed: expected an integer");
    s.seed = seed.get<std::uint64_t>();
    const Vector low = number_vector(required(sm, "points.sample", "low"), "points.sample.low");
    const Vector high = number_vector(required(sm, "points.sample", "high"), "points.sample.high");
    if (low.size() != base_dim || high.size() != base_dim) {
      throw ParseError("points.sample: 'low' and 'high' need " + std::to_string(base_dim) + " entries");
    }
    sample_points(s, count, s.seed, low, high, base_dim);
  }
  if (s.size() == 0) throw ParseError("points: the scene has no sample points");

  if (doc.contains("tolerances")) {
    const Json& t = doc["tolerances"];
    if (!t.is_object()) throw ParseError("tolerances: expected an object");
    for (const auto& [k, v] : t.items()) {
      if (!check_catalogue().count(k)) throw ParseError("unknown key 'tolerances." + k + "'");
      if (!v.is_number()) throw ParseError("tolerances." + k + ": expected a number");
      s.tolerances[k] = v.get<double>();
    }
  }
  if (doc.contains("expect")) {
    const Json& e = doc["expect"];
    require_keys(e, "expect", {"deformation"});
    if (e.contains("deformation")) {
      const std::string d = e["deformation"].is_string() ? e["deformation"].get<std::string>() : "";
      if (d == "zero") s.deformation = DeformationExpectation::zero;
      else if (d == "nonzero") s.deformation = DeformationExpectation::nonzero;
      else if (d == "auto") s.deformation = DeformationExpectation::automatic;
      else throw ParseError("expect.deformation: expected \"zero\", \"nonzero\" or \"auto\"");
    }
  }
  return s;
}

inline Scene load_scene(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open scene file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  std::string stem = path;
  if (auto slash = stem.find_last_of('/'); slash != std::string::npos) stem = stem.substr(slash + 1);
  if (auto dot = stem.rfind('.'); dot != std::string::npos) stem = stem.substr(0, dot);
  return parse_scene(ss.str(), stem);
}

// ---------------------------------------------------------------------------
// Output

inline Json to_json(const Vector& v) {
  Json j = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) j.push_back(v(i));
  return j;
}

inline Json to_json(const Matrix& m) {
  Json j = Json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    Json row = Json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    j.push_back(row);
  }
  return j;
}

inline Json to_json(const Tensor3& t) {
  Json j = Json::array();
  for (int a = 0; a < t.dim(0); ++a) {
    Json s = Json::array();
    for (int b = 0; b < t.dim(1); ++b) {
      Json row = Json::array();
      for (int c = 0; c < t.dim(2); ++c) row.push_back(t(a, b, c));
      s.push_back(row);
    }
    j.push_back(s);
  }
  return j;
}

inline Json conventions() {
  return Json{
      {"matrices", "row-major [i][j]; N[i][j] = N^i_j, g[i][j] = g_ij"},
      {"rank3", "A[i][j][k] = A_ijk; dg_dx[i][j][k] = dg_ij/dx^k; L[i][j][k] = L_ijk"},
      {"connection_coefficients", "[upper][lower][lower]; Gamma[k][i][j] = Gamma^k_ij, derivative direction last"},
      {"horizontal_frame", "delta/delta x^j = d/dx^j - N^i_j d/dy^i"},
      {"ehresmann_form", "theta^i = (dy^i + N^i_j dx^j) / F"},
      {"submanifold_frames", "B[i][a] = dx^i/du^a; normal[i][a]; Btilde[a][i]; Ntilde[a][i]; H[a][l]"},
      {"second_fundamental_form", "S[a][alpha][beta]; shape operator A[beta][a][alpha]; normal connection [b][a][alpha]"},
  };
}

inline Json to_json(const AmbientEval& a) {
  Json j;
  j["dimension"] = a.dimension;
  j["x"] = to_json(a.x);
  j["y"] = to_json(a.y);
  j["F"] = a.F;
  j["l"] = to_json(a.l);
  j["g"] = to_json(a.g);
  j["g_inv"] = to_json(a.g_inv);
  j["min_eigenvalue"] = a.min_eigenvalue;
  j["A"] = to_json(a.A);
  j["dg_dx"] = to_json(a.dg_dx);
  j["G"] = to_json(a.G);
  j["N"] = to_json(a.N);
  j["berwald"] = to_json(a.berwald);
  return j;
}

inline Json to_json(const ConnectionCoeffs& c) {
  return Json{{"kind", kind_name(c.kind)}, {"horizontal", to_json(c.horizontal)}, {"vertical", to_json(c.vertical)}};
}

inline Json to_json(const HashiguchiComparison& c) {
  return Json{{"deformation_relation_residual", c.inds_residual},
              {"deformation_norm", c.deformation_norm},
              {"horizontal_gap", c.horizontal_gap},
              {"vertical_gap", c.vertical_gap},
              {"fiber_relation_residual", c.fiber_identity},
              {"radial_gap", c.radial_gap}};
}

inline Json to_json(const InducedPackage& p) {
  const FramePackage& f = p.frames;
  Json j;
  j["u"] = to_json(f.u);
  j["v"] = to_json(f.v);
  j["F"] = p.metric.F;
  j["frames"] = Json{{"B", to_json(f.B)},           {"B2", to_json(f.B2)},         {"normal", to_json(f.normal)},
                     {"Btilde", to_json(f.Btilde)}, {"Ntilde", to_json(f.Ntilde)}, {"H", to_json(f.H)},
                     {"normal_seed_axes", f.normal_seed}};
  j["g_sub"] = to_json(p.metric.g);
  j["N_ind"] = to_json(p.N_ind);
  j["N_int"] = to_json(p.N_int);
  j["D"] = to_json(p.D);
  j["conn_ind"] = to_json(p.connection.tangent);
  j["conn_normal"] = Json{{"horizontal", to_json(p.connection.normal.horizontal)},
                          {"vertical", to_json(p.connection.normal.vertical)}};
  j["S_h"] = to_json(p.connection.S_h);
  j["S_v"] = to_json(p.connection.S_v);
  j["A_h"] = to_json(p.connection.A_h);
  j["A_v"] = to_json(p.connection.A_v);
  j["hash_ind"] = to_json(p.hash_ind.coeffs);
  j["hash_int"] = to_json(p.hash_int.coeffs);
  j["landsberg_restricted"] = to_json(p.hash_ind.L_restricted);
  j["comparison"] = to_json(p.comparison);
  j["residuals"] = Json{{"induced_metric", p.metric.residual},
                        {"intrinsic_nonlinear", max_abs(p.N_int - p.N_ind - p.D / p.metric.F)},
                        {"deformation_fiber_contraction", max_abs(p.D * f.v)},
                        {"gauss_weingarten", p.gauss_weingarten},
                        {"koszul", p.hash_int.koszul_residual},
                        {"ehresmann_literal", p.restriction.literal},
                        {"ehresmann_tangential", p.restriction.tangential},
                        {"ehresmann_corrected", p.restriction.corrected},
                        {"frames", frame_residuals(f).max()}};
  j["ambient"] = to_json(f.ambient);
  return j;
}

inline Json to_json(const Report& r) {
  Json j;
  j["scene"] = r.scene;
  j["points"] = r.points;
  j["passed"] = r.passed;
  Json checks = Json::array();
  for (const auto& c : r.records) {
    checks.push_back(Json{{"name", c.name},
                          {"identity", c.identity},
                          {"mode", mode_name(c.mode)},
                          {"tolerance", c.tolerance},
                          {"residual", c.residual},
                          {"passed", c.passed},
                          {"worst_point", c.worst_point}});
  }
  j["checks"] = checks;
  Json errors = Json::array();
  for (const auto& e : r.errors) errors.push_back(Json{{"point", e.point}, {"kind", e.kind}, {"message", e.message}});
  j["errors"] = errors;
  return j;
}

}  // namespace finsler_lab
