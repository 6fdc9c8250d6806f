#include <sys/wait.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "finsler_lab/scene_io.hpp"
#include "support.hpp"

namespace cli_tests {

using namespace fl_test;
namespace fs = std::filesystem;

struct CliResult {
  int code = -1;
  std::string out;
  std::string err;
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path scratch_dir() {
  static const fs::path dir = [] {
    fs::path d = fs::temp_directory_path() / ("finsler_lab_cli_" + std::to_string(::getpid()));
    fs::create_directories(d);
    return d;
  }();
  return dir;
}

CliResult run(const std::string& args, const std::string& env = "") {
  static int counter = 0;
  const fs::path err = scratch_dir() / ("stderr_" + std::to_string(counter++));
  const std::string cmd = env + " " + FINSLER_LAB_CLI + " " + args + " 2>" + err.string();
  CliResult r;
  FILE* pipe = ::popen(cmd.c_str(), "r");
  if (!pipe) return r;
  char buf[4096];
  std::size_t n;
  while ((n = std::fread(buf, 1, sizeof buf, pipe)) > 0) r.out.append(buf, n);
  const int status = ::pclose(pipe);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  r.err = slurp(err);
  return r;
}

std::string scene_path(const std::string& name) { return std::string(FINSLER_LAB_SCENES_DIR) + "/" + name + ".json"; }

std::string write_scene(const std::string& name, const std::string& text) {
  const fs::path p = scratch_dir() / (name + ".json");
  std::ofstream(p) << text;
  return p.string();
}

Matrix matrix_from(const nlohmann::json& j) {
  Matrix m(static_cast<Eigen::Index>(j.size()), static_cast<Eigen::Index>(j[0].size()));
  for (std::size_t r = 0; r < j.size(); ++r)
    for (std::size_t c = 0; c < j[r].size(); ++c) m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = j[r][c].get<double>();
  return m;
}

TEST(Cli, EvalEuclidean) {
  const auto path = write_scene("flat2", R"js({"metric": {"kind": "euclidean", "dimension": 2},
                                             "points": {"explicit": [{"x": [0, 0], "y": [1, 0]}]}})js");
  const CliResult r = run("eval --scene " + path);
  ASSERT_EQ(r.code, 0) << r.err;
  const auto j = nlohmann::json::parse(r.out);
  EXPECT_EQ(j["scene"], "flat2");
  EXPECT_TRUE(j.contains("conventions"));
  EXPECT_EQ(matrix_from(j["ambient"]["g"]), Matrix::Identity(2, 2));
  EXPECT_EQ(j["ambient"]["G"], nlohmann::json::parse("[0.0, 0.0]"));
}

TEST(Cli, EvalRoundTripAndDeterminism) {
  const CliResult a = run("eval --scene " + scene_path("randers-curved") + " --point 3");
  const CliResult b = run("eval --scene " + scene_path("randers-curved") + " --point 3");
  ASSERT_EQ(a.code, 0) << a.err;
  EXPECT_EQ(a.out, b.out);
  const Scene s = load_scene(scene_path("randers-curved"));
  const AmbientEval mem = ambient_eval(s.metric, s.tangent_point(3));
  const auto j = nlohmann::json::parse(a.out);
  EXPECT_EQ(j["point"], 3);
  EXPECT_EQ(j["ambient"]["F"].get<double>(), mem.F);
  EXPECT_EQ(matrix_from(j["ambient"]["g"]), mem.g);
  EXPECT_EQ(matrix_from(j["ambient"]["N"]), mem.N);
  for (int k = 0; k < 3; ++k)
    for (int i = 0; i < 3; ++i)
      for (int l = 0; l < 3; ++l) EXPECT_EQ(j["ambient"]["A"][k][i][l].get<double>(), mem.A(k, i, l));
  EXPECT_EQ(j["hashiguchi"]["kind"], "hashiguchi");
}

TEST(Cli, CompactIndent) {
  const CliResult r = run("eval --scene " + scene_path("randers-minkowski") + " --json-indent -1");
  ASSERT_EQ(r.code, 0);
  EXPECT_EQ(std::count(r.out.begin(), r.out.end(), '\n'), 1);
}

TEST(Cli, InduceHyperplane) {
  const CliResult r = run("induce --scene " + scene_path("euclidean-plane"));
  ASSERT_EQ(r.code, 0) << r.err;
  const auto j = nlohmann::json::parse(r.out)["induced"];
  EXPECT_EQ(matrix_from(j["D"]), Matrix::Zero(2, 2));
  for (const auto& block : {"S_h", "S_v"})
    for (const auto& a : j[block])
      for (const auto& row : a)
        for (const auto& x : row) EXPECT_LT(std::abs(x.get<double>()), 1e-15);
}

TEST(Cli, InduceRiemannianSphere) {
  const CliResult r = run("induce --scene " + scene_path("riemannian-sphere") + " --point 2");
  ASSERT_EQ(r.code, 0) << r.err;
  const auto c = nlohmann::json::parse(r.out)["induced"]["comparison"];
  EXPECT_LT(c["horizontal_gap"].get<double>(), 1e-8);
  EXPECT_LT(c["deformation_norm"].get<double>(), 1e-10);
}

TEST(Cli, CompareHashiguchiRandersSphere) {
  const CliResult r = run("compare-hashiguchi --scene " + scene_path("randers-sphere"));
  ASSERT_EQ(r.code, 0) << r.err;
  const auto j = nlohmann::json::parse(r.out);
  EXPECT_GT(j["comparison"]["deformation_norm"].get<double>(), 1e-3);
  EXPECT_GT(j["comparison"]["horizontal_gap"].get<double>(), 1e-6);
  EXPECT_LT(j["comparison"]["fiber_relation_residual"].get<double>(), 1e-8);
  EXPECT_FALSE(j.contains("induced"));
}

TEST(Cli, VerifyExitCodes) {
  EXPECT_EQ(run("verify --scene " + scene_path("euclidean-plane")).code, 0);
  EXPECT_EQ(run("verify --scene " + scene_path("riemannian-sphere")).code, 0);
  // The deformation relation check fails on this scene; see the README.
  EXPECT_EQ(run("verify --scene " + scene_path("randers-sphere")).code, 1);
  EXPECT_EQ(run("verify --scene " + scene_path("nonhomogeneous")).code, 1);
  const CliResult nc = run("verify --scene " + scene_path("nonconvex"));
  EXPECT_EQ(nc.code, 3);
  EXPECT_NE(nc.err.find("convexity"), std::string::npos);
}

TEST(Cli, VerifyReport) {
  const CliResult r = run("verify --scene " + scene_path("circle"));
  ASSERT_EQ(r.code, 0);
  const auto rep = nlohmann::json::parse(r.out)["report"];
  EXPECT_TRUE(rep["passed"].get<bool>());
  ASSERT_FALSE(rep["checks"].empty());
  for (const auto& rec : rep["checks"]) {
    EXPECT_TRUE(rec.contains("identity"));
    EXPECT_TRUE(rec.contains("worst_point"));
  }
}

TEST(Cli, ToleranceFlag) {
  EXPECT_EQ(run("verify --scene " + scene_path("circle") + " --tolerance submanifold.frames=-1").code, 1);
  EXPECT_EQ(run("verify --scene " + scene_path("circle") + " --tolerance no.such=1").code, 2);
  EXPECT_EQ(run("verify --scene " + scene_path("circle") + " --tolerance submanifold.frames=abc").code, 2);
}

TEST(Cli, ParseErrors) {
  const auto bad = write_scene("bad", R"js({"metric": {"kind": "euclidean", "dimension": 2, "colour": 3},
                                          "points": {"explicit": [{"x": [0, 0], "y": [1, 0]}]}})js");
  const CliResult r = run("eval --scene " + bad);
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("metric.colour"), std::string::npos) << r.err;
  const auto expr = write_scene("badexpr", R"js({"metric": {"kind": "custom", "dimension": 2, "F": "sqrt(y1^2 + )"},
                                               "points": {"explicit": [{"x": [0, 0], "y": [1, 0]}]}})js");
  EXPECT_EQ(run("eval --scene " + expr).code, 2);
  EXPECT_EQ(run("eval --scene /nonexistent.json").code, 2);
  EXPECT_EQ(run("eval").code, 2);
  EXPECT_EQ(run("frobnicate --scene x").code, 2);
  EXPECT_EQ(run("eval --scene " + scene_path("circle") + " --point 99").code, 2);
  EXPECT_EQ(run("induce --scene " + scene_path("randers-minkowski")).code, 2);
  EXPECT_EQ(run("--help").code, 0);
}

TEST(Cli, DomainAndRankErrors) {
  const auto zero = write_scene("zero", R"js({"metric": {"kind": "custom", "dimension": 2, "F": "sqrt(y1^2 + y2^2) - 2*x1"},
                                            "points": {"explicit": [{"x": [1, 0], "y": [1, 0]}]}})js");
  EXPECT_EQ(run("eval --scene " + zero).code, 3);
  const auto rank = write_scene("rank", R"js({"metric": {"kind": "euclidean", "dimension": 3},
                                            "immersion": {"dimension": 2, "components": ["u1 + u2", "u1 + u2", "0"]},
                                            "points": {"explicit": [{"u": [0, 0], "v": [1, 0]}]}})js");
  const CliResult r = run("induce --scene " + rank);
  EXPECT_EQ(r.code, 4);
  EXPECT_NE(r.err.find("rank"), std::string::npos);
  EXPECT_EQ(run("verify --scene " + rank).code, 4);
}

TEST(Cli, ThreadCountDoesNotChangeOutput) {
  const CliResult a = run("verify --scene " + scene_path("randers-curved"), "FINSLER_LAB_THREADS=1");
  const CliResult b = run("verify --scene " + scene_path("randers-curved"), "FINSLER_LAB_THREADS=4");
  EXPECT_EQ(a.code, 0);
  EXPECT_EQ(a.out, b.out);
}

}  // namespace cli_tests
