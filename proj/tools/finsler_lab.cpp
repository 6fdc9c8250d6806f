// Command-line front end: eval, induce, verify, compare-hashiguchi.
//
// Exit codes: 0 pass, 1 verification failure, 2 parse or scene error,
// 3 math-domain error, 4 rank deficiency.

#include <cstdlib>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "finsler_lab/finsler_lab.hpp"
#include "finsler_lab/scene_io.hpp"

namespace fl = finsler_lab;

namespace {

enum Exit { kPass = 0, kFail = 1, kParse = 2, kDomain = 3, kRank = 4 };

struct Options {
  std::string scene;
  int point = 0;
  int indent = 2;
  std::vector<std::string> tolerances;
};

void apply_tolerances(fl::Scene& scene, const std::vector<std::string>& specs) {
  for (const auto& s : specs) {
    const auto eq = s.find('=');
    if (eq == std::string::npos || eq == 0) throw fl::ParseError("--tolerance expects NAME=VALUE, got '" + s + "'");
    const std::string name = s.substr(0, eq);
    if (!fl::check_catalogue().count(name)) throw fl::ParseError("--tolerance: unknown check '" + name + "'");
    const std::string text = s.substr(eq + 1);
    double value = 0.0;
    auto [end, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (ec != std::errc() || end != text.data() + text.size()) {
      throw fl::ParseError("--tolerance: '" + text + "' is not a number");
    }
    scene.tolerances[name] = value;
  }
}

std::size_t select_point(const fl::Scene& scene, int index) {
  if (index < 0 || static_cast<std::size_t>(index) >= scene.size()) {
    throw fl::ParseError("--point " + std::to_string(index) + " is out of range (scene has " +
                         std::to_string(scene.size()) + " points)");
  }
  return static_cast<std::size_t>(index);
}

fl::TangentPoint ambient_point(const fl::Scene& scene, std::size_t i) {
  if (!scene.immersion) return scene.tangent_point(i);
  const fl::FramePackage fp = fl::frame_package(scene.metric, *scene.immersion, scene.sub_point(i));
  return {fp.x, fp.y};
}

void print(const fl::Json& j, int indent) { std::cout << j.dump(indent) << '\n'; }

fl::Json header(const fl::Scene& scene) {
  return fl::Json{{"scene", scene.name}, {"conventions", fl::conventions()}};
}

int cmd_eval(const Options& o) {
  const fl::Scene scene = fl::load_scene(o.scene);
  const std::size_t i = select_point(scene, o.point);
  const fl::TangentPoint p = ambient_point(scene, i);
  const fl::AmbientEval a = fl::ambient_eval(scene.metric, p);
  const fl::ConnectionCoeffs chern = fl::chern_coefficients(a);
  const fl::LandsbergEval L = fl::landsberg_tensor(a);
  fl::Json j = header(scene);
  j["point"] = i;
  j["ambient"] = fl::to_json(a);
  j["chern"] = fl::to_json(chern);
  j["landsberg"] = fl::to_json(L.L);
  j["hashiguchi"] = fl::to_json(fl::hashiguchi_coefficients(chern, L));
  print(j, o.indent);
  return kPass;
}

int cmd_induce(const Options& o, bool comparison_only) {
  const fl::Scene scene = fl::load_scene(o.scene);
  if (!scene.immersion) throw fl::ParseError("scene '" + scene.name + "' has no immersion");
  const std::size_t i = select_point(scene, o.point);
  const fl::InducedPackage pkg = fl::induce(scene.metric, *scene.immersion, scene.sub_point(i));
  fl::Json j = header(scene);
  j["point"] = i;
  if (comparison_only) {
    j["comparison"] = fl::to_json(pkg.comparison);
    j["D"] = fl::to_json(pkg.D);
  } else {
    j["induced"] = fl::to_json(pkg);
  }
  print(j, o.indent);
  return kPass;
}

int cmd_verify(const Options& o) {
  fl::Scene scene = fl::load_scene(o.scene);
  apply_tolerances(scene, o.tolerances);
  // Structural problems of the scene itself are reported with their own exit codes.
  for (std::size_t i = 0; i < scene.size(); ++i) fl::ambient_eval(scene.metric, ambient_point(scene, i));
  const fl::Report report = fl::run_suite(scene, fl::default_thread_count());
  fl::Json j = header(scene);
  j["report"] = fl::to_json(report);
  print(j, o.indent);
  return report.passed ? kPass : kFail;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Finsler submanifold geometry: evaluation and verification"};
  app.require_subcommand(1);
  Options o;
  auto add_common = [&](CLI::App* sub, bool with_point) {
    sub->add_option("--scene", o.scene, "scene file (JSON)")->required();
    if (with_point) sub->add_option("--point", o.point, "index into the scene's point list");
    sub->add_option("--json-indent", o.indent, "JSON indentation; -1 for a single line");
    sub->add_option("--tolerance", o.tolerances, "override a check tolerance, NAME=VALUE");
  };
  auto* eval = app.add_subcommand("eval", "ambient Finsler objects at one point");
  auto* induce = app.add_subcommand("induce", "all induced submanifold objects at one point");
  auto* verify = app.add_subcommand("verify", "run the invariant suite over every scene point");
  auto* compare = app.add_subcommand("compare-hashiguchi", "induced vs intrinsic Hashiguchi comparison at one point");
  add_common(eval, true);
  add_common(induce, true);
  add_common(verify, false);
  add_common(compare, true);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kPass : kParse;
  }

  try {
    if (*eval) return cmd_eval(o);
    if (*induce) return cmd_induce(o, false);
    if (*compare) return cmd_induce(o, true);
    if (*verify) return cmd_verify(o);
  } catch (const fl::ParseError& e) {
    std::cerr << "error: " << e.what();
    if (e.offset() != fl::ParseError::npos) std::cerr << " (offset " << e.offset() << ")";
    std::cerr << '\n';
    return kParse;
  } catch (const fl::ConvexityError& e) {
    std::cerr << "convexity error: " << e.what() << '\n';
    return kDomain;
  } catch (const fl::DomainError& e) {
    std::cerr << "domain error: " << e.what() << '\n';
    return kDomain;
  } catch (const fl::RankError& e) {
    std::cerr << "rank error: " << e.what() << '\n';
    return kRank;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kFail;
  }
  return kFail;
}
