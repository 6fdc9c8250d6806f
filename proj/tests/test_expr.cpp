#include <cmath>
#include <random>

#include "support.hpp"

namespace expr_tests {

using namespace fl_test;

const std::vector<std::string> kY2{"y1", "y2"};
const std::vector<std::string> kY3{"y1", "y2", "y3"};

ParseError parse_failure(const std::string& text, const std::vector<std::string>& vars) {
  try {
    (void)parse(text, vars);
  } catch (const ParseError& e) {
    return e;
  }
  ADD_FAILURE() << "no ParseError for '" << text << "'";
  return ParseError("none");
}

TEST(Expr, EuclideanNormTree) {
  const Expr e = parse("sqrt(y1^2 + y2^2)", kY2);
  const ExprNode& r = e.root();
  ASSERT_EQ(r.op, ExprOp::call);
  EXPECT_EQ(r.function, ExprFunction::sqrt);
  ASSERT_EQ(r.args.size(), 1u);
  const ExprNode& sum = *r.args[0];
  ASSERT_EQ(sum.op, ExprOp::add);
  for (int i = 0; i < 2; ++i) {
    const ExprNode& p = *sum.args[static_cast<std::size_t>(i)];
    ASSERT_EQ(p.op, ExprOp::power);
    EXPECT_EQ(p.args[0]->op, ExprOp::variable);
    EXPECT_EQ(p.args[0]->variable, i);
    EXPECT_EQ(p.args[1]->op, ExprOp::constant);
    EXPECT_EQ(p.args[1]->value, 2.0);
  }
  EXPECT_EQ(e.to_string(), "sqrt(((y1 ^ 2) + (y2 ^ 2)))");
}

TEST(Expr, RandersShape) {
  const Expr e = parse("sqrt(y1^2+y2^2+y3^2) + 0.3*y1", kY3);
  const ExprNode& r = e.root();
  ASSERT_EQ(r.op, ExprOp::add);
  EXPECT_EQ(r.args[0]->op, ExprOp::call);
  ASSERT_EQ(r.args[1]->op, ExprOp::multiply);
  EXPECT_EQ(r.args[1]->args[0]->value, 0.3);
  EXPECT_EQ(r.args[1]->args[1]->variable, 0);
}

TEST(Expr, Precedence) {
  EXPECT_EQ(parse("-y1^2", kY2).to_string(), "(-(y1 ^ 2))");
  EXPECT_EQ(parse("y1^y2^2", kY2).to_string(), "(y1 ^ (y2 ^ 2))");
  EXPECT_EQ(parse("y1 - y2 - 1", kY2).to_string(), "((y1 - y2) - 1)");
  EXPECT_EQ(parse("y1 / y2 * 2", kY2).to_string(), "((y1 / y2) * 2)");
  EXPECT_EQ(parse("y1^-2", kY2).to_string(), "(y1 ^ (-2))");
}

TEST(Expr, SyntaxErrorOffset) {
  const ParseError e = parse_failure("y1 + ", {"y1"});
  EXPECT_EQ(e.offset(), 5u);
  EXPECT_NE(std::string(e.what()).find("offset 5"), std::string::npos);
  EXPECT_EQ(parse_failure("", {"y1"}).offset(), 0u);
  EXPECT_EQ(parse_failure("(y1", {"y1"}).offset(), 3u);
  EXPECT_EQ(parse_failure("y1 y1", {"y1"}).offset(), 3u);
}

TEST(Expr, UnknownNames) {
  const ParseError v = parse_failure("y1 + z", {"y1"});
  EXPECT_NE(std::string(v.what()).find("unknown variable 'z'"), std::string::npos);
  EXPECT_EQ(v.offset(), 5u);
  const ParseError f = parse_failure("tan(y1)", {"y1"});
  EXPECT_NE(std::string(f.what()).find("unknown function 'tan'"), std::string::npos);
  EXPECT_THROW((void)parse("pow(y1)", {"y1"}), ParseError);
}

TEST(Expr, ConstantsAndPi) {
  const Expr e = parse("c*y1 + pi", {"y1"}, {{"c", 2.5}});
  EXPECT_DOUBLE_EQ(e.evaluate(std::vector<double>{2.0}), 5.0 + std::numbers::pi);
}

TEST(Expr, EvaluateNormGradient) {
  const Expr e = parse("sqrt(y1^2 + y2^2)", kY2);
  const auto ys = lift_variables(std::vector<double>{3.0, 4.0}, 0, 2, 2);
  const Jet f = e.evaluate(ys);
  EXPECT_DOUBLE_EQ(f.value(), 5.0);
  EXPECT_DOUBLE_EQ(extract(f, MultiIndex{1, 0}), 0.6);
  EXPECT_DOUBLE_EQ(extract(f, MultiIndex{0, 1}), 0.8);
}

TEST(Expr, EvaluateProduct) {
  const Expr e = parse("u1*u2", {"u1", "u2"});
  const Jet f = e.evaluate(std::map<std::string, Jet>{{"u1", lift_variable(2.0, 0, 2, 3)}, {"u2", lift_variable(3.0, 1, 2, 3)}});
  EXPECT_EQ(f.value(), 6.0);
  EXPECT_EQ(extract(f, MultiIndex{1, 1}), 1.0);
  EXPECT_EQ(extract(f, MultiIndex{2, 0}), 0.0);
}

TEST(Expr, BindingErrors) {
  const Expr e = parse("u1*u2", {"u1", "u2"});
  EXPECT_THROW((void)e.evaluate(std::vector<double>{1.0}), std::invalid_argument);
  EXPECT_THROW((void)e.evaluate(std::map<std::string, double>{{"u1", 1.0}}), std::invalid_argument);
}

TEST(Expr, DomainErrorNamesExpression) {
  const Expr e = parse("log(y1)", {"y1"});
  try {
    (void)e.evaluate(std::vector<double>{-1.0});
    FAIL();
  } catch (const DomainError& err) {
    EXPECT_NE(std::string(err.what()).find("log"), std::string::npos);
  }
}

TEST(Expr, DoubleAndJetAgree) {
  const Expr e = parse("exp(y1)*cos(y2) - pow(y1, 3)/(1 + y2^2) + log(2 + y1)", kY2);
  const std::vector<double> p{0.4, -1.1};
  const Jet f = e.evaluate(lift_variables(p, 0, 2, 3));
  EXPECT_DOUBLE_EQ(f.value(), e.evaluate(p));
}

// Round trip: print then parse reproduces the tree, on a corpus and on random trees.
TEST(ExprProperty, PrintParseRoundTrip) {
  const std::vector<std::string> corpus{
      "sqrt(y1^2 + y2^2 + y3^2) + 0.3*y1", "-y1^2", "y1^-2.5e-3", "pow(y1, y2) / -(y3 - 1e10)", "--y1", "2^3^y2",
      "sin(cos(exp(log(y1))))",          "1/3", "(y1)"};
  for (const auto& text : corpus) {
    const Expr a = parse(text, kY3);
    const Expr b = parse(a.to_string(), kY3);
    EXPECT_TRUE(same_tree(a.root(), b.root())) << text << " -> " << a.to_string();
    EXPECT_EQ(a.to_string(), b.to_string());
  }

  std::mt19937_64 rng(5);
  std::function<std::string(int)> gen = [&](int depth) -> std::string {
    const auto pick = rng() % (depth > 3 ? 2 : 9);
    std::uniform_real_distribution<double> c(-5.0, 5.0);
    switch (pick) {
      case 0: return kY3[rng() % 3];
      case 1: return std::to_string(c(rng));
      case 2: return gen(depth + 1) + " + " + gen(depth + 1);
      case 3: return gen(depth + 1) + " - " + gen(depth + 1);
      case 4: return "(" + gen(depth + 1) + ") * " + gen(depth + 1);
      case 5: return gen(depth + 1) + " / (" + gen(depth + 1) + ")";
      case 6: return "(" + gen(depth + 1) + ")^" + gen(depth + 1);
      case 7: return "-" + gen(depth + 1);
      default: return "sin(" + gen(depth + 1) + ")";
    }
  };
  for (int i = 0; i < 200; ++i) {
    const std::string text = gen(0);
    const Expr a = parse(text, kY3);
    const Expr b = parse(a.to_string(), kY3);
    EXPECT_TRUE(same_tree(a.root(), b.root())) << text;
  }
}

TEST(ExprProperty, RandersDerivativesAgainstOracle) {
  const Expr e = parse("sqrt(y1^2+y2^2+y3^2) + 0.3*y1", kY3);
  std::mt19937_64 rng(21);
  std::normal_distribution<double> nd;
  auto f = [&](std::span<const double> z) { return e.evaluate(std::vector<double>(z.begin(), z.end())); };
  for (int trial = 0; trial < 10; ++trial) {
    const std::vector<double> y{nd(rng), nd(rng), nd(rng)};
    const Jet jet = e.evaluate(lift_variables(y, 0, 3, 3));
    const auto& layout = *jet.layout();
    for (std::size_t r = 1; r < layout.size(); ++r) {
      const MultiIndex& mu = layout.index(r);
      EXPECT_LT(oracle_error(extract(jet, mu), fd_oracle(f, y, mu)), 1e-6) << "trial " << trial << " rank " << r;
    }
  }
}

}  // namespace expr_tests
