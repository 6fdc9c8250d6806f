#pragma once

/**
 * @file expr.hpp
 * @brief Scalar expressions: recursive-descent parser and evaluation over
 *        doubles or jets.
 *
 * Grammar (whitespace is insignificant):
 *
 *     expression := term { ("+" | "-") term }
 *     term       := unary { ("*" | "/") unary }
 *     unary      := ("-" | "+") unary | power
 *     power      := primary [ "^" unary ]            (right-associative)
 *     primary    := number | identifier
 *                 | identifier "(" expression { "," expression } ")"
 *                 | "(" expression ")"
 *
 * `^` binds tighter than unary minus, so `-y1^2` is `-(y1^2)`; the exponent may
 * itself carry a sign (`y1^-2`). Identifiers resolve, in order, to declared
 * variables, caller-supplied constants, and the built-in constant `pi`.
 * Functions: sqrt, sin, cos, exp, log (one argument) and pow (two).
 */

#include <charconv>
#include <cmath>
#include <cstddef>
#include <map>
#include <memory>
#include <numbers>
#include <span>
#include <string>
#include <string_view>
#include <system_error>
#include <type_traits>
#include <utility>
#include <vector>

#include "finsler_lab/errors.hpp"
#include "finsler_lab/jet.hpp"

namespace finsler_lab {

enum class ExprOp { constant, variable, negate, add, subtract, multiply, divide, power, call };
enum class ExprFunction { sqrt, sin, cos, exp, log, pow };

struct ExprNode {
  ExprOp op = ExprOp::constant;
  double value = 0.0;
  int variable = -1;
  ExprFunction function = ExprFunction::sqrt;
  std::vector<std::shared_ptr<const ExprNode>> args;
  std::size_t offset = 0;
};

inline const char* function_name(ExprFunction f) {
  switch (f) {
    case ExprFunction::sqrt: return "sqrt";
    case ExprFunction::sin: return "sin";
    case ExprFunction::cos: return "cos";
    case ExprFunction::exp: return "exp";
    case ExprFunction::log: return "log";
    case ExprFunction::pow: return "pow";
  }
  return "?";
}

namespace detail {

inline double value_of(double x) { return x; }
inline double value_of(const Jet& x) { return x.value(); }

template <class T>
T make_constant(double c, const T* prototype) {
  if constexpr (std::is_same_v<T, double>) {
    return c;
  } else {
    if (prototype == nullptr) throw std::invalid_argument("expression: jet evaluation needs at least one bound variable");
    return T(prototype->layout(), c);
  }
}

inline std::string format_number(double v) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, end);
}

inline bool is_integer(double p) { return p == std::floor(p) && std::abs(p) <= 64.0; }

}  // namespace detail

class Expr {
public:
  Expr() = default;
  Expr(std::shared_ptr<const ExprNode> root, std::vector<std::string> variables, std::string source)
      : root_(std::move(root)), variables_(std::move(variables)), source_(std::move(source)) {}

  bool empty() const noexcept { return !root_; }
  const ExprNode& root() const { return *root_; }
  const std::vector<std::string>& variables() const noexcept { return variables_; }
  const std::string& source() const noexcept { return source_; }

  /// Evaluate with positional bindings (args[i] binds variables()[i]).
  template <class T>
  T evaluate(std::span<const T> args) const {
    if (args.size() != variables_.size()) {
      throw std::invalid_argument("expression '" + source_ + "': expected " + std::to_string(variables_.size()) +
                                  " bindings, got " + std::to_string(args.size()));
    }
    const T* prototype = args.empty() ? nullptr : &args.front();
    return eval<T>(*root_, args, prototype);
  }

  template <class T>
  T evaluate(const std::vector<T>& args) const {
    return evaluate(std::span<const T>(args));
  }

  /// Evaluate with bindings by name; every declared variable must be bound.
  template <class T>
  T evaluate(const std::map<std::string, T>& bindings) const {
    std::vector<T> args;
    args.reserve(variables_.size());
    for (const auto& name : variables_) {
      auto it = bindings.find(name);
      if (it == bindings.end()) throw std::invalid_argument("expression: variable '" + name + "' is not bound");
      args.push_back(it->second);
    }
    return evaluate(std::span<const T>(args));
  }

  /// Fully parenthesised text that parses back to the same tree.
  std::string to_string() const { return print(*root_); }

private:
  std::string print(const ExprNode& n) const {
    switch (n.op) {
      case ExprOp::constant: {
        auto s = detail::format_number(n.value);
        return n.value < 0 ? "(" + s + ")" : s;
      }
      case ExprOp::variable: return variables_[static_cast<std::size_t>(n.variable)];
      case ExprOp::negate: return "(-" + print(*n.args[0]) + ")";
      case ExprOp::add: return "(" + print(*n.args[0]) + " + " + print(*n.args[1]) + ")";
      case ExprOp::subtract: return "(" + print(*n.args[0]) + " - " + print(*n.args[1]) + ")";
      case ExprOp::multiply: return "(" + print(*n.args[0]) + " * " + print(*n.args[1]) + ")";
      case ExprOp::divide: return "(" + print(*n.args[0]) + " / " + print(*n.args[1]) + ")";
      case ExprOp::power: return "(" + print(*n.args[0]) + " ^ " + print(*n.args[1]) + ")";
      case ExprOp::call: {
        std::string s = std::string(function_name(n.function)) + "(";
        for (std::size_t i = 0; i < n.args.size(); ++i) s += (i ? ", " : "") + print(*n.args[i]);
        return s + ")";
      }
    }
    return {};
  }

  std::string where(const ExprNode& n) const {
    return " (in '" + source_ + "' at offset " + std::to_string(n.offset) + ")";
  }

  template <class T>
  T eval(const ExprNode& n, std::span<const T> args, const T* proto) const {
    using std::cos;
    using std::exp;
    using std::log;
    using std::pow;
    using std::sin;
    using std::sqrt;
    switch (n.op) {
      case ExprOp::constant: return detail::make_constant<T>(n.value, proto);
      case ExprOp::variable: return args[static_cast<std::size_t>(n.variable)];
      case ExprOp::negate: return -eval<T>(*n.args[0], args, proto);
      case ExprOp::add: return eval<T>(*n.args[0], args, proto) + eval<T>(*n.args[1], args, proto);
      case ExprOp::subtract: return eval<T>(*n.args[0], args, proto) - eval<T>(*n.args[1], args, proto);
      case ExprOp::multiply: return eval<T>(*n.args[0], args, proto) * eval<T>(*n.args[1], args, proto);
      case ExprOp::divide: {
        T num = eval<T>(*n.args[0], args, proto);
        T den = eval<T>(*n.args[1], args, proto);
        if (detail::value_of(den) == 0.0) throw DomainError("division by a zero value" + where(n));
        return num / den;
      }
      case ExprOp::power: return eval_pow<T>(n, *n.args[0], *n.args[1], args, proto);
      case ExprOp::call: {
        if (n.function == ExprFunction::pow) return eval_pow<T>(n, *n.args[0], *n.args[1], args, proto);
        T a = eval<T>(*n.args[0], args, proto);
        const double av = detail::value_of(a);
        switch (n.function) {
          case ExprFunction::sqrt:
            if (!(av > 0.0)) throw DomainError("sqrt: argument value " + detail::format_number(av) + " is not > 0" + where(n));
            return sqrt(a);
          case ExprFunction::log:
            if (!(av > 0.0)) throw DomainError("log: argument value " + detail::format_number(av) + " is not > 0" + where(n));
            return log(a);
          case ExprFunction::sin: return sin(a);
          case ExprFunction::cos: return cos(a);
          case ExprFunction::exp: return exp(a);
          case ExprFunction::pow: break;
        }
        break;
      }
    }
    throw std::logic_error("expression: corrupt node");
  }

  template <class T>
  T eval_pow(const ExprNode& at, const ExprNode& base_node, const ExprNode& exp_node, std::span<const T> args,
             const T* proto) const {
    using std::pow;
    T base = eval<T>(base_node, args, proto);
    const double bv = detail::value_of(base);
    if (exp_node.op == ExprOp::constant) {
      const double p = exp_node.value;
      if (detail::is_integer(p)) {
        if (p < 0 && bv == 0.0) throw DomainError("pow: zero base with negative exponent" + where(at));
      } else if (!(bv > 0.0)) {
        throw DomainError("pow: base value " + detail::format_number(bv) + " is not > 0 for exponent " +
                          detail::format_number(p) + where(at));
      }
      return pow(base, p);
    }
    if (!(bv > 0.0)) {
      throw DomainError("pow: base value " + detail::format_number(bv) + " is not > 0 for a variable exponent" + where(at));
    }
    T e = eval<T>(exp_node, args, proto);
    return pow(base, e);
  }

  std::shared_ptr<const ExprNode> root_;
  std::vector<std::string> variables_;
  std::string source_;
};

/// Structural equality of two trees (source offsets ignored).
inline bool same_tree(const ExprNode& a, const ExprNode& b) {
  if (a.op != b.op || a.args.size() != b.args.size()) return false;
  switch (a.op) {
    case ExprOp::constant:
      if (a.value != b.value) return false;
      break;
    case ExprOp::variable:
      if (a.variable != b.variable) return false;
      break;
    case ExprOp::call:
      if (a.function != b.function) return false;
      break;
    default: break;
  }
  for (std::size_t i = 0; i < a.args.size(); ++i) {
    if (!same_tree(*a.args[i], *b.args[i])) return false;
  }
  return true;
}

namespace detail {

class ExprParser {
public:
  ExprParser(std::string_view text, const std::vector<std::string>& vars, const std::map<std::string, double>& constants)
      : text_(text), vars_(vars), constants_(constants) {}

  std::shared_ptr<const ExprNode> parse() {
    skip_space();
    if (pos_ == text_.size()) throw ParseError("syntax error at offset 0: empty expression", 0);
    auto node = expression();
    skip_space();
    if (pos_ != text_.size()) fail("unexpected '" + std::string(1, text_[pos_]) + "'");
    return node;
  }

private:
  using NodePtr = std::shared_ptr<const ExprNode>;

  [[noreturn]] void fail(const std::string& what) const {
    throw ParseError("syntax error at offset " + std::to_string(pos_) + ": " + what, pos_);
  }

  void skip_space() {
    while (pos_ < text_.size() && (text_[pos_] == ' ' || text_[pos_] == '\t' || text_[pos_] == '\n' || text_[pos_] == '\r')) {
      ++pos_;
    }
  }

  bool accept(char c) {
    skip_space();
    if (pos_ < text_.size() && text_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  static NodePtr binary(ExprOp op, NodePtr lhs, NodePtr rhs, std::size_t offset) {
    auto n = std::make_shared<ExprNode>();
    n->op = op;
    n->args = {std::move(lhs), std::move(rhs)};
    n->offset = offset;
    return n;
  }

  NodePtr expression() {
    NodePtr lhs = term();
    for (;;) {
      skip_space();
      const std::size_t at = pos_;
      if (accept('+')) {
        lhs = binary(ExprOp::add, lhs, term(), at);
      } else if (accept('-')) {
        lhs = binary(ExprOp::subtract, lhs, term(), at);
      } else {
        return lhs;
      }
    }
  }

  NodePtr term() {
    NodePtr lhs = unary();
    for (;;) {
      skip_space();
      const std::size_t at = pos_;
      if (accept('*')) {
        lhs = binary(ExprOp::multiply, lhs, unary(), at);
      } else if (accept('/')) {
        lhs = binary(ExprOp::divide, lhs, unary(), at);
      } else {
        return lhs;
      }
    }
  }

  NodePtr unary() {
    skip_space();
    const std::size_t at = pos_;
    if (accept('-')) {
      NodePtr child = unary();
      if (child->op == ExprOp::constant) {
        auto folded = std::make_shared<ExprNode>(*child);
        folded->value = -child->value;
        folded->offset = at;
        return folded;
      }
      auto n = std::make_shared<ExprNode>();
      n->op = ExprOp::negate;
      n->args = {std::move(child)};
      n->offset = at;
      return n;
    }
    if (accept('+')) return unary();
    return power();
  }

  NodePtr power() {
    NodePtr base = primary();
    skip_space();
    const std::size_t at = pos_;
    if (accept('^')) return binary(ExprOp::power, base, unary(), at);
    return base;
  }

  NodePtr primary() {
    skip_space();
    if (pos_ == text_.size()) fail("expected a number, identifier or '('");
    const std::size_t at = pos_;
    const char c = text_[pos_];
    if (c == '(') {
      ++pos_;
      NodePtr inner = expression();
      if (!accept(')')) fail("expected ')'");
      return inner;
    }
    if ((c >= '0' && c <= '9') || c == '.') return number();
    if (is_ident_start(c)) {
      std::size_t end = pos_;
      while (end < text_.size() && is_ident_char(text_[end])) ++end;
      const std::string name(text_.substr(pos_, end - pos_));
      pos_ = end;
      skip_space();
      if (pos_ < text_.size() && text_[pos_] == '(') return call(name, at);
      return identifier(name, at);
    }
    fail("unexpected '" + std::string(1, c) + "'");
  }

  NodePtr number() {
    const std::size_t at = pos_;
    std::size_t end = pos_;
    while (end < text_.size() && ((text_[end] >= '0' && text_[end] <= '9') || text_[end] == '.')) ++end;
    if (end < text_.size() && (text_[end] == 'e' || text_[end] == 'E')) {
      std::size_t e = end + 1;
      if (e < text_.size() && (text_[e] == '+' || text_[e] == '-')) ++e;
      if (e < text_.size() && text_[e] >= '0' && text_[e] <= '9') {
        end = e;
        while (end < text_.size() && text_[end] >= '0' && text_[end] <= '9') ++end;
      }
    }
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(text_.data() + at, text_.data() + end, v);
    if (ec != std::errc() || ptr != text_.data() + end) fail("malformed number");
    pos_ = end;
    auto n = std::make_shared<ExprNode>();
    n->op = ExprOp::constant;
    n->value = v;
    n->offset = at;
    return n;
  }

  NodePtr identifier(const std::string& name, std::size_t at) {
    auto n = std::make_shared<ExprNode>();
    n->offset = at;
    for (std::size_t i = 0; i < vars_.size(); ++i) {
      if (vars_[i] == name) {
        n->op = ExprOp::variable;
        n->variable = static_cast<int>(i);
        return n;
      }
    }
    if (auto it = constants_.find(name); it != constants_.end()) {
      n->op = ExprOp::constant;
      n->value = it->second;
      return n;
    }
    if (name == "pi") {
      n->op = ExprOp::constant;
      n->value = std::numbers::pi;
      return n;
    }
    throw ParseError("unknown variable '" + name + "' at offset " + std::to_string(at), at);
  }

  NodePtr call(const std::string& name, std::size_t at) {
    static const std::map<std::string, std::pair<ExprFunction, std::size_t>> functions = {
        {"sqrt", {ExprFunction::sqrt, 1}}, {"sin", {ExprFunction::sin, 1}}, {"cos", {ExprFunction::cos, 1}},
        {"exp", {ExprFunction::exp, 1}},   {"log", {ExprFunction::log, 1}}, {"pow", {ExprFunction::pow, 2}}};
    auto it = functions.find(name);
    if (it == functions.end()) throw ParseError("unknown function '" + name + "' at offset " + std::to_string(at), at);
    accept('(');
    auto n = std::make_shared<ExprNode>();
    n->op = ExprOp::call;
    n->function = it->second.first;
    n->offset = at;
    if (!accept(')')) {
      n->args.push_back(expression());
      while (accept(',')) n->args.push_back(expression());
      if (!accept(')')) fail("expected ')' or ','");
    }
    if (n->args.size() != it->second.second) {
      throw ParseError(name + " expects " + std::to_string(it->second.second) + " argument(s), got " +
                           std::to_string(n->args.size()) + " at offset " + std::to_string(at),
                       at);
    }
    return n;
  }

  static bool is_ident_start(char c) { return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c == '_'; }
  static bool is_ident_char(char c) { return is_ident_start(c) || (c >= '0' && c <= '9'); }

  std::string_view text_;
  const std::vector<std::string>& vars_;
  const std::map<std::string, double>& constants_;
  std::size_t pos_ = 0;
};

}  // namespace detail

/// Parse `text` over the ordered variable list; unknown names are rejected.
inline Expr parse(std::string_view text, std::vector<std::string> allowed_vars,
                  const std::map<std::string, double>& constants = {}) {
  detail::ExprParser parser(text, allowed_vars, constants);
  auto root = parser.parse();
  return Expr(std::move(root), std::move(allowed_vars), std::string(text));
}

/// Variable names x1..xn or similar: prefix + 1-based index.
inline std::vector<std::string> numbered_names(const std::string& prefix, int count) {
  std::vector<std::string> out;
  for (int i = 1; i <= count; ++i) out.push_back(prefix + std::to_string(i));
  return out;
}

}  // namespace finsler_lab
