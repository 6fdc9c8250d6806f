#pragma once

#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "finsler_lab/errors.hpp"
#include "finsler_lab/expr.hpp"
#include "finsler_lab/tensor.hpp"

namespace finsler_lab {

enum class MetricKind { euclidean, riemannian, randers, custom };

inline const char* kind_name(MetricKind k) {
  switch (k) {
    case MetricKind::euclidean: return "euclidean";
    case MetricKind::riemannian: return "riemannian";
    case MetricKind::randers: return "randers";
    case MetricKind::custom: return "custom";
  }
  return "?";
}

/// A point (x, y) of the slit tangent bundle.
struct TangentPoint {
  Vector x;
  Vector y;
};

/**
 * Declarative Finsler function F(x, y) on an open set of R^n.
 *
 * - euclidean:  F = |y|
 * - riemannian: F = sqrt(a_ij(x) y^i y^j)
 * - randers:    F = sqrt(a_ij(x) y^i y^j) + b_i(x) y^i
 * - custom:     F given directly as an expression in x1..xn, y1..yn
 *
 * a_ij and b_i are expressions in x1..xn. Named parameters are substituted as
 * constants at parse time.
 */
class MetricSpec {
public:
  static MetricSpec euclidean(int n) {
    MetricSpec m;
    m.kind_ = MetricKind::euclidean;
    m.dimension_ = check_dimension(n);
    return m;
  }

  static MetricSpec riemannian(int n, const std::vector<std::string>& a, const std::map<std::string, double>& params = {}) {
    MetricSpec m;
    m.kind_ = MetricKind::riemannian;
    m.dimension_ = check_dimension(n);
    m.parameters_ = params;
    m.a_ = parse_matrix(n, a, params);
    return m;
  }

  static MetricSpec randers(int n, const std::vector<std::string>& a, const std::vector<std::string>& b,
                            const std::map<std::string, double>& params = {}) {
    MetricSpec m = riemannian(n, a, params);
    m.kind_ = MetricKind::randers;
    if (static_cast<int>(b.size()) != n) {
      throw ParseError("randers one-form needs " + std::to_string(n) + " components, got " + std::to_string(b.size()));
    }
    for (const auto& text : b) m.b_.push_back(parse(text, numbered_names("x", n), params));
    return m;
  }

  static MetricSpec custom(int n, const std::string& F, const std::map<std::string, double>& params = {}) {
    MetricSpec m;
    m.kind_ = MetricKind::custom;
    m.dimension_ = check_dimension(n);
    m.parameters_ = params;
    auto vars = numbered_names("x", n);
    auto ys = numbered_names("y", n);
    vars.insert(vars.end(), ys.begin(), ys.end());
    m.F_ = parse(F, vars, params);
    return m;
  }

  MetricKind kind() const noexcept { return kind_; }
  int dimension() const noexcept { return dimension_; }
  bool is_riemannian() const noexcept { return kind_ == MetricKind::euclidean || kind_ == MetricKind::riemannian; }
  const std::vector<Expr>& riemannian_exprs() const noexcept { return a_; }
  const std::vector<Expr>& one_form_exprs() const noexcept { return b_; }
  const Expr& custom_expr() const noexcept { return F_; }
  const std::map<std::string, double>& parameters() const noexcept { return parameters_; }

  /// F(x, y) for T = double or Jet; x and y must have `dimension()` entries.
  template <class T>
  T finsler(std::span<const T> x, std::span<const T> y) const {
    using std::sqrt;
    const auto n = static_cast<std::size_t>(dimension_);
    if (x.size() != n || y.size() != n) throw std::invalid_argument("finsler: dimension mismatch");
    switch (kind_) {
      case MetricKind::euclidean: {
        T s = y[0] * y[0];
        for (std::size_t i = 1; i < n; ++i) s += y[i] * y[i];
        return checked_sqrt(s);
      }
      case MetricKind::riemannian:
      case MetricKind::randers: {
        T s = quadratic_form(x, y);
        T F = checked_sqrt(s);
        if (kind_ == MetricKind::randers) {
          for (std::size_t i = 0; i < n; ++i) F += b_[i].evaluate(x) * y[i];
        }
        return F;
      }
      case MetricKind::custom: {
        std::vector<T> args(x.begin(), x.end());
        args.insert(args.end(), y.begin(), y.end());
        return F_.evaluate(std::span<const T>(args));
      }
    }
    throw std::logic_error("finsler: unknown metric kind");
  }

  /// a_ij(x) for the riemannian and randers kinds (identity for euclidean).
  Matrix riemannian_part(std::span<const double> x) const {
    const int n = dimension_;
    if (kind_ == MetricKind::euclidean) return Matrix::Identity(n, n);
    if (a_.empty()) throw std::logic_error("riemannian_part: metric has no quadratic part");
    Matrix a(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) a(i, j) = a_[static_cast<std::size_t>(i * n + j)].evaluate(x);
    return a;
  }

  Vector one_form(std::span<const double> x) const {
    Vector b = Vector::Zero(dimension_);
    for (std::size_t i = 0; i < b_.size(); ++i) b(static_cast<Eigen::Index>(i)) = b_[i].evaluate(x);
    return b;
  }

  /// Checks the structural conditions of the declared family at x.
  void validate_at(std::span<const double> x) const {
    if (kind_ != MetricKind::riemannian && kind_ != MetricKind::randers) return;
    const Matrix a = riemannian_part(x);
    const double scale = std::max(1.0, max_abs(a));
    if (max_abs(a - a.transpose()) > 1e-12 * scale) throw ConvexityError("riemannian part a_ij(x) is not symmetric");
    Eigen::SelfAdjointEigenSolver<Matrix> eig(a);
    if (!(eig.eigenvalues().minCoeff() > 0.0)) {
      throw ConvexityError("riemannian part a_ij(x) is not positive definite (min eigenvalue " +
                           detail::describe(eig.eigenvalues().minCoeff()) + ")");
    }
    if (kind_ == MetricKind::randers) {
      const Vector b = one_form(x);
      const double norm2 = b.dot(a.ldlt().solve(b));
      if (!(norm2 < 1.0)) {
        throw ConvexityError("randers one-form violates a^ij b_i b_j < 1 (value " + detail::describe(norm2) + ")");
      }
    }
  }

private:
  static int check_dimension(int n) {
    if (n < 1 || n > 6) throw ParseError("metric dimension must be in [1, 6], got " + std::to_string(n));
    return n;
  }

  static std::vector<Expr> parse_matrix(int n, const std::vector<std::string>& a, const std::map<std::string, double>& params) {
    if (static_cast<int>(a.size()) != n * n) {
      throw ParseError("riemannian part needs " + std::to_string(n * n) + " entries, got " + std::to_string(a.size()));
    }
    std::vector<Expr> out;
    for (const auto& text : a) out.push_back(parse(text, numbered_names("x", n), params));
    return out;
  }

  template <class T>
  T quadratic_form(std::span<const T> x, std::span<const T> y) const {
    const auto n = static_cast<std::size_t>(dimension_);
    T s = y[0] * 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) {
        const ExprNode& node = a_[i * n + j].root();
        if (node.op == ExprOp::constant) {
          if (node.value != 0.0) s += node.value * (y[i] * y[j]);
        } else {
          s += a_[i * n + j].evaluate(x) * (y[i] * y[j]);
        }
      }
    }
    return s;
  }

  template <class T>
  static T checked_sqrt(const T& s) {
    using std::sqrt;
    if (!(detail::value_of(s) > 0.0)) {
      throw DomainError("Finsler function: quadratic form value " + detail::describe(detail::value_of(s)) + " is not > 0");
    }
    return sqrt(s);
  }

  MetricKind kind_ = MetricKind::euclidean;
  int dimension_ = 0;
  std::vector<Expr> a_;
  std::vector<Expr> b_;
  Expr F_;
  std::map<std::string, double> parameters_;
};

}  // namespace finsler_lab
