#pragma once

/**
 * @file jet.hpp
 * @brief Truncated multivariate Taylor jets (forward-mode AD of any fixed order).
 *
 * A Jet holds the Taylor polynomial of a function of `num_vars` variables about
 * some point, truncated at total degree `order`:
 *
 *     f(p + h) ~ sum_{|mu| <= order} c_mu h^mu
 *
 * Storage convention: `c_mu` are Taylor coefficients, not derivatives. The true
 * partial derivative is recovered by `extract`, which multiplies by
 * mu! = mu_1! * ... * mu_n!. Arithmetic is then plain truncated polynomial
 * arithmetic (products are truncated convolutions).
 *
 * Coefficients are stored densely in graded-lexicographic order: all degree-0
 * entries, then degree 1 (e_0, e_1, ...), then degree 2, and so on. Inside one
 * degree the exponent of the lower-numbered variable decreases first, e.g. for
 * two variables: 1, x0, x1, x0^2, x0 x1, x1^2, x0^3, ... Because the ordering is
 * graded, truncating to a lower order is a prefix copy.
 *
 * Jets are immutable-by-value and carry a shared, cached layout; they are safe
 * to use concurrently.
 */

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "finsler_lab/errors.hpp"

namespace finsler_lab {

using MultiIndex = std::vector<int>;

/// Default truncation order used for F^2 (see README for why 4 and not 3).
inline constexpr int kMetricJetOrder = 4;

inline int degree(const MultiIndex& mu) {
  int d = 0;
  for (int m : mu) d += m;
  return d;
}

/// Index tables shared by every jet with the same (num_vars, order).
class JetLayout {
public:
  struct Product {
    std::uint32_t lhs;
    std::uint32_t rhs;
    std::uint32_t out;
  };

  static std::shared_ptr<const JetLayout> get(int num_vars, int order) {
    if (num_vars < 0 || order < 0 || order > kMaxOrder || num_vars > kMaxVars) {
      throw std::invalid_argument("jet layout out of range: vars=" + std::to_string(num_vars) +
                                  " order=" + std::to_string(order));
    }
    static std::mutex mutex;
    static std::map<std::pair<int, int>, std::shared_ptr<const JetLayout>> cache;
    std::lock_guard lock(mutex);
    auto& slot = cache[{num_vars, order}];
    if (!slot) slot = std::shared_ptr<const JetLayout>(new JetLayout(num_vars, order));
    return slot;
  }

  static constexpr int kMaxOrder = 7;
  static constexpr int kMaxVars = 16;

  int num_vars() const noexcept { return num_vars_; }
  int order() const noexcept { return order_; }
  std::size_t size() const noexcept { return indices_.size(); }

  const MultiIndex& index(std::size_t rank) const { return indices_.at(rank); }
  int degree_of(std::size_t rank) const { return degrees_[rank]; }

  /// First rank of the given degree; degree_begin(order + 1) == size().
  std::size_t degree_begin(int d) const { return degree_begin_.at(static_cast<std::size_t>(d)); }

  /// Rank of mu, or size() if mu is not representable.
  std::size_t rank(const MultiIndex& mu) const {
    if (static_cast<int>(mu.size()) != num_vars_) return size();
    int d = 0;
    for (int m : mu) {
      if (m < 0) return size();
      d += m;
    }
    if (d > order_) return size();
    auto it = rank_.find(encode(mu));
    return it == rank_.end() ? size() : it->second;
  }

  /// mu! for the multi-index at `rank`.
  double factorial_weight(std::size_t rank) const { return weights_[rank]; }

  const std::vector<Product>& products() const noexcept { return products_; }

  /// For each rank c of the (num_vars, order - 1) layout: the rank in this
  /// layout of index(c) + e_var, and the factor (index(c)[var] + 1).
  const std::vector<std::pair<std::uint32_t, double>>& shift(int var) const { return shifts_.at(var); }

private:
  JetLayout(int num_vars, int order) : num_vars_(num_vars), order_(order) {
    MultiIndex current(static_cast<std::size_t>(num_vars), 0);
    for (int d = 0; d <= order; ++d) {
      degree_begin_.push_back(indices_.size());
      enumerate(d, 0, current);
    }
    degree_begin_.push_back(indices_.size());
    for (std::size_t r = 0; r < indices_.size(); ++r) {
      rank_.emplace(encode(indices_[r]), r);
      degrees_.push_back(degree(indices_[r]));
      double w = 1.0;
      for (int m : indices_[r]) w *= std::tgamma(m + 1.0);
      weights_.push_back(w);
    }
    MultiIndex sum(static_cast<std::size_t>(num_vars), 0);
    for (std::size_t a = 0; a < indices_.size(); ++a) {
      for (std::size_t b = 0; b < degree_begin_[static_cast<std::size_t>(order - degrees_[a] + 1)]; ++b) {
        for (int v = 0; v < num_vars; ++v) sum[v] = indices_[a][v] + indices_[b][v];
        products_.push_back({static_cast<std::uint32_t>(a), static_cast<std::uint32_t>(b),
                             static_cast<std::uint32_t>(rank_.at(encode(sum)))});
      }
    }
    if (order > 0) {
      const std::size_t child = degree_begin_[static_cast<std::size_t>(order)];
      shifts_.resize(static_cast<std::size_t>(num_vars));
      for (int v = 0; v < num_vars; ++v) {
        for (std::size_t c = 0; c < child; ++c) {
          MultiIndex up = indices_[c];
          const double factor = up[v] + 1.0;
          ++up[v];
          shifts_[v].emplace_back(static_cast<std::uint32_t>(rank_.at(encode(up))), factor);
        }
      }
    }
  }

  void enumerate(int remaining, int var, MultiIndex& current) {
    if (var == num_vars_ - 1 || num_vars_ == 0) {
      if (num_vars_ == 0) {
        if (remaining == 0) indices_.push_back(current);
        return;
      }
      current[var] = remaining;
      indices_.push_back(current);
      current[var] = 0;
      return;
    }
    for (int e = remaining; e >= 0; --e) {
      current[var] = e;
      enumerate(remaining - e, var + 1, current);
    }
    current[var] = 0;
  }

  static std::uint64_t encode(const MultiIndex& mu) {
    std::uint64_t key = 0;
    for (int m : mu) key = key * 8u + static_cast<std::uint64_t>(m);
    return key;
  }

  int num_vars_;
  int order_;
  std::vector<MultiIndex> indices_;
  std::vector<int> degrees_;
  std::vector<std::size_t> degree_begin_;
  std::vector<double> weights_;
  std::unordered_map<std::uint64_t, std::size_t> rank_;
  std::vector<Product> products_;
  std::vector<std::vector<std::pair<std::uint32_t, double>>> shifts_;
};

class Jet {
public:
  /// An empty jet; only valid as an assignment target.
  Jet() = default;

  Jet(std::shared_ptr<const JetLayout> layout, double value)
      : layout_(std::move(layout)), coeffs_(layout_->size(), 0.0) {
    coeffs_[0] = value;
  }

  Jet(std::shared_ptr<const JetLayout> layout, std::vector<double> coeffs)
      : layout_(std::move(layout)), coeffs_(std::move(coeffs)) {
    if (coeffs_.size() != layout_->size()) throw std::invalid_argument("jet coefficient count mismatch");
  }

  static Jet constant(double value, int num_vars, int order) {
    return Jet(JetLayout::get(num_vars, order), value);
  }

  bool empty() const noexcept { return !layout_; }
  int num_vars() const { return layout_->num_vars(); }
  int order() const { return layout_->order(); }
  const std::shared_ptr<const JetLayout>& layout() const noexcept { return layout_; }

  double value() const { return coeffs_[0]; }

  /// Raw Taylor coefficients in layout order.
  std::span<const double> coefficients() const noexcept { return coeffs_; }

  /// Taylor coefficient c_mu (0 if mu is outside the truncation).
  double coefficient(const MultiIndex& mu) const {
    const std::size_t r = layout_->rank(mu);
    return r == layout_->size() ? 0.0 : coeffs_[r];
  }

  /// Jet of df/dv_var, one order lower.
  Jet derivative(int var) const {
    if (var < 0 || var >= num_vars()) throw std::out_of_range("jet derivative: variable index out of range");
    if (order() == 0) throw std::out_of_range("jet derivative: order-0 jet has no derivative information");
    auto child = JetLayout::get(num_vars(), order() - 1);
    std::vector<double> out(child->size());
    const auto& shift = layout_->shift(var);
    for (std::size_t c = 0; c < out.size(); ++c) out[c] = coeffs_[shift[c].first] * shift[c].second;
    return Jet(std::move(child), std::move(out));
  }

  Jet truncated(int new_order) const {
    if (new_order > order()) throw std::invalid_argument("jet truncation cannot raise the order");
    if (new_order == order()) return *this;
    auto child = JetLayout::get(num_vars(), new_order);
    std::vector<double> out(coeffs_.begin(), coeffs_.begin() + static_cast<std::ptrdiff_t>(child->size()));
    return Jet(std::move(child), std::move(out));
  }

  bool is_zero() const {
    return std::all_of(coeffs_.begin(), coeffs_.end(), [](double c) { return c == 0.0; });
  }

  Jet operator-() const {
    Jet r = *this;
    for (double& c : r.coeffs_) c = -c;
    return r;
  }

  Jet& operator+=(const Jet& o) {
    require_compatible(o);
    for (std::size_t i = 0; i < coeffs_.size(); ++i) coeffs_[i] += o.coeffs_[i];
    return *this;
  }
  Jet& operator-=(const Jet& o) {
    require_compatible(o);
    for (std::size_t i = 0; i < coeffs_.size(); ++i) coeffs_[i] -= o.coeffs_[i];
    return *this;
  }
  Jet& operator*=(const Jet& o) { return *this = *this * o; }
  Jet& operator/=(const Jet& o) { return *this = *this / o; }

  Jet& operator+=(double s) {
    coeffs_[0] += s;
    return *this;
  }
  Jet& operator-=(double s) {
    coeffs_[0] -= s;
    return *this;
  }
  Jet& operator*=(double s) {
    for (double& c : coeffs_) c *= s;
    return *this;
  }
  Jet& operator/=(double s) {
    if (s == 0.0) throw DomainError("division: divisor value 0");
    for (double& c : coeffs_) c /= s;
    return *this;
  }

  friend Jet operator+(Jet a, const Jet& b) { return a += b; }
  friend Jet operator-(Jet a, const Jet& b) { return a -= b; }
  friend Jet operator+(Jet a, double s) { return a += s; }
  friend Jet operator+(double s, Jet a) { return a += s; }
  friend Jet operator-(Jet a, double s) { return a -= s; }
  friend Jet operator-(double s, const Jet& a) { return -a + s; }
  friend Jet operator*(Jet a, double s) { return a *= s; }
  friend Jet operator*(double s, Jet a) { return a *= s; }
  friend Jet operator/(Jet a, double s) { return a /= s; }

  friend Jet operator*(const Jet& a, const Jet& b) {
    a.require_compatible(b);
    std::vector<double> out(a.coeffs_.size(), 0.0);
    for (const auto& p : a.layout_->products()) out[p.out] += a.coeffs_[p.lhs] * b.coeffs_[p.rhs];
    return Jet(a.layout_, std::move(out));
  }

  friend Jet operator/(const Jet& a, const Jet& b);
  friend Jet operator/(double s, const Jet& b);

  /// Compose a univariate Taylor series with this jet. taylor[k] = f^(k)(value)/k!.
  Jet apply_series(std::span<const double> taylor) const {
    const int n = order();
    if (static_cast<int>(taylor.size()) < n + 1) throw std::invalid_argument("series shorter than jet order");
    Jet delta = *this;
    delta.coeffs_[0] = 0.0;
    Jet r(layout_, taylor[static_cast<std::size_t>(n)]);
    for (int k = n - 1; k >= 0; --k) {
      r = r * delta;
      r.coeffs_[0] += taylor[static_cast<std::size_t>(k)];
    }
    return r;
  }

  friend bool operator==(const Jet& a, const Jet& b) {
    return a.layout_ == b.layout_ && a.coeffs_ == b.coeffs_;
  }

private:
  void require_compatible(const Jet& o) const {
    if (layout_ != o.layout_) {
      std::ostringstream os;
      os << "jet shape mismatch: (vars=" << (layout_ ? num_vars() : -1) << ", order=" << (layout_ ? order() : -1)
         << ") vs (vars=" << (o.layout_ ? o.num_vars() : -1) << ", order=" << (o.layout_ ? o.order() : -1) << ")";
      throw std::invalid_argument(os.str());
    }
  }

  std::shared_ptr<const JetLayout> layout_;
  std::vector<double> coeffs_;
};

/// Jet of the coordinate function v_var at `value`.
inline Jet lift_variable(double value, int var_index, int num_vars, int order = kMetricJetOrder) {
  if (var_index < 0 || var_index >= num_vars) {
    throw std::out_of_range("lift_variable: index " + std::to_string(var_index) + " outside [0, " +
                            std::to_string(num_vars) + ")");
  }
  Jet j(JetLayout::get(num_vars, order), value);
  if (order == 0) return j;
  MultiIndex e(static_cast<std::size_t>(num_vars), 0);
  e[static_cast<std::size_t>(var_index)] = 1;
  std::vector<double> c(j.coefficients().begin(), j.coefficients().end());
  c[j.layout()->rank(e)] = 1.0;
  return Jet(j.layout(), std::move(c));
}

/// Lift values[i] as variable (offset + i) of a num_vars-variable jet.
inline std::vector<Jet> lift_variables(std::span<const double> values, int offset, int num_vars, int order) {
  std::vector<Jet> out;
  out.reserve(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) {
    out.push_back(lift_variable(values[i], offset + static_cast<int>(i), num_vars, order));
  }
  return out;
}

/// The partial derivative d^|mu| f / dv^mu.
inline double extract(const Jet& a, const MultiIndex& mu) {
  if (static_cast<int>(mu.size()) != a.num_vars()) throw std::invalid_argument("extract: multi-index length mismatch");
  if (degree(mu) > a.order()) {
    throw std::out_of_range("extract: degree " + std::to_string(degree(mu)) + " exceeds jet order " +
                            std::to_string(a.order()));
  }
  const std::size_t r = a.layout()->rank(mu);
  if (r == a.layout()->size()) throw std::invalid_argument("extract: invalid multi-index");
  return a.coefficients()[r] * a.layout()->factorial_weight(r);
}

/// Partial derivative with respect to the listed variables, e.g. {0, 0, 3}.
inline double partial(const Jet& a, std::initializer_list<int> vars) {
  MultiIndex mu(static_cast<std::size_t>(a.num_vars()), 0);
  for (int v : vars) {
    if (v < 0 || v >= a.num_vars()) throw std::out_of_range("partial: variable index out of range");
    ++mu[static_cast<std::size_t>(v)];
  }
  return extract(a, mu);
}

namespace detail {

inline std::vector<double> power_series(double x, double p, int order) {
  std::vector<double> c(static_cast<std::size_t>(order) + 1);
  double falling = 1.0;
  double factorial = 1.0;
  for (int k = 0; k <= order; ++k) {
    c[static_cast<std::size_t>(k)] = falling / factorial * std::pow(x, p - k);
    falling *= (p - k);
    factorial *= (k + 1);
  }
  return c;
}

inline std::vector<double> reciprocal_series(double x, int order) {
  std::vector<double> c(static_cast<std::size_t>(order) + 1);
  double inv = 1.0 / x;
  double term = inv;
  for (int k = 0; k <= order; ++k) {
    c[static_cast<std::size_t>(k)] = (k % 2 == 0 ? term : -term);
    term *= inv;
  }
  return c;
}

inline std::string describe(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

}  // namespace detail

inline Jet reciprocal(const Jet& b) {
  if (b.value() == 0.0) throw DomainError("division: divisor value 0");
  return b.apply_series(detail::reciprocal_series(b.value(), b.order()));
}

inline Jet operator/(const Jet& a, const Jet& b) { return a * reciprocal(b); }
inline Jet operator/(double s, const Jet& b) { return reciprocal(b) * s; }

inline Jet sqrt(const Jet& a) {
  if (!(a.value() > 0.0)) throw DomainError("sqrt: argument value " + detail::describe(a.value()) + " is not > 0");
  return a.apply_series(detail::power_series(a.value(), 0.5, a.order()));
}

inline Jet exp(const Jet& a) {
  std::vector<double> c(static_cast<std::size_t>(a.order()) + 1);
  const double e = std::exp(a.value());
  double factorial = 1.0;
  for (int k = 0; k <= a.order(); ++k) {
    c[static_cast<std::size_t>(k)] = e / factorial;
    factorial *= (k + 1);
  }
  return a.apply_series(c);
}

inline Jet log(const Jet& a) {
  if (!(a.value() > 0.0)) throw DomainError("log: argument value " + detail::describe(a.value()) + " is not > 0");
  std::vector<double> c(static_cast<std::size_t>(a.order()) + 1);
  c[0] = std::log(a.value());
  double power = 1.0;
  for (int k = 1; k <= a.order(); ++k) {
    power *= a.value();
    c[static_cast<std::size_t>(k)] = (k % 2 == 1 ? 1.0 : -1.0) / (k * power);
  }
  return a.apply_series(c);
}

namespace detail {

// f^(k)(x)/k! for sin (phase 0) or cos (phase 1).
inline std::vector<double> trig_series(double x, int order, int phase) {
  const std::array<double, 4> cycle = {std::sin(x), std::cos(x), -std::sin(x), -std::cos(x)};
  std::vector<double> c(static_cast<std::size_t>(order) + 1);
  double factorial = 1.0;
  for (int k = 0; k <= order; ++k) {
    c[static_cast<std::size_t>(k)] = cycle[static_cast<std::size_t>((k + phase) % 4)] / factorial;
    factorial *= (k + 1);
  }
  return c;
}

}  // namespace detail

inline Jet sin(const Jet& a) { return a.apply_series(detail::trig_series(a.value(), a.order(), 0)); }
inline Jet cos(const Jet& a) { return a.apply_series(detail::trig_series(a.value(), a.order(), 1)); }

/// Integer power by repeated squaring; valid for negative bases.
inline Jet ipow(const Jet& a, long n) {
  if (n < 0) return reciprocal(ipow(a, -n));
  Jet result(a.layout(), 1.0);
  Jet base = a;
  while (n > 0) {
    if (n & 1) result = result * base;
    n >>= 1;
    if (n > 0) base = base * base;
  }
  return result;
}

/// a^p for a constant exponent. Integer p allows any base; otherwise value > 0.
inline Jet pow(const Jet& a, double p) {
  if (p == std::floor(p) && std::abs(p) <= 64.0) return ipow(a, static_cast<long>(p));
  if (!(a.value() > 0.0)) {
    throw DomainError("pow: base value " + detail::describe(a.value()) + " is not > 0 for exponent " +
                      detail::describe(p));
  }
  return a.apply_series(detail::power_series(a.value(), p, a.order()));
}

inline Jet pow(const Jet& a, const Jet& b) {
  if (!(a.value() > 0.0)) {
    throw DomainError("pow: base value " + detail::describe(a.value()) + " is not > 0 for a variable exponent");
  }
  return exp(b * log(a));
}

/**
 * Substitute jets into a Taylor polynomial.
 *
 * `outer` is the expansion of f about some point p; `inner[j]` are jets of
 * functions h_j whose values are p_j. Returns the jet of f(h(.)) truncated at
 * min(outer.order(), inner order).
 */
inline Jet compose(const Jet& outer, std::span<const Jet> inner) {
  if (static_cast<int>(inner.size()) != outer.num_vars()) {
    throw std::invalid_argument("compose: expected " + std::to_string(outer.num_vars()) + " inner jets");
  }
  if (inner.empty()) throw std::invalid_argument("compose: no inner jets");
  const int order = std::min(outer.order(), inner.front().order());
  auto layout = JetLayout::get(inner.front().num_vars(), order);
  std::vector<std::vector<Jet>> powers(inner.size());
  for (std::size_t j = 0; j < inner.size(); ++j) {
    Jet delta = inner[j].truncated(order) - inner[j].value();
    if (delta.layout() != layout) throw std::invalid_argument("compose: inner jets have different shapes");
    powers[j].emplace_back(layout, 1.0);
    for (int p = 1; p <= order; ++p) powers[j].push_back(powers[j].back() * delta);
  }
  Jet result(layout, 0.0);
  const auto& outer_layout = *outer.layout();
  const std::size_t end = outer_layout.degree_begin(order + 1);
  for (std::size_t r = 0; r < end; ++r) {
    const double c = outer.coefficients()[r];
    if (c == 0.0) continue;
    const MultiIndex& mu = outer_layout.index(r);
    Jet term(layout, c);
    for (std::size_t j = 0; j < mu.size(); ++j) {
      if (mu[j] > 0) term = term * powers[j][static_cast<std::size_t>(mu[j])];
    }
    result += term;
  }
  return result;
}

}  // namespace finsler_lab
