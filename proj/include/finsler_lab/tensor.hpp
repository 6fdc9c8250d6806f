#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <span>
#include <stdexcept>
#include <vector>

#include "finsler_lab/errors.hpp"
#include "finsler_lab/jet.hpp"

namespace finsler_lab {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Dense rank-3 array, row-major: (i, j, k) -> data[(i * d1 + j) * d2 + k].
class Tensor3 {
public:
  Tensor3() = default;
  Tensor3(int d0, int d1, int d2) : dims_{d0, d1, d2}, data_(static_cast<std::size_t>(d0) * d1 * d2, 0.0) {}
  explicit Tensor3(int n) : Tensor3(n, n, n) {}

  int dim(int axis) const { return dims_[static_cast<std::size_t>(axis)]; }

  double& operator()(int i, int j, int k) { return data_[offset(i, j, k)]; }
  double operator()(int i, int j, int k) const { return data_[offset(i, j, k)]; }

  const std::vector<double>& data() const noexcept { return data_; }

  double max_abs() const {
    double m = 0.0;
    for (double v : data_) m = std::max(m, std::abs(v));
    return m;
  }

  friend Tensor3 operator-(const Tensor3& a, const Tensor3& b) {
    a.require_same(b);
    Tensor3 r = a;
    for (std::size_t i = 0; i < r.data_.size(); ++i) r.data_[i] -= b.data_[i];
    return r;
  }
  friend Tensor3 operator+(const Tensor3& a, const Tensor3& b) {
    a.require_same(b);
    Tensor3 r = a;
    for (std::size_t i = 0; i < r.data_.size(); ++i) r.data_[i] += b.data_[i];
    return r;
  }
  friend Tensor3 operator*(double s, Tensor3 a) {
    for (double& v : a.data_) v *= s;
    return a;
  }

private:
  std::size_t offset(int i, int j, int k) const {
    return (static_cast<std::size_t>(i) * static_cast<std::size_t>(dims_[1]) + static_cast<std::size_t>(j)) *
               static_cast<std::size_t>(dims_[2]) +
           static_cast<std::size_t>(k);
  }
  void require_same(const Tensor3& o) const {
    if (dims_ != o.dims_) throw std::invalid_argument("Tensor3 shape mismatch");
  }

  std::vector<int> dims_{0, 0, 0};
  std::vector<double> data_;
};

inline std::span<const double> as_span(const Vector& v) {
  return {v.data(), static_cast<std::size_t>(v.size())};
}

inline Vector to_vector(std::span<const double> s) {
  Vector v(static_cast<Eigen::Index>(s.size()));
  for (std::size_t i = 0; i < s.size(); ++i) v(static_cast<Eigen::Index>(i)) = s[i];
  return v;
}

template <class Derived>
double max_abs(const Eigen::MatrixBase<Derived>& m) {
  return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff();
}

inline double max_abs(const Tensor3& t) { return t.max_abs(); }

/// Inverse of a symmetric positive-definite-or-not matrix with a conditioning guard.
inline Matrix checked_inverse(const Matrix& m, const char* what, double max_condition = 1e12) {
  Eigen::JacobiSVD<Matrix> svd(m);
  const auto& s = svd.singularValues();
  if (s.size() == 0) return m;
  const double smax = s(0);
  const double smin = s(s.size() - 1);
  if (!(smin > 0.0) || smax / smin > max_condition) {
    throw SingularError(std::string(what) + " is singular (condition number " +
                        (smin > 0.0 ? detail::describe(smax / smin) : std::string("inf")) + ")");
  }
  return m.inverse();
}

/// Jet-valued dense matrix, row-major.
struct JetMatrix {
  int rows = 0;
  int cols = 0;
  std::vector<Jet> data;

  JetMatrix() = default;
  JetMatrix(int r, int c, const Jet& fill) : rows(r), cols(c), data(static_cast<std::size_t>(r) * c, fill) {}

  Jet& operator()(int i, int j) { return data[static_cast<std::size_t>(i) * cols + j]; }
  const Jet& operator()(int i, int j) const { return data[static_cast<std::size_t>(i) * cols + j]; }

  Matrix values() const {
    Matrix m(rows, cols);
    for (int i = 0; i < rows; ++i)
      for (int j = 0; j < cols; ++j) m(i, j) = (*this)(i, j).value();
    return m;
  }
};

/// Solve A X = B over jets by Gaussian elimination with partial pivoting on values.
inline JetMatrix jet_solve(JetMatrix a, JetMatrix b) {
  const int n = a.rows;
  if (a.cols != n || b.rows != n) throw std::invalid_argument("jet_solve: shape mismatch");
  for (int col = 0; col < n; ++col) {
    int pivot = col;
    for (int r = col + 1; r < n; ++r) {
      if (std::abs(a(r, col).value()) > std::abs(a(pivot, col).value())) pivot = r;
    }
    if (std::abs(a(pivot, col).value()) < 1e-300) throw SingularError("jet_solve: singular matrix");
    if (pivot != col) {
      for (int c = 0; c < n; ++c) std::swap(a(col, c), a(pivot, c));
      for (int c = 0; c < b.cols; ++c) std::swap(b(col, c), b(pivot, c));
    }
    const Jet inv = reciprocal(a(col, col));
    for (int r = 0; r < n; ++r) {
      if (r == col) continue;
      const Jet factor = a(r, col) * inv;
      for (int c = col; c < n; ++c) a(r, c) -= factor * a(col, c);
      for (int c = 0; c < b.cols; ++c) b(r, c) -= factor * b(col, c);
    }
    for (int c = col; c < n; ++c) a(col, c) *= inv;
    for (int c = 0; c < b.cols; ++c) b(col, c) *= inv;
  }
  return b;
}

}  // namespace finsler_lab
