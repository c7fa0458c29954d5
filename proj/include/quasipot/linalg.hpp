#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace quasipot {

// Weight-space vector. Dimension is carried implicitly by size().
using Vec = std::vector<double>;

inline bool is_finite(const Vec& v) {
  for (double x : v)
    if (!std::isfinite(x)) return false;
  return true;
}

inline double dot(const Vec& a, const Vec& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

inline double norm(const Vec& a) { return std::sqrt(dot(a, a)); }

inline Vec operator+(const Vec& a, const Vec& b) {
  Vec r(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) r[i] = a[i] + b[i];
  return r;
}

inline Vec operator-(const Vec& a, const Vec& b) {
  Vec r(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) r[i] = a[i] - b[i];
  return r;
}

inline Vec operator*(double c, const Vec& a) {
  Vec r(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) r[i] = c * a[i];
  return r;
}

inline double dist(const Vec& a, const Vec& b) { return norm(a - b); }

// Small dense square matrix, row-major. Dimensions here are tiny
// (d = 2 for every built-in landscape), so no BLAS.
class Mat {
 public:
  Mat() : n_(0) {}
  explicit Mat(int n) : n_(n), a_(static_cast<std::size_t>(n) * n, 0.0) {}

  static Mat identity(int n) {
    Mat m(n);
    for (int i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
  }

  static Mat diag(const Vec& d) {
    Mat m(static_cast<int>(d.size()));
    for (int i = 0; i < m.n_; ++i) m(i, i) = d[static_cast<std::size_t>(i)];
    return m;
  }

  int dim() const { return n_; }

  double& operator()(int i, int j) { return a_[static_cast<std::size_t>(i) * n_ + j]; }
  double operator()(int i, int j) const { return a_[static_cast<std::size_t>(i) * n_ + j]; }

  double trace() const {
    double t = 0.0;
    for (int i = 0; i < n_; ++i) t += (*this)(i, i);
    return t;
  }

  Vec mul(const Vec& v) const {
    Vec r(static_cast<std::size_t>(n_), 0.0);
    for (int i = 0; i < n_; ++i)
      for (int j = 0; j < n_; ++j) r[static_cast<std::size_t>(i)] += (*this)(i, j) * v[static_cast<std::size_t>(j)];
    return r;
  }

  Mat mul(const Mat& b) const {
    Mat r(n_);
    for (int i = 0; i < n_; ++i)
      for (int k = 0; k < n_; ++k) {
        const double aik = (*this)(i, k);
        for (int j = 0; j < n_; ++j) r(i, j) += aik * b(k, j);
      }
    return r;
  }

  Mat transposed() const {
    Mat r(n_);
    for (int i = 0; i < n_; ++i)
      for (int j = 0; j < n_; ++j) r(j, i) = (*this)(i, j);
    return r;
  }

  double max_asymmetry() const {
    double m = 0.0;
    for (int i = 0; i < n_; ++i)
      for (int j = i + 1; j < n_; ++j) m = std::max(m, std::abs((*this)(i, j) - (*this)(j, i)));
    return m;
  }

 private:
  int n_;
  std::vector<double> a_;
};

struct FactorizationError : std::runtime_error {
  int failing_minor;
  FactorizationError(int minor, const std::string& what)
      : std::runtime_error(what), failing_minor(minor) {}
};

// Lower-triangular Cholesky factor L with L L^T = D.
// Throws FactorizationError naming the first non-positive leading minor.
inline Mat cholesky(const Mat& d) {
  const int n = d.dim();
  Mat l(n);
  for (int j = 0; j < n; ++j) {
    double s = d(j, j);
    for (int k = 0; k < j; ++k) s -= l(j, k) * l(j, k);
    if (!(s > 0.0)) {
      throw FactorizationError(j + 1, "cholesky: leading minor " + std::to_string(j + 1) +
                                          " is not positive definite");
    }
    l(j, j) = std::sqrt(s);
    for (int i = j + 1; i < n; ++i) {
      double t = d(i, j);
      for (int k = 0; k < j; ++k) t -= l(i, k) * l(j, k);
      l(i, j) = t / l(j, j);
    }
  }
  return l;
}

// Solves D x = b given the Cholesky factor L of D.
inline Vec cholesky_solve(const Mat& l, const Vec& b) {
  const int n = l.dim();
  Vec y(b);
  for (int i = 0; i < n; ++i) {
    for (int k = 0; k < i; ++k) y[static_cast<std::size_t>(i)] -= l(i, k) * y[static_cast<std::size_t>(k)];
    y[static_cast<std::size_t>(i)] /= l(i, i);
  }
  for (int i = n - 1; i >= 0; --i) {
    for (int k = i + 1; k < n; ++k) y[static_cast<std::size_t>(i)] -= l(k, i) * y[static_cast<std::size_t>(k)];
    y[static_cast<std::size_t>(i)] /= l(i, i);
  }
  return y;
}

// u^T D^{-1} v via a linear solve; D is never inverted explicitly.
inline double inner_dinv(const Mat& chol_l, const Vec& u, const Vec& v) {
  return dot(u, cholesky_solve(chol_l, v));
}

}  // namespace quasipot
