#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "quasipot/linalg.hpp"

namespace quasipot {

struct ParameterError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

inline void check_point(const Vec& x, int dim) {
  if (static_cast<int>(x.size()) != dim)
    throw ParameterError("point dimension " + std::to_string(x.size()) + " != landscape dimension " +
                         std::to_string(dim));
  if (!is_finite(x)) throw ParameterError("point has non-finite entries");
}

// A loss surface: f and its hand-coded gradient, plus Lipschitz metadata.
struct LossLandscape {
  int dim = 0;
  std::function<double(const Vec&)> loss;
  std::function<Vec(const Vec&)> grad;
  std::optional<double> lipschitz_L;
};

// Noise covariance D(x), symmetric positive definite with Tr D <= M.
struct DiffusionField {
  int dim = 0;
  std::function<Mat(const Vec&)> D;
  double trace_bound_M = 0.0;
};

// f(x) = x1^2 + x2^2, the convex single-well example.
inline LossLandscape make_quadratic_bowl() {
  LossLandscape lc;
  lc.dim = 2;
  lc.loss = [](const Vec& x) { return x[0] * x[0] + x[1] * x[1]; };
  lc.grad = [](const Vec& x) { return Vec{2.0 * x[0], 2.0 * x[1]}; };
  lc.lipschitz_L = 2.0;
  return lc;
}

// Axis-aligned quadratic f(x) = sum_i c_i x_i^2.
inline LossLandscape make_quadratic(const Vec& coeffs) {
  if (coeffs.empty()) throw ParameterError("quadratic: empty coefficient list");
  LossLandscape lc;
  lc.dim = static_cast<int>(coeffs.size());
  lc.loss = [coeffs](const Vec& x) {
    double s = 0.0;
    for (std::size_t i = 0; i < coeffs.size(); ++i) s += coeffs[i] * x[i] * x[i];
    return s;
  };
  lc.grad = [coeffs](const Vec& x) {
    Vec g(coeffs.size());
    for (std::size_t i = 0; i < coeffs.size(); ++i) g[i] = 2.0 * coeffs[i] * x[i];
    return g;
  };
  double cmax = 0.0;
  for (double c : coeffs) cmax = std::max(cmax, std::abs(c));
  lc.lipschitz_L = 2.0 * cmax;
  return lc;
}

// Basin membership for the two-well loss. The closed-ball predicate (<= 1)
// follows the piecewise definition; circle points take the inside branch.
inline bool in_well_1(const Vec& x) {
  const double dx = x[0] + 2.0;
  return dx * dx + x[1] * x[1] <= 1.0;
}

inline bool in_well_2(const Vec& x) {
  const double dx = x[0] - 2.0;
  return dx * dx + x[1] * x[1] <= 1.0;
}

// Two quadratic wells at (-2,0) and (2,0) joined by a flat plateau at
// height 1. The gradient is piecewise and deliberately left discontinuous
// across the basin circles.
inline LossLandscape make_two_well() {
  LossLandscape lc;
  lc.dim = 2;
  lc.loss = [](const Vec& x) {
    if (in_well_1(x)) {
      const double dx = x[0] + 2.0;
      return dx * dx + x[1] * x[1];
    }
    if (in_well_2(x)) {
      const double dx = x[0] - 2.0;
      return dx * dx + x[1] * x[1];
    }
    return 1.0;
  };
  lc.grad = [](const Vec& x) {
    if (in_well_1(x)) return Vec{2.0 * (x[0] + 2.0), 2.0 * x[1]};
    if (in_well_2(x)) return Vec{2.0 * (x[0] - 2.0), 2.0 * x[1]};
    return Vec{0.0, 0.0};
  };
  lc.lipschitz_L = 2.0;
  return lc;
}

// Constant D = diag(mu, 2-mu), isotropic exactly when mu = 1.
inline DiffusionField make_diag_diffusion(double mu) {
  if (!(mu > 0.0 && mu < 2.0)) throw ParameterError("diag diffusion: mu must lie in (0,2)");
  DiffusionField df;
  df.dim = 2;
  df.trace_bound_M = 2.0;
  df.D = [mu](const Vec&) { return Mat::diag({mu, 2.0 - mu}); };
  return df;
}

inline DiffusionField make_identity_diffusion(int dim) {
  DiffusionField df;
  df.dim = dim;
  df.trace_bound_M = static_cast<double>(dim);
  df.D = [dim](const Vec&) { return Mat::identity(dim); };
  return df;
}

// Piecewise-constant field for the two-well experiment: diag(mu_i, 2-mu_i)
// inside basin i, identity on the plateau. Shares the basin predicates of
// make_two_well.
inline DiffusionField make_two_well_diffusion(double mu1, double mu2) {
  if (!(mu1 > 1.0 && mu1 < 2.0)) throw ParameterError("two-well diffusion: mu1 must lie in (1,2)");
  if (!(mu2 > 1.0 && mu2 < 2.0)) throw ParameterError("two-well diffusion: mu2 must lie in (1,2)");
  DiffusionField df;
  df.dim = 2;
  df.trace_bound_M = 2.0;
  df.D = [mu1, mu2](const Vec& x) {
    if (in_well_1(x)) return Mat::diag({mu1, 2.0 - mu1});
    if (in_well_2(x)) return Mat::diag({mu2, 2.0 - mu2});
    return Mat::identity(2);
  };
  return df;
}

// Canonical lower-triangular factor Sigma with Sigma Sigma^T = D.
inline Mat factorize(const Mat& d) { return cholesky(d); }

// Finite-sum loss (1/n) sum f_i with uniform size-m mini-batches.
struct FiniteSumLoss {
  int n = 0;
  int batch_size = 0;
  std::vector<std::function<double(const Vec&)>> losses;
  std::vector<std::function<Vec(const Vec&)>> grads;

  Vec full_grad(const Vec& x) const {
    Vec g(x.size(), 0.0);
    for (const auto& gi : grads) {
      const Vec v = gi(x);
      for (std::size_t k = 0; k < g.size(); ++k) g[k] += v[k];
    }
    return (1.0 / n) * g;
  }
};

// Exact covariance of the batch-mean gradient: the average over all
// C(n, m) mini-batches of (g_B - gbar)(g_B - gbar)^T. No extra 1/m
// normalization; that scaling lives in eps = eta/m.
inline Mat minibatch_diffusion(const FiniteSumLoss& fs, const Vec& x) {
  const int n = fs.n;
  const int m = fs.batch_size;
  if (n < 1 || n > 12) throw ParameterError("minibatch diffusion: n must lie in [1,12]");
  if (m < 1 || m > n) throw ParameterError("minibatch diffusion: batch size m must lie in [1,n]");

  const int d = static_cast<int>(x.size());
  std::vector<Vec> gs(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) gs[static_cast<std::size_t>(i)] = fs.grads[static_cast<std::size_t>(i)](x);
  Vec gbar(static_cast<std::size_t>(d), 0.0);
  for (const Vec& g : gs)
    for (int k = 0; k < d; ++k) gbar[static_cast<std::size_t>(k)] += g[static_cast<std::size_t>(k)];
  for (int k = 0; k < d; ++k) gbar[static_cast<std::size_t>(k)] /= n;

  Mat cov(d);
  long n_subsets = 0;
  std::vector<int> idx(static_cast<std::size_t>(m));
  for (int i = 0; i < m; ++i) idx[static_cast<std::size_t>(i)] = i;
  while (true) {
    Vec dev(static_cast<std::size_t>(d), 0.0);
    for (int i : idx)
      for (int k = 0; k < d; ++k) dev[static_cast<std::size_t>(k)] += gs[static_cast<std::size_t>(i)][static_cast<std::size_t>(k)];
    for (int k = 0; k < d; ++k) dev[static_cast<std::size_t>(k)] = dev[static_cast<std::size_t>(k)] / m - gbar[static_cast<std::size_t>(k)];
    for (int r = 0; r < d; ++r)
      for (int c = 0; c < d; ++c) cov(r, c) += dev[static_cast<std::size_t>(r)] * dev[static_cast<std::size_t>(c)];
    ++n_subsets;

    // next m-combination of {0,...,n-1} in lexicographic order
    int i = m - 1;
    while (i >= 0 && idx[static_cast<std::size_t>(i)] == n - m + i) --i;
    if (i < 0) break;
    ++idx[static_cast<std::size_t>(i)];
    for (int j = i + 1; j < m; ++j) idx[static_cast<std::size_t>(j)] = idx[static_cast<std::size_t>(j - 1)] + 1;
  }
  for (int r = 0; r < d; ++r)
    for (int c = 0; c < d; ++c) cov(r, c) /= static_cast<double>(n_subsets);
  return cov;
}

}  // namespace quasipot
