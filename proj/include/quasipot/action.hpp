#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

#include "quasipot/dynamics.hpp"
#include "quasipot/landscape.hpp"
#include "quasipot/linalg.hpp"

namespace quasipot {

struct ActionValue {
  double value = 0.0;
  int quadrature_points = 0;
};

struct DegeneratePathError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// Time-parametrized action: midpoint-rule discretization of
// (1/2) int (v + grad f)^T D^{-1} (v + grad f) dt with v = dpsi/dt.
inline ActionValue action_functional(const DiscretePath& path, const LossLandscape& lc,
                                     const DiffusionField& df) {
  if (!path.has_times()) throw ParameterError("action_functional: path has no time stamps");
  if (path.size() < 2) throw ParameterError("action_functional: need at least 2 points");
  double total = 0.0;
  for (std::size_t i = 0; i + 1 < path.size(); ++i) {
    const double dt = path.times[i + 1] - path.times[i];
    if (!(dt > 0.0)) throw ParameterError("action_functional: times must be strictly increasing");
    const Vec& a = path.points[i];
    const Vec& b = path.points[i + 1];
    Vec mid(a.size());
    Vec u(a.size());
    for (std::size_t k = 0; k < a.size(); ++k) mid[k] = 0.5 * (a[k] + b[k]);
    const Vec g = lc.grad(mid);
    for (std::size_t k = 0; k < a.size(); ++k) u[k] = (b[k] - a[k]) / dt + g[k];
    const Mat l = factorize(df.D(mid));
    total += 0.5 * inner_dinv(l, u, u) * dt;
  }
  return {std::max(total, 0.0), static_cast<int>(path.size()) - 1};
}

// Parametrization-free action: per segment, with A = D^{-1} at the midpoint
// and t the Euclidean unit tangent,
//   ( ||t||_A ||grad f||_A + <t, grad f>_A ) * segment length.
inline ActionValue geometric_action(const DiscretePath& path, const LossLandscape& lc,
                                    const DiffusionField& df) {
  if (path.size() < 3) throw ParameterError("geometric_action: need at least 3 points");
  double total = 0.0;
  for (std::size_t i = 0; i + 1 < path.size(); ++i) {
    const Vec& a = path.points[i];
    const Vec& b = path.points[i + 1];
    const double len = dist(a, b);
    if (!(len > 0.0)) throw DegeneratePathError("geometric_action: duplicate consecutive points");
    Vec mid(a.size());
    Vec tan(a.size());
    for (std::size_t k = 0; k < a.size(); ++k) {
      mid[k] = 0.5 * (a[k] + b[k]);
      tan[k] = (b[k] - a[k]) / len;
    }
    const Vec g = lc.grad(mid);
    const Mat l = factorize(df.D(mid));
    const double tn = std::sqrt(std::max(inner_dinv(l, tan, tan), 0.0));
    const double gn = std::sqrt(std::max(inner_dinv(l, g, g), 0.0));
    const double cross = inner_dinv(l, tan, g);
    // Cauchy-Schwarz makes the integrand nonnegative; clamp rounding dust.
    total += len * std::max(tn * gn + cross, 0.0);
  }
  return {total, static_cast<int>(path.size()) - 1};
}

// Resamples the piecewise-linear image of `path` at n_points states equally
// spaced in Euclidean arc length. Endpoints are preserved exactly.
inline DiscretePath reparametrize_uniform(const DiscretePath& path, int n_points) {
  if (n_points < 3) throw ParameterError("reparametrize_uniform: n_points must be >= 3");
  if (path.size() < 2) throw ParameterError("reparametrize_uniform: need at least 2 points");
  std::vector<double> cum(path.size(), 0.0);
  for (std::size_t i = 1; i < path.size(); ++i)
    cum[i] = cum[i - 1] + dist(path.points[i - 1], path.points[i]);
  const double total = cum.back();
  if (!(total > 0.0)) throw DegeneratePathError("reparametrize_uniform: path has zero length");

  DiscretePath out;
  out.points.reserve(static_cast<std::size_t>(n_points));
  out.points.push_back(path.points.front());
  std::size_t seg = 0;
  for (int j = 1; j < n_points - 1; ++j) {
    const double s = total * static_cast<double>(j) / (n_points - 1);
    while (seg + 2 < path.size() && cum[seg + 1] < s) ++seg;
    const double seg_len = cum[seg + 1] - cum[seg];
    const double w = seg_len > 0.0 ? (s - cum[seg]) / seg_len : 0.0;
    const Vec& a = path.points[seg];
    const Vec& b = path.points[seg + 1];
    Vec q(a.size());
    for (std::size_t k = 0; k < a.size(); ++k) q[k] = a[k] + w * (b[k] - a[k]);
    out.points.push_back(q);
  }
  out.points.push_back(path.points.back());
  return out;
}

}  // namespace quasipot
