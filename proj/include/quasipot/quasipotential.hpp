#pragma once

#include <cmath>
#include <deque>
#include <functional>
#include <limits>
#include <stdexcept>
#include <vector>

#include "quasipot/action.hpp"
#include "quasipot/landscape.hpp"
#include "quasipot/linalg.hpp"
#include "quasipot/rng.hpp"

namespace quasipot {

// Candidate solution of the Hamilton-Jacobi equation. grad_phi may be
// analytic or the central-difference fallback.
struct CandidatePotential {
  std::function<double(const Vec&)> phi;
  std::function<Vec(const Vec&)> grad_phi;

  static CandidatePotential with_fd_gradient(std::function<double(const Vec&)> f,
                                             double step = 1e-5) {
    CandidatePotential c;
    c.phi = f;
    c.grad_phi = [f, step](const Vec& x) {
      Vec g(x.size());
      Vec xp = x, xm = x;
      for (std::size_t i = 0; i < x.size(); ++i) {
        xp[i] = x[i] + step;
        xm[i] = x[i] - step;
        g[i] = (f(xp) - f(xm)) / (2.0 * step);
        xp[i] = x[i];
        xm[i] = x[i];
      }
      return g;
    };
    return c;
  }
};

// (1/2) (grad phi)^T D (grad phi) - grad f . grad phi at x.
// Vanishes identically for an exact local quasi-potential.
inline double hj_residual(const CandidatePotential& c, const LossLandscape& lc,
                          const DiffusionField& df, const Vec& x) {
  const Vec gp = c.grad_phi(x);
  const Vec gf = lc.grad(x);
  const Mat d = df.D(x);
  return 0.5 * dot(gp, d.mul(gp)) - dot(gf, gp);
}

// Closed-form local quasi-potential of the quadratic bowl with
// D = diag(mu, 2-mu), anchored at the origin.
inline double analytic_qp_example31(const Vec& x, double mu) {
  if (!(mu > 0.0 && mu < 2.0)) throw ParameterError("analytic quasi-potential: mu must lie in (0,2)");
  return 2.0 * (x[0] * x[0] / mu + x[1] * x[1] / (2.0 - mu));
}

// Closed-form local quasi-potential inside basin 1 or 2 of the two-well
// loss, relative to that basin's minimum.
inline double analytic_qp_twowell(const Vec& x, int well, double mu) {
  if (well != 1 && well != 2) throw ParameterError("analytic quasi-potential: well must be 1 or 2");
  if (!(mu > 1.0 && mu < 2.0)) throw ParameterError("analytic quasi-potential: mu must lie in (1,2)");
  const double cx = well == 1 ? -2.0 : 2.0;
  const double u = x[0] - cx;
  return 2.0 * (u * u / mu + x[1] * x[1] / (2.0 - mu));
}

struct MamOptions {
  int max_iters = 20000;
  double step_size = 1e-3;   // initial descent step; adapted during the run
  double tol = 1e-8;         // relative action decrease over a 10-iteration window
  bool waive_anchor_check = false;
};

struct QuasiPotentialResult {
  double value = 0.0;
  DiscretePath path;
  int iterations = 0;
  bool converged = false;
  std::vector<double> action_trace;  // accepted action values, one per iteration
};

namespace detail {

// Contribution of segment (a, b) to the discrete geometric action.
inline double segment_action(const LossLandscape& lc, const DiffusionField& df, const Vec& a,
                             const Vec& b) {
  const double len = dist(a, b);
  if (!(len > 0.0)) throw DegeneratePathError("mam: path collapse (duplicate consecutive points)");
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
  return len * std::max(tn * gn + inner_dinv(l, tan, g), 0.0);
}

inline double path_diameter(const std::vector<Vec>& pts) {
  Vec lo = pts.front(), hi = pts.front();
  for (const Vec& p : pts)
    for (std::size_t k = 0; k < p.size(); ++k) {
      lo[k] = std::min(lo[k], p[k]);
      hi[k] = std::max(hi[k], p[k]);
    }
  return dist(lo, hi);
}

}  // namespace detail

// Minimum-action computation of the local quasi-potential from `start`
// (a critical point of the loss) to `end`: descent on the discrete
// geometric action over interior points, with finite-difference path
// gradients and uniform arc-length reprojection after every step.
inline QuasiPotentialResult mam_minimize(const LossLandscape& lc, const DiffusionField& df,
                                         const Vec& start, const Vec& end, int n_points,
                                         const MamOptions& opts = {}) {
  check_point(start, lc.dim);
  check_point(end, lc.dim);
  if (n_points < 20) throw ParameterError("mam: n_points must be >= 20");
  if (!opts.waive_anchor_check && norm(lc.grad(start)) >= 1e-8)
    throw ParameterError("mam: start is not a critical point (|grad f| >= 1e-8)");

  QuasiPotentialResult res;
  if (dist(start, end) == 0.0) {
    res.value = 0.0;
    res.converged = true;
    res.path.points.assign(static_cast<std::size_t>(n_points), start);
    return res;
  }

  // Straight-line initialization, jittered off any interior critical point
  // where the integrand is non-smooth.
  std::vector<Vec> pts(static_cast<std::size_t>(n_points));
  for (int j = 0; j < n_points; ++j) {
    const double w = static_cast<double>(j) / (n_points - 1);
    Vec q(start.size());
    for (std::size_t k = 0; k < start.size(); ++k) q[k] = start[k] + w * (end[k] - start[k]);
    pts[static_cast<std::size_t>(j)] = q;
  }
  bool interior_critical = false;
  for (int j = 1; j < n_points - 1; ++j)
    if (norm(lc.grad(pts[static_cast<std::size_t>(j)])) < 1e-12) interior_critical = true;
  if (interior_critical) {
    for (int j = 1; j < n_points - 1; ++j)
      for (std::size_t k = 0; k < start.size(); ++k)
        pts[static_cast<std::size_t>(j)][k] +=
            1e-6 * (uniform_open(counter_hash(0x9A37u, static_cast<std::uint64_t>(j), k)) - 0.5);
  }

  auto total_action = [&](const std::vector<Vec>& p) {
    double s = 0.0;
    for (std::size_t i = 0; i + 1 < p.size(); ++i) s += detail::segment_action(lc, df, p[i], p[i + 1]);
    return s;
  };
  auto reparam = [&](std::vector<Vec>& p) {
    DiscretePath tmp;
    tmp.points = p;
    p = reparametrize_uniform(tmp, n_points).points;
  };

  double action = total_action(pts);
  double step = opts.step_size;
  std::deque<double> window;
  window.push_back(action);
  const std::size_t dim = start.size();

  int iter = 0;
  for (; iter < opts.max_iters; ++iter) {
    const double diam = detail::path_diameter(pts);
    const double fd = 1e-6 * diam;

    // Central-difference gradient of the action w.r.t. interior points;
    // moving point j only touches the two adjacent segments.
    std::vector<Vec> grad(pts.size(), Vec(dim, 0.0));
    for (int j = 1; j < n_points - 1; ++j) {
      Vec& pj = pts[static_cast<std::size_t>(j)];
      const Vec& prev = pts[static_cast<std::size_t>(j - 1)];
      const Vec& next = pts[static_cast<std::size_t>(j + 1)];
      for (std::size_t k = 0; k < dim; ++k) {
        const double orig = pj[k];
        pj[k] = orig + fd;
        const double sp = detail::segment_action(lc, df, prev, pj) + detail::segment_action(lc, df, pj, next);
        pj[k] = orig - fd;
        const double sm = detail::segment_action(lc, df, prev, pj) + detail::segment_action(lc, df, pj, next);
        pj[k] = orig;
        grad[static_cast<std::size_t>(j)][k] = (sp - sm) / (2.0 * fd);
      }
    }

    // Descent step with backtracking; reprojection to uniform arc length is
    // part of the trial so accepted iterations never increase the action.
    bool accepted = false;
    while (step > 1e-14 * std::max(diam, 1.0)) {
      std::vector<Vec> trial = pts;
      for (int j = 1; j < n_points - 1; ++j)
        for (std::size_t k = 0; k < dim; ++k)
          trial[static_cast<std::size_t>(j)][k] -= step * grad[static_cast<std::size_t>(j)][k];
      reparam(trial);
      const double trial_action = total_action(trial);
      if (trial_action <= action + 1e-12) {
        pts = std::move(trial);
        action = trial_action;
        step = std::min(step * 1.2, 1.0);
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    res.action_trace.push_back(action);
    window.push_back(action);
    if (window.size() > 11) window.pop_front();

    if (!accepted) {
      res.converged = true;  // no descent direction left at resolvable step size
      ++iter;
      break;
    }
    if (window.size() == 11) {
      const double drop = window.front() - window.back();
      if (drop < opts.tol * std::max(std::abs(window.back()), 1e-30)) {
        res.converged = true;
        ++iter;
        break;
      }
    }
  }

  res.value = std::max(action, 0.0);
  res.iterations = iter;
  res.path.points = pts;
  return res;
}

struct BoundaryMinResult {
  double min_value = 0.0;
  Vec argmin;
  std::vector<QuasiPotentialResult> per_target;
  bool all_converged = true;
};

// min over boundary samples of the local quasi-potential from `anchor`.
inline BoundaryMinResult qp_boundary_min(const LossLandscape& lc, const DiffusionField& df,
                                         const Vec& anchor, const std::vector<Vec>& boundary,
                                         int n_points, const MamOptions& opts = {}) {
  if (boundary.empty()) throw ParameterError("qp_boundary_min: empty boundary sample");
  BoundaryMinResult out;
  out.min_value = std::numeric_limits<double>::infinity();
  for (const Vec& target : boundary) {
    QuasiPotentialResult r = mam_minimize(lc, df, anchor, target, n_points, opts);
    if (!r.converged) out.all_converged = false;
    if (r.value < out.min_value) {
      out.min_value = r.value;
      out.argmin = target;
    }
    out.per_target.push_back(std::move(r));
  }
  return out;
}

}  // namespace quasipot
