#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "quasipot/landscape.hpp"
#include "quasipot/linalg.hpp"
#include "quasipot/rng.hpp"

namespace quasipot {

struct SimParams {
  double eps = 0.1;       // noise scale (learning rate / batch size)
  double h = 0.01;        // integrator step, time units
  long max_steps = 10000;
  std::uint64_t seed = 0xC0FFEE;

  void validate() const {
    if (!(eps >= 0.0)) throw ParameterError("sim.eps must be >= 0");
    if (!(h > 0.0)) throw ParameterError("sim.h must be > 0");
    if (max_steps < 1) throw ParameterError("sim.max_steps must be >= 1");
  }
};

// Ordered states, either time-stamped or (times empty) arc-length
// parametrized.
struct DiscretePath {
  std::vector<double> times;
  std::vector<Vec> points;

  bool has_times() const { return !times.empty(); }
  std::size_t size() const { return points.size(); }
};

struct DivergenceError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

constexpr double kDivergenceRadius = 1e6;

// Explicit-Euler trajectory of dx/dt = -grad f from x0 over [0, T].
inline DiscretePath gd_flow(const LossLandscape& lc, const Vec& x0, double h, double T) {
  if (!(h > 0.0) || !(T >= h)) throw ParameterError("gd_flow: need h > 0 and T >= h");
  check_point(x0, lc.dim);
  const long n = static_cast<long>(std::floor(T / h + 1e-9));
  DiscretePath path;
  path.times.reserve(static_cast<std::size_t>(n + 1));
  path.points.reserve(static_cast<std::size_t>(n + 1));
  Vec x = x0;
  path.times.push_back(0.0);
  path.points.push_back(x);
  for (long k = 1; k <= n; ++k) {
    const Vec g = lc.grad(x);
    for (std::size_t i = 0; i < x.size(); ++i) x[i] -= h * g[i];
    path.times.push_back(static_cast<double>(k) * h);
    path.points.push_back(x);
  }
  return path;
}

// One Euler-Maruyama step; Sigma is evaluated at the pre-step point.
// The noise vector is caller-supplied so steps are testable.
inline Vec em_step(const LossLandscape& lc, const DiffusionField& df, const Vec& x,
                   const SimParams& p, const Vec& noise) {
  const Vec g = lc.grad(x);
  Vec y(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) y[i] = x[i] - p.h * g[i];
  if (p.eps > 0.0) {
    const Mat sigma = factorize(df.D(x));
    const Vec kick = sigma.mul(noise);
    const double amp = std::sqrt(p.eps * p.h);
    for (std::size_t i = 0; i < y.size(); ++i) y[i] += amp * kick[i];
  }
  return y;
}

inline Vec em_step_counter(const LossLandscape& lc, const DiffusionField& df, const Vec& x,
                           const SimParams& p, long step, Vec& noise_buf) {
  if (p.eps > 0.0) fill_normals(p.seed, static_cast<std::uint64_t>(step), noise_buf);
  return em_step(lc, df, x, p, noise_buf);
}

// Full SGD diffusion trajectory. Identical (inputs, seed) give a
// bit-identical path; eps = 0 reproduces gd_flow step for step.
inline DiscretePath simulate_sgd(const LossLandscape& lc, const DiffusionField& df, const Vec& x0,
                                 const SimParams& p) {
  p.validate();
  check_point(x0, lc.dim);
  DiscretePath path;
  path.times.reserve(static_cast<std::size_t>(p.max_steps + 1));
  path.points.reserve(static_cast<std::size_t>(p.max_steps + 1));
  Vec x = x0;
  Vec noise(x.size(), 0.0);
  path.times.push_back(0.0);
  path.points.push_back(x);
  for (long k = 1; k <= p.max_steps; ++k) {
    x = em_step_counter(lc, df, x, p, k, noise);
    if (norm(x) > kDivergenceRadius)
      throw DivergenceError("trajectory escaped safety radius 1e6 at step " + std::to_string(k));
    path.times.push_back(static_cast<double>(k) * p.h);
    path.points.push_back(x);
  }
  return path;
}

struct ClosenessPoint {
  double eps = 0.0;
  double statistic = 0.0;  // max_t of the MC-estimated E|x(t) - x_GD(t)|^2
  double bound = 0.0;      // C * eps with C = 2 M T exp(L^2 T^2)
};

// Monte Carlo check of the mean-square closeness of SGD to the GD flow on
// [0, T], one estimate per eps. Requires lipschitz_L on the landscape.
inline std::vector<ClosenessPoint> closeness_statistic(const LossLandscape& lc,
                                                       const DiffusionField& df, const Vec& x0,
                                                       const std::vector<double>& eps_list,
                                                       double T, double h, int trials,
                                                       std::uint64_t master_seed = 0xC0FFEE) {
  if (trials < 100) throw ParameterError("closeness_statistic: trials must be >= 100");
  if (!lc.lipschitz_L) throw ParameterError("closeness_statistic: landscape has no Lipschitz metadata");
  const DiscretePath gd = gd_flow(lc, x0, h, T);
  const long n = static_cast<long>(gd.size()) - 1;
  const double L = *lc.lipschitz_L;
  const double M = df.trace_bound_M;
  const double C = 2.0 * M * T * std::exp(L * L * T * T);

  std::vector<ClosenessPoint> out;
  for (std::size_t ei = 0; ei < eps_list.size(); ++ei) {
    const double eps = eps_list[ei];
    std::vector<double> sumsq(static_cast<std::size_t>(n + 1), 0.0);
    for (int t = 0; t < trials; ++t) {
      SimParams p;
      p.eps = eps;
      p.h = h;
      p.max_steps = n;
      p.seed = derive_seed(master_seed, (static_cast<std::uint64_t>(ei) << 32) + static_cast<std::uint64_t>(t));
      Vec x = x0;
      Vec noise(x.size(), 0.0);
      for (long k = 1; k <= n; ++k) {
        x = em_step_counter(lc, df, x, p, k, noise);
        const Vec& ref = gd.points[static_cast<std::size_t>(k)];
        double d2 = 0.0;
        for (std::size_t i = 0; i < x.size(); ++i) {
          const double di = x[i] - ref[i];
          d2 += di * di;
        }
        sumsq[static_cast<std::size_t>(k)] += d2;
      }
    }
    double stat = 0.0;
    for (long k = 0; k <= n; ++k) stat = std::max(stat, sumsq[static_cast<std::size_t>(k)] / trials);
    out.push_back({eps, stat, C * eps});
  }
  return out;
}

}  // namespace quasipot
