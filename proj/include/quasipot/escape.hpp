#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "quasipot/dynamics.hpp"
#include "quasipot/landscape.hpp"
#include "quasipot/linalg.hpp"
#include "quasipot/rng.hpp"

namespace quasipot {

// Exit domain U = open ball, with the inner/outer cycle spheres gamma and
// Gamma used by the embedded Markov chain.
struct DomainSpec {
  Vec center;
  double radius = 1.0;
  double gamma_radius = 0.1;
  double Gamma_radius = 0.2;

  void validate() const {
    if (!(gamma_radius > 0.0 && gamma_radius < Gamma_radius && Gamma_radius < radius))
      throw ParameterError("domain: need 0 < gamma < Gamma < radius");
  }

  static DomainSpec ball(Vec c, double r) {
    // default cycle spheres at 0.1 and 0.2 of the domain radius
    return DomainSpec{std::move(c), r, 0.1 * r, 0.2 * r};
  }
};

struct ExitRecord {
  bool exited = false;
  long exit_step = 0;
  double exit_time = 0.0;
  Vec exit_point;
  std::uint64_t seed = 0;
};

namespace detail {

// Interpolation weight alpha in (0, 1] where |a + alpha d| = r, given
// |a| <= r < |a + d| (crossing segment onto the sphere).
inline double sphere_crossing(const Vec& a, const Vec& d, double r) {
  const double dd = dot(d, d);
  const double ad = dot(a, d);
  const double c0 = dot(a, a) - r * r;
  const double disc = std::max(ad * ad - dd * c0, 0.0);
  return (-ad + std::sqrt(disc)) / dd;
}

// Runs trial indices [0, n) on `threads` workers; results are stored by
// index so the aggregate is independent of the worker count.
template <typename Fn>
void parallel_trials(int n, int threads, Fn&& fn) {
  threads = std::max(1, std::min(threads, n));
  if (threads == 1) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(threads));
  for (int w = 0; w < threads; ++w) {
    pool.emplace_back([&fn, w, n, threads] {
      for (int i = w; i < n; i += threads) fn(i);
    });
  }
  for (auto& t : pool) t.join();
}

}  // namespace detail

// Simulates until the state leaves the closed ball or max_steps is hit.
// The exit point is linearly interpolated onto the sphere and the exit
// time proportionally; censoring (no exit) is an outcome, not an error.
inline ExitRecord first_exit(const LossLandscape& lc, const DiffusionField& df, const Vec& x0,
                             const SimParams& p, const DomainSpec& dom) {
  p.validate();
  dom.validate();
  check_point(x0, lc.dim);
  if (!(dist(x0, dom.center) < dom.radius)) throw ParameterError("first_exit: x0 must lie strictly inside U");

  ExitRecord rec;
  rec.seed = p.seed;
  Vec x = x0;
  Vec noise(x.size(), 0.0);
  for (long k = 1; k <= p.max_steps; ++k) {
    Vec y = em_step_counter(lc, df, x, p, k, noise);
    if (dist(y, dom.center) > dom.radius) {
      const Vec a = x - dom.center;
      const Vec d = y - x;
      const double alpha = detail::sphere_crossing(a, d, dom.radius);
      rec.exited = true;
      rec.exit_step = k;
      rec.exit_time = (static_cast<double>(k - 1) + alpha) * p.h;
      rec.exit_point = x + alpha * d;
      return rec;
    }
    if (norm(y) > kDivergenceRadius)
      throw DivergenceError("first_exit: trajectory escaped safety radius at step " + std::to_string(k));
    x = std::move(y);
  }
  rec.exited = false;
  rec.exit_step = p.max_steps;
  rec.exit_time = static_cast<double>(p.max_steps) * p.h;
  return rec;
}

struct ExitSummary {
  int trials = 0;
  int exited = 0;
  double censor_fraction = 1.0;
  double mean_time = 0.0;    // among exited trials
  double median_time = 0.0;  // among exited trials
  bool exponent_available = false;
  std::vector<double> exit_angles;  // atan2 about the center, exited trials in trial order
  std::vector<ExitRecord> records;  // all trials, in trial order
};

inline ExitSummary exit_ensemble(const LossLandscape& lc, const DiffusionField& df, const Vec& x0,
                                 const SimParams& p, const DomainSpec& dom, int trials,
                                 int threads = 1) {
  if (trials < 10) throw ParameterError("exit_ensemble: trials must be >= 10");
  ExitSummary s;
  s.trials = trials;
  s.records.resize(static_cast<std::size_t>(trials));
  detail::parallel_trials(trials, threads, [&](int i) {
    SimParams q = p;
    q.seed = derive_seed(p.seed, static_cast<std::uint64_t>(i));
    s.records[static_cast<std::size_t>(i)] = first_exit(lc, df, x0, q, dom);
  });

  std::vector<double> times;
  for (const ExitRecord& r : s.records) {
    if (!r.exited) continue;
    ++s.exited;
    times.push_back(r.exit_time);
    if (r.exit_point.size() == 2) {
      s.exit_angles.push_back(
          std::atan2(r.exit_point[1] - dom.center[1], r.exit_point[0] - dom.center[0]));
    }
  }
  s.censor_fraction = 1.0 - static_cast<double>(s.exited) / trials;
  if (s.exited > 0) {
    s.mean_time = std::accumulate(times.begin(), times.end(), 0.0) / static_cast<double>(times.size());
    std::vector<double> sorted = times;
    std::sort(sorted.begin(), sorted.end());
    const std::size_t m = sorted.size();
    s.median_time = m % 2 == 1 ? sorted[m / 2] : 0.5 * (sorted[m / 2 - 1] + sorted[m / 2]);
    s.exponent_available = true;
  }
  return s;
}

struct ExponentPoint {
  double eps = 0.0;
  double mean_exit_time = 0.0;
  double censor_fraction = 1.0;
  double eps_ln_mean = 0.0;  // eps * ln(mean exit time)
  bool included = false;     // excluded when censoring exceeds the threshold
  std::vector<double> exit_times;
};

struct ExponentResult {
  double slope = 0.0;      // estimate of min_{dU} phi_loc
  double intercept = 0.0;  // ln prefactor
  std::vector<ExponentPoint> per_eps;
  int points_used = 0;
};

namespace detail {

// Least squares of ln(mean tau) against 1/eps; the slope estimates the
// boundary minimum of the quasi-potential.
inline void fit_exponent(ExponentResult& out) {
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  int n = 0;
  for (const ExponentPoint& pt : out.per_eps) {
    if (!pt.included) continue;
    const double x = 1.0 / pt.eps;
    const double y = std::log(pt.mean_exit_time);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
    ++n;
  }
  out.points_used = n;
  if (n < 2) {
    out.slope = 0.0;
    out.intercept = 0.0;
    return;
  }
  const double denom = n * sxx - sx * sx;
  out.slope = (n * sxy - sx * sy) / denom;
  out.intercept = (sy - out.slope * sx) / n;
}

}  // namespace detail

inline ExponentResult exit_exponent(const LossLandscape& lc, const DiffusionField& df, const Vec& x0,
                                    const DomainSpec& dom, const std::vector<double>& eps_list,
                                    double h, long max_steps, int trials,
                                    std::uint64_t master_seed = 0xC0FFEE, int threads = 1,
                                    double censor_threshold = 0.2) {
  if (eps_list.size() < 3) throw ParameterError("exit_exponent: need at least 3 eps values");
  ExponentResult out;
  for (std::size_t ei = 0; ei < eps_list.size(); ++ei) {
    SimParams p;
    p.eps = eps_list[ei];
    p.h = h;
    p.max_steps = max_steps;
    p.seed = derive_seed(master_seed, 0xE0000000ULL + ei);
    const ExitSummary s = exit_ensemble(lc, df, x0, p, dom, trials, threads);
    ExponentPoint pt;
    pt.eps = p.eps;
    pt.mean_exit_time = s.mean_time;
    pt.censor_fraction = s.censor_fraction;
    pt.included = s.exited > 0 && s.censor_fraction <= censor_threshold;
    if (s.exited > 0) pt.eps_ln_mean = p.eps * std::log(s.mean_time);
    for (const ExitRecord& r : s.records)
      if (r.exited) pt.exit_times.push_back(r.exit_time);
    out.per_eps.push_back(std::move(pt));
  }
  detail::fit_exponent(out);
  return out;
}

// Bootstrap interval for the exponent slope: resample exit times within
// each eps with replacement and refit.
inline std::pair<double, double> bootstrap_slope_interval(const ExponentResult& base, int n_boot,
                                                          double coverage,
                                                          std::uint64_t seed = 0xB007) {
  std::vector<double> slopes;
  slopes.reserve(static_cast<std::size_t>(n_boot));
  for (int b = 0; b < n_boot; ++b) {
    ExponentResult r;
    for (std::size_t ei = 0; ei < base.per_eps.size(); ++ei) {
      const ExponentPoint& src = base.per_eps[ei];
      ExponentPoint pt;
      pt.eps = src.eps;
      pt.included = src.included;
      if (src.included && !src.exit_times.empty()) {
        const std::size_t n = src.exit_times.size();
        double sum = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
          const std::uint64_t bits =
              counter_hash(derive_seed(seed, static_cast<std::uint64_t>(b)), ei, i);
          sum += src.exit_times[bits % n];
        }
        pt.mean_exit_time = sum / static_cast<double>(n);
      } else {
        pt.included = false;
      }
      r.per_eps.push_back(std::move(pt));
    }
    detail::fit_exponent(r);
    if (r.points_used >= 2) slopes.push_back(r.slope);
  }
  std::sort(slopes.begin(), slopes.end());
  const double tail = 0.5 * (1.0 - coverage);
  const auto pick = [&](double q) {
    const std::size_t i = static_cast<std::size_t>(q * (static_cast<double>(slopes.size()) - 1.0));
    return slopes[i];
  };
  return {pick(tail), pick(1.0 - tail)};
}

struct CycleChainRecord {
  long cycles = 0;       // completed cycles (one tau per cycle)
  long exits = 0;        // cycles whose tau landed on the domain boundary
  double p_hat = 0.0;    // exits / cycles
  bool partial = false;  // max_steps exhausted mid-cycle
  long total_steps = 0;
};

// Alternating hitting scheme: sigma_n hits Gamma, tau_n hits gamma or dU.
// Cycles ending on dU restart from the domain center so every cycle is an
// escape attempt from the attractor.
inline CycleChainRecord cycle_chain(const LossLandscape& lc, const DiffusionField& df, const Vec& x0,
                                    const SimParams& p, const DomainSpec& dom, long n_cycles) {
  p.validate();
  dom.validate();
  check_point(x0, lc.dim);
  if (n_cycles < 1) throw ParameterError("cycle_chain: n_cycles must be >= 1");

  CycleChainRecord rec;
  Vec x = x0;
  Vec noise(x.size(), 0.0);
  bool seeking_Gamma = true;
  long k = 0;
  while (rec.cycles < n_cycles) {
    if (k >= p.max_steps) {
      rec.partial = true;
      break;
    }
    ++k;
    x = em_step_counter(lc, df, x, p, k, noise);
    const double r = dist(x, dom.center);
    if (seeking_Gamma) {
      if (r > dom.radius) {
        // jumped past Gamma straight out of U: count as an exiting cycle
        ++rec.cycles;
        ++rec.exits;
        x = dom.center;
        seeking_Gamma = true;
      } else if (r >= dom.Gamma_radius) {
        seeking_Gamma = false;
      }
    } else {
      if (r > dom.radius) {
        ++rec.cycles;
        ++rec.exits;
        x = dom.center;
        seeking_Gamma = true;
      } else if (r <= dom.gamma_radius) {
        ++rec.cycles;
        seeking_Gamma = true;
      }
    }
  }
  rec.total_steps = k;
  rec.p_hat = rec.cycles > 0 ? static_cast<double>(rec.exits) / static_cast<double>(rec.cycles) : 0.0;
  return rec;
}

}  // namespace quasipot
