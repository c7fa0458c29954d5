#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <vector>

#include "quasipot/dynamics.hpp"
#include "quasipot/escape.hpp"
#include "quasipot/landscape.hpp"
#include "quasipot/linalg.hpp"
#include "quasipot/rng.hpp"

namespace quasipot {

enum class Basin { B1, B2, Plateau };

// Uses the same closed-ball predicates as the two-well loss branches.
inline Basin classify_basin(const Vec& x) {
  if (in_well_1(x)) return Basin::B1;
  if (in_well_2(x)) return Basin::B2;
  return Basin::Plateau;
}

inline const Vec& well_center(int well) {
  static const Vec o1{-2.0, 0.0};
  static const Vec o2{2.0, 0.0};
  return well == 1 ? o1 : o2;
}

struct TwoWellRun {
  DiscretePath path;
  std::vector<Basin> labels;  // one per recorded state
};

// SGD on the two-well landscape with the piecewise diffusion field,
// with per-step basin labels.
inline TwoWellRun two_well_run(double mu1, double mu2, double eps, const Vec& x0,
                               const SimParams& p_in) {
  const LossLandscape lc = make_two_well();
  const DiffusionField df = make_two_well_diffusion(mu1, mu2);
  SimParams p = p_in;
  p.eps = eps;
  TwoWellRun run;
  run.path = simulate_sgd(lc, df, x0, p);
  run.labels.reserve(run.path.size());
  for (const Vec& x : run.path.points) run.labels.push_back(classify_basin(x));
  return run;
}

struct OccupationFractions {
  double b1 = 0.0;
  double b2 = 0.0;
  double plateau = 0.0;
};

inline OccupationFractions occupation_fractions(const std::vector<Basin>& labels) {
  if (labels.empty()) throw ParameterError("occupation_fractions: empty label sequence");
  OccupationFractions f;
  for (Basin b : labels) {
    if (b == Basin::B1) f.b1 += 1.0;
    else if (b == Basin::B2) f.b2 += 1.0;
    else f.plateau += 1.0;
  }
  const double n = static_cast<double>(labels.size());
  f.b1 /= n;
  f.b2 /= n;
  f.plateau /= n;
  return f;
}

struct TransitionStats {
  long n12 = 0;     // full transits: exit cycles that reach the other Gamma sphere
  long n21 = 0;
  long exits1 = 0;  // cycles that end on the basin boundary (whether or not they transit)
  long exits2 = 0;
  long cycles1 = 0;
  long cycles2 = 0;
  OccupationFractions occupation;
  double mean_plateau_steps12 = 0.0;  // plateau transit length of counted 1->2 transitions
  double mean_plateau_steps21 = 0.0;
  bool partial = false;
};

namespace detail {

// Beyond this distance from both well centers, a plateau excursion (a
// zero-drift random walk) is overwhelmingly unlikely to reach the other well
// within any affordable step budget; it is abandoned as a no-transition cycle
// so the chain keeps producing cycles instead of stalling on one walker.
inline constexpr double kLostExcursionRadius = 6.0;

// Cycle-chain transition counting for one basin of the two-well landscape.
// A transition is a cycle that ends on the basin boundary and then hits the
// other well's Gamma sphere before returning to its own; excursions that
// come back count as no-transition cycles.
inline void count_transitions(double mu1, double mu2, double eps, int from_well,
                              const SimParams& p_in, long n_cycles, const DomainSpec& dom_template,
                              long& cycles, long& exits, long& transitions,
                              double& mean_plateau_steps, bool& partial) {
  const LossLandscape lc = make_two_well();
  const DiffusionField df = make_two_well_diffusion(mu1, mu2);
  SimParams p = p_in;
  p.eps = eps;
  p.validate();

  const Vec& own = well_center(from_well);
  const Vec& other = well_center(from_well == 1 ? 2 : 1);
  DomainSpec dom = dom_template;
  dom.center = own;
  dom.validate();

  cycles = 0;
  exits = 0;
  transitions = 0;
  long plateau_steps_total = 0;
  Vec x = own;
  Vec noise(x.size(), 0.0);
  enum class Phase { SeekGamma, SeekTau, Plateau } phase = Phase::SeekGamma;
  long plateau_entry = 0;
  long k = 0;
  while (cycles < n_cycles) {
    if (k >= p.max_steps) {
      partial = true;
      break;
    }
    ++k;
    x = em_step_counter(lc, df, x, p, k, noise);
    const double r_own = dist(x, own);
    switch (phase) {
      case Phase::SeekGamma:
        if (r_own > dom.radius) {
          phase = Phase::Plateau;
          plateau_entry = k;
        } else if (r_own >= dom.Gamma_radius) {
          phase = Phase::SeekTau;
        }
        break;
      case Phase::SeekTau:
        if (r_own > dom.radius) {
          ++cycles;
          ++exits;
          phase = Phase::Plateau;
          plateau_entry = k;
        } else if (r_own <= dom.gamma_radius) {
          ++cycles;
          phase = Phase::SeekGamma;
        }
        break;
      case Phase::Plateau:
        if (dist(x, other) <= dom.Gamma_radius) {
          ++transitions;
          plateau_steps_total += k - plateau_entry;
          x = own;  // re-anchor for the next attempt
          phase = Phase::SeekGamma;
        } else if (r_own <= dom.Gamma_radius) {
          phase = Phase::SeekTau;  // excursion returned; the cycle was already counted
        } else if (r_own > kLostExcursionRadius && dist(x, other) > kLostExcursionRadius) {
          x = own;  // lost excursion: abandon and restart at the well bottom
          phase = Phase::SeekGamma;
        }
        break;
    }
  }
  mean_plateau_steps = transitions > 0 ? static_cast<double>(plateau_steps_total) /
                                             static_cast<double>(transitions)
                                       : 0.0;
}

}  // namespace detail

// Measures both directions of the two-well transition chain plus the
// occupation fractions of a free run with the same parameters.
inline TransitionStats measure_transition_stats(double mu1, double mu2, double eps,
                                                const SimParams& p, long n_cycles_per_basin,
                                                long occupation_steps = 0) {
  TransitionStats st;
  DomainSpec dom = DomainSpec::ball(well_center(1), 1.0);
  SimParams p1 = p;
  p1.seed = derive_seed(p.seed, 1);
  detail::count_transitions(mu1, mu2, eps, 1, p1, n_cycles_per_basin, dom, st.cycles1, st.exits1,
                            st.n12, st.mean_plateau_steps12, st.partial);
  SimParams p2 = p;
  p2.seed = derive_seed(p.seed, 2);
  detail::count_transitions(mu1, mu2, eps, 2, p2, n_cycles_per_basin, dom, st.cycles2, st.exits2,
                            st.n21, st.mean_plateau_steps21, st.partial);
  if (occupation_steps > 0) {
    SimParams po = p;
    po.seed = derive_seed(p.seed, 3);
    po.max_steps = occupation_steps;
    const TwoWellRun run = two_well_run(mu1, mu2, eps, well_center(1), po);
    st.occupation = occupation_fractions(run.labels);
  }
  return st;
}

struct TransitionProbabilities {
  double p12 = 0.0;
  double p21 = 0.0;
};

inline TransitionProbabilities transition_probabilities(const TransitionStats& st) {
  if (st.cycles1 <= 0 || st.cycles2 <= 0)
    throw ParameterError("transition_probabilities: zero attempts in a basin");
  return {static_cast<double>(st.n12) / static_cast<double>(st.cycles1),
          static_cast<double>(st.n21) / static_cast<double>(st.cycles2)};
}

struct StationaryEstimate {
  double rho1 = 0.0;
  double rho2 = 0.0;
};

// Stationary distribution of the two-state chain: rho1 = P21/(P12+P21).
inline StationaryEstimate stationary_estimate(double p12, double p21) {
  if (!(p12 + p21 > 0.0)) throw ParameterError("stationary_estimate: P12 + P21 must be positive");
  return {p21 / (p12 + p21), p12 / (p12 + p21)};
}

struct GridSpec {
  int nx = 80;
  int ny = 40;
  double x_lo = -4.0, x_hi = 4.0;
  double y_lo = -2.0, y_hi = 2.0;

  void validate() const {
    if (nx < 1 || ny < 1 || !(x_hi > x_lo) || !(y_hi > y_lo))
      throw ParameterError("grid: need nx, ny >= 1 and ordered bounds");
  }
};

struct PhiHistogram {
  GridSpec grid;
  std::vector<long> counts;       // nx * ny, row-major over y-major? x + nx*y
  std::vector<double> phi;        // NaN for empty bins (flagged, never imputed)
  long total_inside = 0;
  double nonempty_fraction = 0.0;

  long count_at(int ix, int iy) const { return counts[static_cast<std::size_t>(ix + grid.nx * iy)]; }
  double phi_at(int ix, int iy) const { return phi[static_cast<std::size_t>(ix + grid.nx * iy)]; }
  double x_center(int ix) const {
    return grid.x_lo + (ix + 0.5) * (grid.x_hi - grid.x_lo) / grid.nx;
  }
  double y_center(int iy) const {
    return grid.y_lo + (iy + 0.5) * (grid.y_hi - grid.y_lo) / grid.ny;
  }
};

// Occupation histogram turned into the potential diagnostic
// Phi = -(eps/2) ln(rho_hat), per nonempty bin.
inline PhiHistogram phi_histogram(const DiscretePath& path, const GridSpec& grid, double eps) {
  grid.validate();
  PhiHistogram h;
  h.grid = grid;
  h.counts.assign(static_cast<std::size_t>(grid.nx) * grid.ny, 0);
  for (const Vec& x : path.points) {
    if (x[0] < grid.x_lo || x[0] >= grid.x_hi || x[1] < grid.y_lo || x[1] >= grid.y_hi) continue;
    const int ix = static_cast<int>((x[0] - grid.x_lo) / (grid.x_hi - grid.x_lo) * grid.nx);
    const int iy = static_cast<int>((x[1] - grid.y_lo) / (grid.y_hi - grid.y_lo) * grid.ny);
    ++h.counts[static_cast<std::size_t>(ix + grid.nx * iy)];
    ++h.total_inside;
  }
  h.phi.assign(h.counts.size(), std::numeric_limits<double>::quiet_NaN());
  long nonempty = 0;
  for (std::size_t i = 0; i < h.counts.size(); ++i) {
    if (h.counts[i] == 0) continue;
    ++nonempty;
    const double rho = static_cast<double>(h.counts[i]) / static_cast<double>(h.total_inside);
    h.phi[i] = -0.5 * eps * std::log(rho);
  }
  h.nonempty_fraction = static_cast<double>(nonempty) / static_cast<double>(h.counts.size());
  return h;
}

}  // namespace quasipot
