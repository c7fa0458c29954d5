#pragma once

#include <cmath>
#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"
#include "quasipot/config.hpp"
#include "quasipot/dynamics.hpp"
#include "quasipot/escape.hpp"
#include "quasipot/io.hpp"
#include "quasipot/landscape.hpp"
#include "quasipot/metastable.hpp"
#include "quasipot/quasipotential.hpp"
#include "quasipot/rng.hpp"

namespace quasipot {

// Exit status categories for the CLI.
enum ExitStatus : int {
  kOk = 0,
  kConfigError = 2,
  kComputeError = 3,
  kIoError = 4,
};

struct RunResult {
  int status = kOk;
  std::string summary_line;
  std::vector<std::string> files;
};

namespace detail {

inline std::string path_csv(const DiscretePath& path, long record_every, bool with_time) {
  std::string out;
  if (with_time) {
    out = "step,t";
    for (std::size_t k = 0; k < path.points.front().size(); ++k)
      out += ",x" + std::to_string(k + 1);
    out += "\n";
    for (std::size_t i = 0; i < path.size(); ++i) {
      if (record_every > 1 && i % static_cast<std::size_t>(record_every) != 0 && i + 1 != path.size())
        continue;
      out += std::to_string(i) + "," + fmt(path.times[i]);
      for (double v : path.points[i]) out += "," + fmt(v);
      out += "\n";
    }
  } else {
    for (std::size_t k = 0; k < path.points.front().size(); ++k)
      out += std::string(k == 0 ? "" : ",") + "x" + std::to_string(k + 1);
    out += "\n";
    for (const Vec& p : path.points) {
      for (std::size_t k = 0; k < p.size(); ++k) out += std::string(k == 0 ? "" : ",") + fmt(p[k]);
      out += "\n";
    }
  }
  return out;
}

inline std::filesystem::path ensure_out_dir(const ExperimentConfig& c) {
  std::filesystem::path dir(c.out_dir);
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create output directory " + dir.string() + ": " + ec.message());
  return dir;
}

inline DomainSpec domain_from_config(const ExperimentConfig& c) {
  DomainSpec dom = DomainSpec::ball(c.domain_center, c.domain_radius);
  if (c.gamma_radius) dom.gamma_radius = *c.gamma_radius;
  if (c.Gamma_radius) dom.Gamma_radius = *c.Gamma_radius;
  dom.validate();
  return dom;
}

inline SimParams sim_from_config(const ExperimentConfig& c) {
  SimParams p;
  p.eps = c.eps;
  p.h = c.h;
  p.max_steps = c.max_steps;
  p.seed = c.seed;
  p.validate();
  return p;
}

inline RunResult run_simulate(const ExperimentConfig& c) {
  const LossLandscape lc = resolve_landscape(c.landscape_id);
  const DiffusionField df = resolve_diffusion(c.diffusion_id, lc.dim);
  const SimParams p = sim_from_config(c);
  const DiscretePath path = simulate_sgd(lc, df, c.start, p);
  const auto dir = ensure_out_dir(c);
  atomic_write(dir / "trajectory.csv", path_csv(path, c.record_every, true));
  const Vec& last = path.points.back();
  std::string summary = "command = simulate\nsteps = " + std::to_string(p.max_steps) +
                        "\nfinal_loss = " + fmt(lc.loss(last)) + "\nfinal_point =";
  for (double v : last) summary += " " + fmt(v);
  summary += "\n";
  atomic_write(dir / "summary.txt", summary);
  RunResult r;
  r.summary_line = "simulate: " + std::to_string(p.max_steps) + " steps, final loss " +
                   fmt(lc.loss(last));
  r.files = {(dir / "trajectory.csv").string(), (dir / "summary.txt").string()};
  return r;
}

inline RunResult run_exit_time(const ExperimentConfig& c) {
  const LossLandscape lc = resolve_landscape(c.landscape_id);
  const DiffusionField df = resolve_diffusion(c.diffusion_id, lc.dim);
  const SimParams p = sim_from_config(c);
  const DomainSpec dom = domain_from_config(c);
  const ExitSummary s = exit_ensemble(lc, df, c.start, p, dom, c.trials, c.threads);

  std::string csv = "trial,seed,exited,exit_step,exit_time";
  for (int k = 0; k < lc.dim; ++k) csv += ",exit_x" + std::to_string(k + 1);
  csv += "\n";
  for (std::size_t i = 0; i < s.records.size(); ++i) {
    const ExitRecord& rec = s.records[i];
    csv += std::to_string(i) + "," + std::to_string(rec.seed) + "," +
           (rec.exited ? "1" : "0") + "," + std::to_string(rec.exit_step) + "," +
           fmt(rec.exit_time);
    for (int k = 0; k < lc.dim; ++k)
      csv += "," + (rec.exited ? fmt(rec.exit_point[static_cast<std::size_t>(k)]) : std::string("nan"));
    csv += "\n";
  }

  nlohmann::json j;
  j["trials"] = s.trials;
  j["exited"] = s.exited;
  j["censor_fraction"] = s.censor_fraction;
  j["mean_exit_time"] = s.exited > 0 ? s.mean_time : 0.0;
  j["median_exit_time"] = s.exited > 0 ? s.median_time : 0.0;
  j["exponent_available"] = s.exponent_available;
  j["exponent"] = s.exponent_available ? c.eps * std::log(s.mean_time) : 0.0;

  const auto dir = ensure_out_dir(c);
  atomic_write(dir / "trials.csv", csv);
  atomic_write(dir / "summary.json", j.dump(2) + "\n");
  std::string summary = "command = exit-time\n";
  summary += "exited = " + std::to_string(s.exited) + " / " + std::to_string(s.trials) + "\n";
  summary += "censor_fraction = " + fmt(s.censor_fraction) + "\n";
  summary += "mean_exit_time = " + fmt(s.mean_time) + "\n";
  summary += "median_exit_time = " + fmt(s.median_time) + "\n";
  summary += "exponent = " + fmt(s.exponent_available ? c.eps * std::log(s.mean_time) : 0.0) + "\n";
  atomic_write(dir / "summary.txt", summary);

  RunResult r;
  r.summary_line = "exit-time: " + std::to_string(s.exited) + "/" + std::to_string(s.trials) +
                   " exited, mean " + fmt(s.mean_time) + ", censoring " + fmt(s.censor_fraction);
  r.files = {(dir / "trials.csv").string(), (dir / "summary.json").string(),
             (dir / "summary.txt").string()};
  return r;
}

inline RunResult run_mam(const ExperimentConfig& c) {
  const LossLandscape lc = resolve_landscape(c.landscape_id);
  const DiffusionField df = resolve_diffusion(c.diffusion_id, lc.dim);
  MamOptions opts;
  opts.max_iters = c.mam_max_iters;
  opts.step_size = c.mam_step_size;
  opts.tol = c.mam_tol;
  const QuasiPotentialResult res = mam_minimize(lc, df, c.start, c.mam_end, c.mam_n_points, opts);
  const auto dir = ensure_out_dir(c);
  atomic_write(dir / "path.csv", path_csv(res.path, 1, false));
  const std::string line = fmt(res.value) + "," + std::to_string(res.iterations) + "," +
                           (res.converged ? "true" : "false");
  atomic_write(dir / "summary.txt", "command = mam\nvalue,iterations,converged = " + line + "\n");
  RunResult r;
  r.summary_line = "mam: " + line;
  r.files = {(dir / "path.csv").string(), (dir / "summary.txt").string()};
  return r;
}

inline RunResult run_hj_check(const ExperimentConfig& c) {
  const LossLandscape lc = resolve_landscape(c.landscape_id);
  const DiffusionField df = resolve_diffusion(c.diffusion_id, lc.dim);
  CandidatePotential cand;
  if (c.hj_candidate == "example31") {
    const double mu = c.hj_mu;
    cand.phi = [mu](const Vec& x) { return analytic_qp_example31(x, mu); };
    cand.grad_phi = [mu](const Vec& x) {
      return Vec{4.0 * x[0] / mu, 4.0 * x[1] / (2.0 - mu)};
    };
  } else if (c.hj_candidate == "2f") {
    cand.phi = [lc](const Vec& x) { return 2.0 * lc.loss(x); };
    cand.grad_phi = [lc](const Vec& x) { return 2.0 * lc.grad(x); };
  } else {
    throw ConfigError("hj.candidate: unknown candidate '" + c.hj_candidate + "'");
  }
  // uniform samples in the domain ball
  double max_abs = 0.0;
  for (int i = 0; i < c.hj_samples; ++i) {
    Vec x(static_cast<std::size_t>(lc.dim));
    double r2;
    std::uint64_t lane = 0;
    do {
      r2 = 0.0;
      for (std::size_t k = 0; k < x.size(); ++k) {
        x[k] = c.domain_radius *
               (2.0 * uniform_open(counter_hash(c.seed, static_cast<std::uint64_t>(i), lane++)) - 1.0);
        r2 += x[k] * x[k];
      }
    } while (r2 > c.domain_radius * c.domain_radius);
    for (std::size_t k = 0; k < x.size(); ++k) x[k] += c.domain_center[k];
    max_abs = std::max(max_abs, std::abs(hj_residual(cand, lc, df, x)));
  }
  const auto dir = ensure_out_dir(c);
  atomic_write(dir / "summary.txt", "command = hj-check\nsamples = " + std::to_string(c.hj_samples) +
                                        "\nmax_abs_residual = " + fmt(max_abs) + "\n");
  RunResult r;
  r.summary_line = "hj-check: max |residual| = " + fmt(max_abs) + " over " +
                   std::to_string(c.hj_samples) + " points";
  r.files = {(dir / "summary.txt").string()};
  return r;
}

inline RunResult run_two_well(const ExperimentConfig& c) {
  const SimParams p = sim_from_config(c);
  const TwoWellRun run = two_well_run(c.tw_mu1, c.tw_mu2, c.eps, c.start, p);
  const auto dir = ensure_out_dir(c);
  atomic_write(dir / "trajectory.csv", path_csv(run.path, c.record_every, true));

  // label run-length encoding
  std::string labels_csv = "label,start_step,end_step\n";
  const auto label_name = [](Basin b) {
    return b == Basin::B1 ? "B1" : b == Basin::B2 ? "B2" : "plateau";
  };
  std::size_t run_start = 0;
  for (std::size_t i = 1; i <= run.labels.size(); ++i) {
    if (i == run.labels.size() || run.labels[i] != run.labels[run_start]) {
      labels_csv += std::string(label_name(run.labels[run_start])) + "," + std::to_string(run_start) +
                    "," + std::to_string(i - 1) + "\n";
      run_start = i;
    }
  }
  atomic_write(dir / "labels.csv", labels_csv);

  const OccupationFractions occ = occupation_fractions(run.labels);
  std::string summary = "command = two-well\n";
  summary += "occupation.b1 = " + fmt(occ.b1) + "\n";
  summary += "occupation.b2 = " + fmt(occ.b2) + "\n";
  summary += "occupation.plateau = " + fmt(occ.plateau) + "\n";

  if (c.tw_cycles > 0) {
    const TransitionStats st = measure_transition_stats(c.tw_mu1, c.tw_mu2, c.eps, p, c.tw_cycles);
    const TransitionProbabilities tp = transition_probabilities(st);
    const StationaryEstimate se = stationary_estimate(tp.p12, tp.p21);
    summary += "transitions.n12 = " + std::to_string(st.n12) + "\n";
    summary += "transitions.n21 = " + std::to_string(st.n21) + "\n";
    summary += "transitions.exits1 = " + std::to_string(st.exits1) + "\n";
    summary += "transitions.exits2 = " + std::to_string(st.exits2) + "\n";
    summary += "transitions.cycles1 = " + std::to_string(st.cycles1) + "\n";
    summary += "transitions.cycles2 = " + std::to_string(st.cycles2) + "\n";
    summary += "transitions.p12 = " + fmt(tp.p12) + "\n";
    summary += "transitions.p21 = " + fmt(tp.p21) + "\n";
    summary += "stationary.rho1 = " + fmt(se.rho1) + "\n";
    summary += "stationary.rho2 = " + fmt(se.rho2) + "\n";
  }
  atomic_write(dir / "summary.txt", summary);

  GridSpec grid;
  grid.nx = c.grid_nx;
  grid.ny = c.grid_ny;
  grid.x_lo = c.grid_x[0];
  grid.x_hi = c.grid_x[1];
  grid.y_lo = c.grid_y[0];
  grid.y_hi = c.grid_y[1];
  const PhiHistogram h = phi_histogram(run.path, grid, c.eps);
  std::string phi_csv = "x1_center,x2_center,count,phi\n";
  for (int iy = 0; iy < grid.ny; ++iy)
    for (int ix = 0; ix < grid.nx; ++ix) {
      phi_csv += fmt(h.x_center(ix)) + "," + fmt(h.y_center(iy)) + "," +
                 std::to_string(h.count_at(ix, iy)) + ",";
      phi_csv += h.count_at(ix, iy) > 0 ? fmt(h.phi_at(ix, iy)) : std::string("nan");
      phi_csv += "\n";
    }
  atomic_write(dir / "phi_grid.csv", phi_csv);

  RunResult r;
  r.summary_line = "two-well: occupation b1 " + fmt(occ.b1) + ", b2 " + fmt(occ.b2) +
                   ", plateau " + fmt(occ.plateau);
  r.files = {(dir / "trajectory.csv").string(), (dir / "labels.csv").string(),
             (dir / "summary.txt").string(), (dir / "phi_grid.csv").string()};
  return r;
}

inline RunResult run_diffusion_estimate(const ExperimentConfig& c) {
  // Synthetic finite sum: n shifted quadratics with seeded centers; the
  // exact mini-batch covariance is evaluated at estimate.point.
  const int n = c.de_n;
  const int m = c.de_m;
  const Vec x = c.de_point;
  const int d = static_cast<int>(x.size());
  FiniteSumLoss fs;
  fs.n = n;
  fs.batch_size = m;
  for (int i = 0; i < n; ++i) {
    Vec a(static_cast<std::size_t>(d));
    for (int k = 0; k < d; ++k)
      a[static_cast<std::size_t>(k)] = 2.0 * uniform_open(counter_hash(c.seed, static_cast<std::uint64_t>(i),
                                                                       static_cast<std::uint64_t>(k))) -
                                       1.0;
    fs.losses.push_back([a](const Vec& y) {
      double s = 0.0;
      for (std::size_t k = 0; k < y.size(); ++k) s += (y[k] - a[k]) * (y[k] - a[k]);
      return s;
    });
    fs.grads.push_back([a](const Vec& y) {
      Vec g(y.size());
      for (std::size_t k = 0; k < y.size(); ++k) g[k] = 2.0 * (y[k] - a[k]);
      return g;
    });
  }
  const Mat cov = minibatch_diffusion(fs, x);
  std::string csv;
  for (int i = 0; i < d; ++i) {
    for (int j = 0; j < d; ++j) csv += std::string(j == 0 ? "" : ",") + fmt(cov(i, j));
    csv += "\n";
  }
  const auto dir = ensure_out_dir(c);
  atomic_write(dir / "diffusion.csv", csv);
  atomic_write(dir / "summary.txt",
               "command = diffusion-estimate\nn = " + std::to_string(n) + "\nm = " +
                   std::to_string(m) + "\ntrace = " + fmt(cov.trace()) + "\n");
  RunResult r;
  r.summary_line = "diffusion-estimate: n=" + std::to_string(n) + " m=" + std::to_string(m) +
                   " trace " + fmt(cov.trace());
  r.files = {(dir / "diffusion.csv").string(), (dir / "summary.txt").string()};
  return r;
}

}  // namespace detail

// Dispatches a validated configuration to the owning module. Throws
// ConfigError / ParameterError for bad inputs; other exceptions indicate
// compute or IO failures.
inline RunResult run_experiment(const ExperimentConfig& c) {
  if (c.command == "simulate") return detail::run_simulate(c);
  if (c.command == "exit-time") return detail::run_exit_time(c);
  if (c.command == "mam") return detail::run_mam(c);
  if (c.command == "hj-check") return detail::run_hj_check(c);
  if (c.command == "two-well") return detail::run_two_well(c);
  if (c.command == "diffusion-estimate") return detail::run_diffusion_estimate(c);
  throw ConfigError("unknown command '" + c.command + "'");
}

}  // namespace quasipot
