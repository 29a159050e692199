#pragma once

// Seeded ensembles of particle runs, the matching PDE solve, and the reports
// built from them.

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <exception>
#include <mutex>
#include <string>
#include <thread>
#include <type_traits>
#include <vector>

#include "coag2d/config.hpp"
#include "coag2d/pde.hpp"
#include "coag2d/plot.hpp"
#include "coag2d/potential.hpp"
#include "coag2d/sim.hpp"

namespace coag2d {

inline constexpr const char* kVersion = "coag2d 0.1.0";

/// Sample mean and standard error; the std-err is undefined (NaN) for one value.
struct Stat {
  double mean = 0.0;
  double sd = 0.0;
  double stderr_ = 0.0;
  std::size_t n = 0;

  bool has_stderr() const { return n > 1; }
  double ci95_lo() const { return mean - 1.96 * stderr_; }
  double ci95_hi() const { return mean + 1.96 * stderr_; }
};

/// Order-independent: values are sorted before summation.
Stat summarize(std::vector<double> values);

/// True when each mean is at most the previous one plus 3 combined std-errs.
bool nonincreasing_3sigma(const std::vector<Stat>& seq);

/// Runs f(i) for i in [0, n) on `threads` workers and returns results in index
/// order. The first exception thrown by any task is rethrown.
template <class F>
auto parallel_map(std::size_t n, int threads, F f) -> std::vector<decltype(f(std::size_t{}))> {
  using R = decltype(f(std::size_t{}));
  std::vector<R> out(n);
  std::atomic<std::size_t> next{0};
  std::exception_ptr err;
  std::mutex mu;
  auto worker = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= n) return;
      try {
        out[i] = f(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(mu);
        if (!err) err = std::current_exception();
        next = n;
      }
    }
  };
  const int k = std::max(1, std::min<int>(threads, int(n)));
  if (k == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < k; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  if (err) std::rethrow_exception(err);
  return out;
}

struct Provenance {
  std::string config_text;
  std::uint64_t config_hash = 0;
  std::vector<std::uint64_t> seeds;
  std::string version = kVersion;
  int threads = 1;
};

Provenance make_provenance(const ExperimentConfig& cfg);
std::vector<std::uint64_t> ensemble_seeds(const ExperimentConfig& cfg);

struct BatteryItem {
  std::string name;
  TestFunction J;
};

/// Constant 1, two translated smooth bumps and a coordinate-weighted bump, all
/// sized by the length scale of the initial data.
std::vector<BatteryItem> test_battery(double length_scale);
double initial_length_scale(const InitialData& id);

struct KineticLimitLevel {
  double eps = 0.0;
  std::size_t N = 0;
  std::size_t runs = 0;
  /// One entry per (battery item, mass, time), in that nesting order.
  std::vector<std::string> item_labels;
  std::vector<Stat> item_errors;
  /// Per-run mean of the battery errors, summarized over the ensemble.
  Stat battery_error;
  std::vector<double> times;
  std::vector<Stat> M0_sim;
  std::vector<double> M0_pde;
  std::vector<bool> M0_agree;
  /// Stosszahlansatz: per delta, E|Err|, and the two integrals separately.
  std::vector<Stat> err_abs;
  std::vector<Stat> q_integral;
  std::vector<Stat> rhs_integral;
  double wall_seconds = 0.0;
};

struct KineticLimitReport {
  std::vector<KineticLimitLevel> levels;
  std::vector<double> deltas;
  bool weak_error_trend = false;
  bool M0_within_3se = false;
  std::vector<bool> err_trend_per_delta;
  bool err_trend = false;
  Provenance provenance;

  std::string to_json() const;
};

/// One ensemble per eps in cfg.eps_list (shared between the weak-error and
/// the Stosszahlansatz diagnostics) plus one PDE solve.
KineticLimitReport run_kinetic_limit(const ExperimentConfig& cfg);
/// Same ensembles; kept as a separate entry point for the CLI verb.
KineticLimitReport run_stosszahlansatz(const ExperimentConfig& cfg);

/// Planar PDE trajectory for the kinetic-limit comparison.
std::vector<MassDensityField> kinetic_limit_pde(const ExperimentConfig& cfg);

struct CostProjection {
  double eps = 0.0;
  std::size_t N = 0;
  double seconds_per_particle_substep = 0.0;
  double substeps_per_unit_time = 0.0;
  double particle_substeps = 0.0;
  double projected_seconds = 0.0;
};

/// Times a short pilot trajectory per eps and projects the cost of the full
/// ensemble, integrating the particle count along the PDE's M0(t).
std::vector<CostProjection> project_kinetic_limit_cost(const ExperimentConfig& cfg,
                                                       double pilot_seconds = 2.0);

struct PotentialSweepReport {
  std::vector<PotentialLimitReport> reports;
  /// Relative tolerance on the extrapolated limits.
  double tolerance = 0.01;
  bool center_ok = false;
  bool lambda_ok = false;
  bool lambda_range_ok = false;
  bool fit_ok = false;
  bool factor_chain_ok = false;

  bool ok() const { return center_ok && lambda_ok && lambda_range_ok && fit_ok && factor_chain_ok; }
  /// Rows tau,eps,log_eps,sup_error,lambda_eps,factor
  std::string csv() const;
  std::string to_json() const;
  std::vector<NamedFigure> figures() const;
};

PotentialSweepReport run_potential_sweep(const ExperimentConfig& cfg);

struct MassRadiusReport {
  Stat standard;
  Stat mass_radius;
  bool overlap = false;
  double T = 0.0;
  Provenance provenance;

  std::string to_json() const;
};

/// Events per unit time for matched-seed ensembles of both variants.
MassRadiusReport run_mass_radius_comparison(const ExperimentConfig& cfg);

std::vector<NamedFigure> kinetic_limit_figures(const KineticLimitReport& rep);

}  // namespace coag2d
