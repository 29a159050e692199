#pragma once

// Microscopic dynamics: Brownian particles that coagulate at rate
// eps^-2 |log eps|^-1 V((x_i - x_j)/eps) alpha(m_i, m_j) per ordered pair.

#include <functional>
#include <map>
#include <utility>
#include <vector>

#include "coag2d/model.hpp"

namespace coag2d {

enum class Variant { standard, mass_radius };

struct SimConfig {
  double dt = 1e-3;
  double T = 1.0;
  double eps = 1e-3;
  /// Bound on the per-substep firing probability of any ordered pair.
  double rate_cap = 0.1;
  std::uint64_t seed = 0;
  Variant variant = Variant::standard;
  /// Off only for frozen-pair tests.
  bool diffusion = true;

  void validate() const;
};

struct EventRecord {
  double t = 0.0;
  ParticleId i = 0;
  ParticleId j = 0;
  Mass m_i = 0;
  Mass m_j = 0;
  /// True when the merged particle sits at x_i.
  bool kept_i = true;

  friend bool operator==(const EventRecord&, const EventRecord&) = default;
};

using EventLog = std::vector<EventRecord>;

/// g_n = |log eps|^-1 sum_{m_i = n} delta_{x_i}
struct EmpiricalMeasure {
  double time = 0.0;
  double weight = 0.0;
  std::map<Mass, std::vector<Vec2>> points;

  double total(Mass n) const;
};

using TestFunction = std::function<double(Vec2)>;

/// Uniform grid of square buckets. Candidate pairs are all pairs in the same or
/// adjacent buckets, so every pair closer than the bucket side is included.
class CellIndex {
 public:
  CellIndex(const Configuration& cfg, double cell_size);

  double cell_size() const { return cell_size_; }
  std::pair<std::int64_t, std::int64_t> cell_of(std::size_t slot) const { return cell_[slot]; }
  /// Ordered candidate pairs (i, j), i != j, as configuration slots.
  std::vector<std::pair<std::size_t, std::size_t>> candidate_pairs() const;
  /// Calls f(i, j) once per unordered candidate pair with i < j.
  void for_each_pair(const std::function<void(std::size_t, std::size_t)>& f) const;

 private:
  double cell_size_;
  std::vector<std::pair<std::int64_t, std::int64_t>> cell_;
  /// Slots sorted by cell, and the [begin, end) range of each occupied cell.
  std::vector<std::size_t> order_;
  std::vector<std::pair<std::pair<std::int64_t, std::int64_t>, std::pair<std::size_t, std::size_t>>>
      ranges_;
};

CellIndex build_cell_index(const Configuration& cfg, double interaction_diameter);

/// Adds an independent N(0, 2 d(m) dt) displacement to each coordinate.
void brownian_step(Configuration& cfg, double dt, const MassFunctions& mf, Rng& rng);

/// Range scale s(m_i, m_j): 1, or r(m_i) + r(m_j) for the mass_radius variant.
double range_scale(Mass mi, Mass mj, const KernelSpec& ks, Variant variant);

/// Ordered-pair rate eps^-2 |log eps|^-1 V((x_i-x_j)/eps) alpha(m_i, m_j); the
/// mass_radius variant replaces V by s^-2 V(./s).
double pair_rate(const Particle& pi, const Particle& pj, double eps, const KernelSpec& ks,
                 const MassFunctions& mf, Variant variant = Variant::standard);

/// Merges the particles labelled i and j; the new particle sits at x_i with
/// probability m_i / (m_i + m_j). Throws std::out_of_range if either is dead.
EventRecord coagulate(Configuration& cfg, ParticleId i, ParticleId j, Rng& rng);

/// Integrand accumulated over every substep: the Q functional restricted to
/// (M1, M2) pairs, and its time integral.
struct QProbe {
  TestFunction J;
  TestFunction Jbar;
  Mass M1 = 1;
  Mass M2 = 1;
  double integral = 0.0;
};

/// Holds a configuration together with a Verlet pair list that survives across
/// substeps until particles have moved by half the skin or coagulated.
class Simulator {
 public:
  Simulator(Configuration cfg, const SimConfig& sim, KernelSpec ks, MassFunctions mf);

  /// Advances by h (default sim.dt), subdividing to respect the rate cap.
  EventLog step(Rng& rng);
  EventLog step(double h, Rng& rng);

  const Configuration& configuration() const { return cfg_; }
  Configuration& configuration() { return cfg_; }
  const SimConfig& config() const { return sim_; }
  /// Number of substeps used for an outer step of length h at the current state.
  std::size_t substeps_for(double h) const;
  std::size_t total_substeps() const { return total_substeps_; }
  std::size_t rebuilds() const { return rebuilds_; }

  void attach_probe(QProbe* probe) { probe_ = probe; }

 private:
  void rebuild();
  void refresh_bounds();
  void substep(double h, Rng& rng, EventLog& log);

  Configuration cfg_;
  SimConfig sim_;
  KernelSpec ks_;
  MassFunctions mf_;
  double L_;
  double rate_bound_ = 0.0;
  double reach_ = 0.0;
  double skin_ = 0.0;
  double max_d_ = 0.0;
  std::vector<Vec2> ref_pos_;
  std::vector<std::pair<std::uint32_t, std::uint32_t>> pairs_;
  bool dirty_ = true;
  std::size_t total_substeps_ = 0;
  std::size_t rebuilds_ = 0;
  QProbe* probe_ = nullptr;
};

/// One outer step of length sim.dt on `cfg` in place.
EventLog step(Configuration& cfg, const SimConfig& sim, const KernelSpec& ks,
              const MassFunctions& mf, Rng& rng);

EmpiricalMeasure empirical_measure(const Configuration& cfg, double eps);

/// |log eps|^-1 sum_{m_i = n} J(x_i)
double integrate_test_function(const EmpiricalMeasure& em, const TestFunction& J, Mass n);

/// Q = |log eps|^-2 sum over ordered (i, j) with m_i = M1, m_j = M2 of
///     alpha(m_i, m_j) V^eps(x_i - x_j) J(x_i) Jbar(x_j),   V^eps(x) = eps^-2 V(x/eps).
double q_functional(const Configuration& cfg, double eps, const TestFunction& J,
                    const TestFunction& Jbar, Mass M1, Mass M2, const KernelSpec& ks,
                    const MassFunctions& mf);

/// beta * integral of J Jbar (eta_delta * g_M1)(eta_delta * g_M2) by a lattice
/// quadrature with `cells_per_delta` nodes per delta (must be >= 8).
double stosszahlansatz_rhs(const EmpiricalMeasure& em, const MollifierSpec& mol,
                           const TestFunction& J, const TestFunction& Jbar, Mass M1, Mass M2,
                           double beta, int cells_per_delta = 8);

struct StosszahlansatzProbe {
  TestFunction J;
  TestFunction Jbar;
  Mass M1 = 1;
  Mass M2 = 1;
  std::vector<double> deltas;
  double beta = 0.0;
  int cells_per_delta = 8;
};

struct Snapshot {
  double t = 0.0;
  Configuration cfg;
};

struct RunRecord {
  std::uint64_t seed = 0;
  std::size_t initial_count = 0;
  Mass initial_mass = 0;
  std::vector<Snapshot> snapshots;
  EventLog events;
  /// Time series sampled at every outer step: t, integral of Q, and one
  /// integral of the mollified right-hand side per delta.
  std::vector<double> probe_t;
  std::vector<double> q_integral;
  std::vector<std::vector<double>> rhs_integral;
  Configuration final_cfg;
  std::size_t substeps = 0;
};

/// Samples the initial configuration from `id` and integrates to sim.T. Outer
/// steps are shortened so that every requested snapshot time is hit exactly.
RunRecord run(const SimConfig& sim, const InitialData& id, const KernelSpec& ks,
              const MassFunctions& mf, const std::vector<double>& snapshot_times,
              const StosszahlansatzProbe* probe = nullptr);

/// As above from a given initial configuration.
RunRecord run_from(Configuration initial, const SimConfig& sim, const KernelSpec& ks,
                   const MassFunctions& mf, const std::vector<double>& snapshot_times,
                   const StosszahlansatzProbe* probe = nullptr);

}  // namespace coag2d
