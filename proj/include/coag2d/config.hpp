#pragma once

// INI-style experiment configuration. Every section and key is checked against
// a fixed vocabulary; anything unrecognised is a ValidationError.
//
//   [experiment]  kind, ensemble, seed, threads, out
//   [model]       alpha, d, gamma, M_max, radius
//   [initial]     mass1, mass2, ...   e.g. mass1 = bump(0,0,1,500); disc(2,0,1,10)
//   [sim]         dt, T, eps, rate_cap, variant, diffusion, eps_list, snapshot_times
//   [pde]         L, hx, dt, M_max, boundary, mode
//   [potential]   tau_list, eps_list, grid_n, R, k_radius
//   [stosszahlansatz] M1, M2, deltas, cells_per_delta
//
// Pair functions: constant(c) product(c) sum(c) power_product(c,p) tabulated(size,v...)
// Mass functions: constant(c) power_law(c,p) tabulated(v...)
// Radius: sqrt | constant(r)

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "coag2d/model.hpp"
#include "coag2d/pde.hpp"
#include "coag2d/potential.hpp"
#include "coag2d/sim.hpp"

namespace coag2d {

enum class ExperimentKind { kinetic_limit, stosszahlansatz, potential_sweep, pde_only, sim_only, mass_radius };

struct ModelParams {
  MassFunctions mf;
  std::string alpha_spec = "constant(1)";
  std::string d_spec = "constant(0.5)";
  std::string gamma_spec = "constant(1)";
  std::string radius_spec = "sqrt";
  KernelSpec ks = KernelSpec::default_bump();
  InitialData initial;
  std::vector<std::string> initial_specs;
  Mass M_max = 64;
};

struct ExperimentConfig {
  ExperimentKind kind = ExperimentKind::sim_only;
  int ensemble = 1;
  std::uint64_t seed = 1;
  int threads = 1;
  std::string out = "out";

  ModelParams model;
  SimConfig sim;
  std::vector<double> eps_list;
  std::vector<double> snapshot_times;
  PdeConfig pde;

  std::vector<double> tau_list;
  std::vector<double> potential_eps;
  PotentialGridSpec potential_grid;
  double k_radius = 1.0;

  Mass M1 = 1;
  Mass M2 = 1;
  std::vector<double> deltas;
  int cells_per_delta = 8;

  /// Canonical INI text of the fully resolved configuration; parsing it back
  /// gives an identical configuration.
  std::string resolved_text() const;
  /// FNV-1a of resolved_text().
  std::uint64_t hash() const;
};

std::string to_string(ExperimentKind k);
ExperimentKind experiment_kind_from_string(const std::string& s);

PairFunction parse_pair_function(const std::string& spec);
MassFunction parse_mass_function(const std::string& spec);
/// One or more `shape(cx,cy,scale,total)` separated by ';'.
std::vector<DensityProfile> parse_density(const std::string& spec);
std::vector<double> parse_list(const std::string& s);

ExperimentConfig parse_config(std::istream& is);
ExperimentConfig parse_config_string(const std::string& text);
ExperimentConfig load_config(const std::string& path);
/// Built-in defaults for a given experiment kind.
ExperimentConfig default_config(ExperimentKind kind);

}  // namespace coag2d
