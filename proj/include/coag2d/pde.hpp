#pragma once

// Finite-volume solver for the coagulation-diffusion system
//   d/dt f_n = d(n) Lap f_n + Q1^n(f) - Q2^n(f),
//   Q1^n = sum_{m=1}^{n-1} beta(m, n-m) f_m f_{n-m},  Q2^n = 2 f_n sum_m beta(m, n) f_m,
// truncated at M_max with the mass carried past M_max tracked as overflow.

#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "coag2d/model.hpp"
#include "coag2d/sim.hpp"

namespace coag2d {

enum class Boundary { neumann, periodic };
enum class PdeMode { homogeneous, planar };

struct PdeConfig {
  /// Half-width of the square domain [-L, L]^2.
  double L = 4.0;
  double hx = 0.125;
  double dt = 1e-3;
  Mass M_max = 64;
  Boundary boundary = Boundary::neumann;
  PdeMode mode = PdeMode::planar;

  int cells_per_side() const;
  /// Throws ValidationError on inconsistent geometry or a CFL violation.
  void validate(const MassFunctions& mf) const;
};

class BetaTable {
 public:
  BetaTable(const MassFunctions& mf, Mass M_max);
  static BetaTable constant(double b, Mass M_max);

  double operator()(Mass n, Mass m) const {
    return table_[std::size_t(n - 1) * std::size_t(M_) + std::size_t(m - 1)];
  }
  Mass M_max() const { return M_; }
  bool zero() const;

 private:
  BetaTable() = default;
  Mass M_ = 0;
  std::vector<double> table_;
};

/// Cell-centred values f_n on an nx x nx grid of side hx covering [-L, L]^2.
/// The homogeneous mode uses a single cell of unit area.
struct MassDensityField {
  double L = 0.5;
  double hx = 1.0;
  int nx = 1;
  Mass M_max = 1;
  double t = 0.0;
  /// Mass carried past M_max so far, integrated over space.
  double overflow_mass = 0.0;
  /// values[(n-1) * nx * nx + iy * nx + ix]
  std::vector<double> values;

  static MassDensityField zeros(double L, double hx, int nx, Mass M_max);
  /// Single-cell field with f_n = c[n-1].
  static MassDensityField homogeneous(std::vector<double> c, Mass M_max);

  std::size_t cells() const { return std::size_t(nx) * std::size_t(nx); }
  std::span<double> f(Mass n);
  std::span<const double> f(Mass n) const;
  Vec2 center(int ix, int iy) const;
  double cell_area() const { return hx * hx; }

  /// integral of f_n
  double integral(Mass n) const;
  /// M0 = sum_n integral f_n
  double M0() const;
  /// sum_n n integral f_n, excluding overflow.
  double total_mass() const;
  double min_value() const;
};

MassDensityField field_from_initial_data(const InitialData& id, const PdeConfig& cfg);

std::vector<double> gain_term(const MassDensityField& f, Mass n, const BetaTable& beta);
std::vector<double> loss_term(const MassDensityField& f, Mass n, const BetaTable& beta);

/// Rate at which mass leaves [1, M_max]:
/// integral of sum_{a,b <= M_max, a+b > M_max} (a+b) beta(a,b) f_a f_b.
double overflow_flux(const MassDensityField& f, const BetaTable& beta);

/// Explicit Euler reaction step, split into equal substeps so that
/// h * 2 sum_m beta(m, n) f_m <= 1/2 everywhere.
MassDensityField step_reaction(const MassDensityField& f, double dt, const BetaTable& beta);

/// Explicit 5-point heat step f_n += dt d(n) Lap_h f_n with zero-flux or
/// periodic boundaries. Throws ValidationError if dt > hx^2 / (4 max d).
MassDensityField step_diffusion(const MassDensityField& f, double dt, const MassFunctions& mf,
                                Boundary boundary);

/// Strang splitting D(dt/2) R(dt) D(dt/2); each stage uses the two-stage
/// strong-stability-preserving Runge-Kutta scheme built from the Euler steps above.
/// Returns one field per requested time.
std::vector<MassDensityField> solve(const MassDensityField& f0, const PdeConfig& cfg,
                                    const MassFunctions& mf, const BetaTable& beta, double T,
                                    const std::vector<double>& snapshot_times);

/// |integral J dg_n - integral J f_n dx|, the field integral by the midpoint rule.
double weak_error(const EmpiricalMeasure& em, const MassDensityField& f, const TestFunction& J,
                  Mass n);

void write_field_binary(std::ostream& os, const MassDensityField& f);
MassDensityField read_field_binary(std::istream& is);
void write_field_csv(std::ostream& os, const MassDensityField& f);
MassDensityField read_field_csv(std::istream& is);

}  // namespace coag2d
