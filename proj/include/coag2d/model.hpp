#pragma once

// Domain types shared by the particle simulator, the Smoluchowski solver and
// the potential solver: particles and configurations, mass functions, the
// interaction kernel, initial densities and the macroscopic rate beta.

#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "coag2d/rng.hpp"

namespace coag2d {

/// Raised for invalid parameters or configuration input. The CLI maps it to
/// exit code 2.
class ValidationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  friend Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.y + b.y}; }
  friend Vec2 operator-(Vec2 a, Vec2 b) { return {a.x - b.x, a.y - b.y}; }
  friend Vec2 operator*(double s, Vec2 a) { return {s * a.x, s * a.y}; }
  friend bool operator==(Vec2 a, Vec2 b) = default;
  double norm2() const { return x * x + y * y; }
  double norm() const { return std::sqrt(norm2()); }
};

using Mass = std::int64_t;
using ParticleId = std::uint64_t;

struct Particle {
  Vec2 position;
  Mass mass = 1;
};

/// Microscopic state: a finite set of labelled particles. Labels are opaque and
/// never reused; a coagulation retires two labels and issues a fresh one.
class Configuration {
 public:
  struct Entry {
    ParticleId id;
    Particle particle;
  };

  Configuration() = default;
  explicit Configuration(std::vector<Particle> particles, double time = 0.0);

  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }
  double time() const { return time_; }
  void set_time(double t) { time_ = t; }

  const std::vector<Entry>& entries() const { return entries_; }
  std::vector<Entry>& entries() { return entries_; }

  /// Slot of the particle with label `id`, if it is alive.
  std::optional<std::size_t> find(ParticleId id) const;
  ParticleId insert(const Particle& p);
  void erase_slots(std::vector<std::size_t> slots);

  Mass total_mass() const;
  std::size_t count_mass(Mass n) const;
  Mass max_mass() const;
  ParticleId next_id() const { return next_id_; }

 private:
  std::vector<Entry> entries_;
  double time_ = 0.0;
  ParticleId next_id_ = 0;
};

/// A function N x N -> [0, inf) such as the microscopic propensity alpha or the
/// dominating function gamma.
class PairFunction {
 public:
  enum class Kind { constant, product, sum, power_product, tabulated, custom };

  static PairFunction constant(double c);
  /// c * n * m
  static PairFunction product(double c);
  /// c * (n + m)
  static PairFunction sum(double c);
  /// c * (n * m)^p
  static PairFunction power_product(double c, double p);
  /// Row-major size x size table; masses past the table reuse the last row/column.
  static PairFunction tabulated(std::vector<double> table, int size);
  static PairFunction custom(std::function<double(Mass, Mass)> f, std::string name);

  double operator()(Mass n, Mass m) const;
  Kind kind() const { return kind_; }
  /// True when f(n, m) <= C(m) n for some finite C(m) as n -> inf.
  bool at_most_linear_in_first() const;
  std::string describe() const;

 private:
  Kind kind_ = Kind::constant;
  double c_ = 1.0;
  double p_ = 1.0;
  int size_ = 0;
  std::vector<double> table_;
  std::function<double(Mass, Mass)> fn_;
  std::string name_;
};

/// A function N -> [0, inf); used for the half diffusion rate d(n).
class MassFunction {
 public:
  enum class Kind { constant, power_law, tabulated, custom };

  static MassFunction constant(double c);
  /// c * n^(-p)
  static MassFunction power_law(double c, double p);
  static MassFunction tabulated(std::vector<double> values);
  static MassFunction custom(std::function<double(Mass)> f, std::string name,
                             bool bounded);

  double operator()(Mass n) const;
  Kind kind() const { return kind_; }
  bool bounded() const;
  std::string describe() const;

 private:
  Kind kind_ = Kind::constant;
  double c_ = 1.0;
  double p_ = 0.0;
  std::vector<double> table_;
  std::function<double(Mass)> fn_;
  std::string name_;
  bool bounded_ = true;
};

struct MassFunctions {
  PairFunction alpha = PairFunction::constant(1.0);
  MassFunction d = MassFunction::constant(0.5);
  PairFunction gamma = PairFunction::constant(1.0);
};

/// Interaction kernel V on R^2: nonnegative, unit mass, supported in |x| < R0.
struct KernelSpec {
  std::function<double(Vec2)> V;
  double support_radius = 1.0;
  double sup_value = 0.0;
  /// Particle radius r(m) used by the mass-dependent-range variant.
  std::function<double(Mass)> radius_fn;

  double operator()(Vec2 x) const { return V(x); }
  double radius(Mass m) const { return radius_fn ? radius_fn(m) : std::sqrt(double(m)); }

  /// V(x) = (2/pi)(1 - |x|^2)_+, R0 = 1.
  static KernelSpec default_bump();
};

/// Mollifier eta (unit mass, compact support) at scale delta.
struct MollifierSpec {
  std::function<double(Vec2)> eta;
  double support_radius = 1.0;
  double delta = 0.1;

  /// delta^-2 eta(x / delta)
  double scaled(Vec2 x) const {
    const double inv = 1.0 / delta;
    return inv * inv * eta(inv * x);
  }

  /// eta(x) = (4/pi)(1 - |x|^2)^3_+
  static MollifierSpec default_bump(double delta);
  /// Closed form of the integral of eta^2 for the default bump.
  static constexpr double default_bump_square_integral() { return 16.0 / (7.0 * std::numbers::pi); }
};

/// One radial component of an initial density h_n, with closed-form integral
/// and an exact sampler.
struct DensityProfile {
  enum class Shape {
    bump,      // 2 total / (pi R^2) (1 - |x-c|^2/R^2)_+
    disc,      // total / (pi R^2) on |x-c| < R
    gaussian,  // total / (2 pi R^2) exp(-|x-c|^2 / (2 R^2))
  };

  Shape shape = Shape::bump;
  Vec2 center;
  double scale = 1.0;
  double total = 1.0;

  double value(Vec2 x) const;
  Vec2 sample(Rng& rng) const;
  /// Radius of the support around `center`; infinite for the Gaussian.
  double support_radius() const;
  double sup_value() const;
  std::string describe() const;
};

struct InitialData {
  /// h[n-1] lists the components of h_n.
  std::vector<std::vector<DensityProfile>> h;

  Mass max_mass() const { return Mass(h.size()); }
  double density(Mass n, Vec2 x) const;
  double mass_integral(Mass n) const;
  /// Z = sum_n integral h_n
  double Z() const;
  /// Monodisperse (mass 1) initial data with a single component.
  static InitialData single_species(const DensityProfile& profile);
};

// ---------------------------------------------------------------------------

/// Macroscopic coagulation rate
///   beta(n, m) = 2 pi (d(n) + d(m)) alpha(n, m) / (2 pi (d(n) + d(m)) + alpha(n, m)).
double beta(Mass n, Mass m, const MassFunctions& mf);
/// beta written in terms of the raw inputs; used where alpha or d are swept.
double beta_from(double alpha, double d_sum);
/// tau(n, m) = alpha(n, m) / (d(n) + d(m)).
double tau(Mass n, Mass m, const MassFunctions& mf);

struct HypothesisReport {
  bool pass = true;
  /// First (n1, n2, n3) violating the growth condition, or (n, m, 0) when
  /// alpha(n, m) > gamma(n, m).
  std::optional<std::array<Mass, 3>> violation;
  std::string message;
};

/// Exhaustive check over 1 <= n1, n2, n3 <= n_max of
///   n2 gamma(n1, n2+n3) max{1, [d(n2+n3)/d(n2)]^3} <= (n2+n3) gamma(n1, n2)
/// together with alpha <= gamma.
HypothesisReport validate_hypothesis(const MassFunctions& mf, Mass n_max);

struct InitialDataReport {
  enum class Status { certified, not_certified, fail };
  Status status = Status::certified;
  std::string message;
  bool pass() const { return status == Status::certified; }
};

/// Checks the sufficient conditions for the integrability assumptions on h_n:
/// k = sum n h_n bounded with bounded support, d bounded, gamma(n, m) <= C(m) n.
InitialDataReport validate_initial_data(const InitialData& id, const MassFunctions& mf,
                                        Mass m_max);

/// |log eps|
double log_scale(double eps);
/// N = round(Z |log eps|)
std::size_t initial_particle_count(double Z, double eps);

Configuration sample_initial_configuration(const InitialData& id, double eps,
                                           std::uint64_t seed);

/// Integral of V over R^2 by polar Gauss-Legendre quadrature on the support disc.
double kernel_integral(const std::function<double(Vec2)>& V, double support_radius);
/// Throws ValidationError unless V >= 0 on sample points and integrates to 1
/// within `tol`.
void validate_kernel(const KernelSpec& ks, double tol = 1e-10);
void validate_mollifier(const MollifierSpec& mol, double tol = 1e-10);

}  // namespace coag2d
