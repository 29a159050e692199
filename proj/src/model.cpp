#include "coag2d/model.hpp"

#include <algorithm>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <sstream>

namespace coag2d {

namespace {

constexpr double kPi = std::numbers::pi;

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

}  // namespace

// --- Configuration ----------------------------------------------------------

Configuration::Configuration(std::vector<Particle> particles, double time) : time_(time) {
  entries_.reserve(particles.size());
  for (const auto& p : particles) insert(p);
}

// Labels are issued in increasing order and erasure preserves order, so the
// entry vector stays sorted by id.
std::optional<std::size_t> Configuration::find(ParticleId id) const {
  auto it = std::lower_bound(entries_.begin(), entries_.end(), id,
                             [](const Entry& e, ParticleId v) { return e.id < v; });
  if (it == entries_.end() || it->id != id) return std::nullopt;
  return std::size_t(it - entries_.begin());
}

ParticleId Configuration::insert(const Particle& p) {
  if (p.mass < 1) throw ValidationError("particle mass must be >= 1");
  if (!std::isfinite(p.position.x) || !std::isfinite(p.position.y))
    throw ValidationError("particle position must be finite");
  const ParticleId id = next_id_++;
  entries_.push_back({id, p});
  return id;
}

void Configuration::erase_slots(std::vector<std::size_t> slots) {
  if (slots.empty()) return;
  std::sort(slots.begin(), slots.end());
  slots.erase(std::unique(slots.begin(), slots.end()), slots.end());
  std::size_t out = 0, k = 0;
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    if (k < slots.size() && slots[k] == i) {
      ++k;
      continue;
    }
    entries_[out++] = entries_[i];
  }
  entries_.resize(out);
}

Mass Configuration::total_mass() const {
  Mass s = 0;
  for (const auto& e : entries_) s += e.particle.mass;
  return s;
}

std::size_t Configuration::count_mass(Mass n) const {
  return std::size_t(std::count_if(entries_.begin(), entries_.end(),
                                   [n](const Entry& e) { return e.particle.mass == n; }));
}

Mass Configuration::max_mass() const {
  Mass m = 0;
  for (const auto& e : entries_) m = std::max(m, e.particle.mass);
  return m;
}

// --- PairFunction -----------------------------------------------------------

PairFunction PairFunction::constant(double c) {
  if (!(c >= 0)) throw ValidationError("pair function coefficient must be nonnegative");
  PairFunction f;
  f.kind_ = Kind::constant;
  f.c_ = c;
  return f;
}

PairFunction PairFunction::product(double c) {
  auto f = constant(c);
  f.kind_ = Kind::product;
  return f;
}

PairFunction PairFunction::sum(double c) {
  auto f = constant(c);
  f.kind_ = Kind::sum;
  return f;
}

PairFunction PairFunction::power_product(double c, double p) {
  auto f = constant(c);
  f.kind_ = Kind::power_product;
  f.p_ = p;
  return f;
}

PairFunction PairFunction::tabulated(std::vector<double> table, int size) {
  if (size < 1 || table.size() != std::size_t(size) * std::size_t(size))
    throw ValidationError("tabulated pair function needs size*size entries");
  for (double v : table)
    if (!(v >= 0)) throw ValidationError("tabulated pair function entries must be nonnegative");
  for (int i = 0; i < size; ++i)
    for (int j = 0; j < i; ++j)
      if (table[std::size_t(i) * size + j] != table[std::size_t(j) * size + i])
        throw ValidationError("tabulated pair function must be symmetric");
  PairFunction f;
  f.kind_ = Kind::tabulated;
  f.table_ = std::move(table);
  f.size_ = size;
  return f;
}

PairFunction PairFunction::custom(std::function<double(Mass, Mass)> fn, std::string name) {
  PairFunction f;
  f.kind_ = Kind::custom;
  f.fn_ = std::move(fn);
  f.name_ = std::move(name);
  return f;
}

double PairFunction::operator()(Mass n, Mass m) const {
  switch (kind_) {
    case Kind::constant:
      return c_;
    case Kind::product:
      return c_ * double(n) * double(m);
    case Kind::sum:
      return c_ * double(n + m);
    case Kind::power_product:
      return c_ * std::pow(double(n) * double(m), p_);
    case Kind::tabulated: {
      const auto i = std::size_t(std::min<Mass>(n, size_) - 1);
      const auto j = std::size_t(std::min<Mass>(m, size_) - 1);
      return table_[i * size_ + j];
    }
    case Kind::custom:
      return fn_(n, m);
  }
  return 0.0;
}

bool PairFunction::at_most_linear_in_first() const {
  switch (kind_) {
    case Kind::power_product:
      return p_ <= 1.0;
    case Kind::custom:
      return false;
    default:
      return true;
  }
}

std::string PairFunction::describe() const {
  switch (kind_) {
    case Kind::constant:
      return "constant(" + fmt(c_) + ")";
    case Kind::product:
      return "product(" + fmt(c_) + ")";
    case Kind::sum:
      return "sum(" + fmt(c_) + ")";
    case Kind::power_product:
      return "power_product(" + fmt(c_) + "," + fmt(p_) + ")";
    case Kind::tabulated: {
      std::string s = "tabulated(" + std::to_string(size_);
      for (double v : table_) s += "," + fmt(v);
      return s + ")";
    }
    case Kind::custom:
      return "custom(" + name_ + ")";
  }
  return {};
}

// --- MassFunction -----------------------------------------------------------

MassFunction MassFunction::constant(double c) {
  if (!(c >= 0)) throw ValidationError("mass function must be nonnegative");
  MassFunction f;
  f.kind_ = Kind::constant;
  f.c_ = c;
  return f;
}

MassFunction MassFunction::power_law(double c, double p) {
  auto f = constant(c);
  f.kind_ = Kind::power_law;
  f.p_ = p;
  return f;
}

MassFunction MassFunction::tabulated(std::vector<double> values) {
  if (values.empty()) throw ValidationError("tabulated mass function is empty");
  for (double v : values)
    if (!(v >= 0)) throw ValidationError("tabulated mass function must be nonnegative");
  MassFunction f;
  f.kind_ = Kind::tabulated;
  f.table_ = std::move(values);
  return f;
}

MassFunction MassFunction::custom(std::function<double(Mass)> fn, std::string name,
                                  bool bounded) {
  MassFunction f;
  f.kind_ = Kind::custom;
  f.fn_ = std::move(fn);
  f.name_ = std::move(name);
  f.bounded_ = bounded;
  return f;
}

double MassFunction::operator()(Mass n) const {
  switch (kind_) {
    case Kind::constant:
      return c_;
    case Kind::power_law:
      return c_ * std::pow(double(n), -p_);
    case Kind::tabulated:
      return table_[std::size_t(std::min<Mass>(n, Mass(table_.size())) - 1)];
    case Kind::custom:
      return fn_(n);
  }
  return 0.0;
}

bool MassFunction::bounded() const {
  switch (kind_) {
    case Kind::power_law:
      return p_ >= 0.0;
    case Kind::custom:
      return bounded_;
    default:
      return true;
  }
}

std::string MassFunction::describe() const {
  switch (kind_) {
    case Kind::constant:
      return "constant(" + fmt(c_) + ")";
    case Kind::power_law:
      return "power_law(" + fmt(c_) + "," + fmt(p_) + ")";
    case Kind::tabulated: {
      std::string s = "tabulated(";
      for (std::size_t i = 0; i < table_.size(); ++i) s += (i ? "," : "") + fmt(table_[i]);
      return s + ")";
    }
    case Kind::custom:
      return "custom(" + name_ + ")";
  }
  return {};
}

// --- kernels ------------------------------------------------------------------

KernelSpec KernelSpec::default_bump() {
  KernelSpec k;
  k.V = [](Vec2 x) {
    const double r2 = x.norm2();
    return r2 < 1.0 ? (2.0 / kPi) * (1.0 - r2) : 0.0;
  };
  k.support_radius = 1.0;
  k.sup_value = 2.0 / kPi;
  k.radius_fn = [](Mass m) { return std::sqrt(double(m)); };
  return k;
}

MollifierSpec MollifierSpec::default_bump(double delta) {
  if (!(delta > 0)) throw ValidationError("mollifier scale must be positive");
  MollifierSpec m;
  m.eta = [](Vec2 x) {
    const double r2 = x.norm2();
    if (r2 >= 1.0) return 0.0;
    const double u = 1.0 - r2;
    return (4.0 / kPi) * u * u * u;
  };
  m.support_radius = 1.0;
  m.delta = delta;
  return m;
}

double kernel_integral(const std::function<double(Vec2)>& V, double support_radius) {
  using boost::math::quadrature::gauss_kronrod;
  auto radial = [&](double r) {
    auto angular = [&](double th) { return V({r * std::cos(th), r * std::sin(th)}); };
    return r * gauss_kronrod<double, 61>::integrate(angular, 0.0, 2 * kPi, 8, 1e-13);
  };
  return gauss_kronrod<double, 61>::integrate(radial, 0.0, support_radius, 10, 1e-13);
}

namespace {

void check_unit_mass(const std::function<double(Vec2)>& f, double R, double tol,
                     const char* what) {
  if (!f) throw ValidationError(std::string(what) + " is not set");
  if (!(R > 0)) throw ValidationError(std::string(what) + " support radius must be positive");
  for (int i = 0; i <= 40; ++i)
    for (int j = 0; j <= 40; ++j) {
      const Vec2 x{R * (-1.2 + 2.4 * i / 40.0), R * (-1.2 + 2.4 * j / 40.0)};
      const double v = f(x);
      if (!(v >= 0)) throw ValidationError(std::string(what) + " is negative somewhere");
      if (x.norm() > R * (1 + 1e-12) && v != 0.0)
        throw ValidationError(std::string(what) + " is nonzero outside its support");
    }
  const double I = kernel_integral(f, R);
  if (std::abs(I - 1.0) > tol)
    throw ValidationError(std::string(what) + " integrates to " + fmt(I) + ", not 1");
}

}  // namespace

void validate_kernel(const KernelSpec& ks, double tol) {
  check_unit_mass(ks.V, ks.support_radius, tol, "interaction kernel");
}

void validate_mollifier(const MollifierSpec& mol, double tol) {
  check_unit_mass(mol.eta, mol.support_radius, tol, "mollifier");
}

// --- initial densities --------------------------------------------------------

double DensityProfile::value(Vec2 x) const {
  const double r2 = (x - center).norm2() / (scale * scale);
  switch (shape) {
    case Shape::bump:
      return r2 < 1.0 ? 2.0 * total / (kPi * scale * scale) * (1.0 - r2) : 0.0;
    case Shape::disc:
      return r2 < 1.0 ? total / (kPi * scale * scale) : 0.0;
    case Shape::gaussian:
      return total / (2 * kPi * scale * scale) * std::exp(-0.5 * r2);
  }
  return 0.0;
}

Vec2 DensityProfile::sample(Rng& rng) const {
  if (shape == Shape::gaussian) {
    const double x = rng.normal(), y = rng.normal();
    return center + scale * Vec2{x, y};
  }
  // u = r^2 / R^2 has density (1-u)*2 for the bump and 1 for the disc.
  const double U = rng.uniform();
  const double u = shape == Shape::bump ? 1.0 - std::sqrt(1.0 - U) : U;
  const double th = 2 * kPi * rng.uniform();
  const double r = scale * std::sqrt(u);
  return center + Vec2{r * std::cos(th), r * std::sin(th)};
}

double DensityProfile::support_radius() const {
  return shape == Shape::gaussian ? std::numeric_limits<double>::infinity() : scale;
}

double DensityProfile::sup_value() const {
  switch (shape) {
    case Shape::bump:
      return 2.0 * total / (kPi * scale * scale);
    case Shape::disc:
      return total / (kPi * scale * scale);
    case Shape::gaussian:
      return total / (2 * kPi * scale * scale);
  }
  return 0.0;
}

std::string DensityProfile::describe() const {
  const char* names[] = {"bump", "disc", "gaussian"};
  return std::string(names[int(shape)]) + "(" + fmt(center.x) + "," + fmt(center.y) + "," +
         fmt(scale) + "," + fmt(total) + ")";
}

double InitialData::density(Mass n, Vec2 x) const {
  if (n < 1 || n > max_mass()) return 0.0;
  double s = 0.0;
  for (const auto& p : h[std::size_t(n - 1)]) s += p.value(x);
  return s;
}

double InitialData::mass_integral(Mass n) const {
  if (n < 1 || n > max_mass()) return 0.0;
  double s = 0.0;
  for (const auto& p : h[std::size_t(n - 1)]) s += p.total;
  return s;
}

double InitialData::Z() const {
  double s = 0.0;
  for (Mass n = 1; n <= max_mass(); ++n) s += mass_integral(n);
  return s;
}

InitialData InitialData::single_species(const DensityProfile& profile) {
  InitialData id;
  id.h.push_back({profile});
  return id;
}

// --- rates and hypotheses -------------------------------------------------------

double beta_from(double alpha, double d_sum) {
  if (!(alpha >= 0)) throw ValidationError("alpha must be nonnegative");
  if (!(d_sum >= 0)) throw ValidationError("diffusion rates must be nonnegative");
  const double D = 2 * kPi * d_sum;
  if (alpha == 0.0 || D == 0.0) return 0.0;
  if (std::isinf(alpha)) return D;
  return D * alpha / (D + alpha);
}

double beta(Mass n, Mass m, const MassFunctions& mf) {
  return beta_from(mf.alpha(n, m), mf.d(n) + mf.d(m));
}

double tau(Mass n, Mass m, const MassFunctions& mf) {
  const double ds = mf.d(n) + mf.d(m);
  if (!(ds > 0)) throw ValidationError("tau needs d(n) + d(m) > 0");
  return mf.alpha(n, m) / ds;
}

HypothesisReport validate_hypothesis(const MassFunctions& mf, Mass n_max) {
  HypothesisReport rep;
  if (n_max < 2) throw ValidationError("n_max must be >= 2");
  for (Mass n = 1; n <= n_max; ++n)
    for (Mass m = 1; m <= n_max; ++m)
      if (mf.alpha(n, m) > mf.gamma(n, m)) {
        rep.pass = false;
        rep.violation = std::array<Mass, 3>{n, m, 0};
        rep.message = "alpha(" + std::to_string(n) + "," + std::to_string(m) + ") = " +
                      fmt(mf.alpha(n, m)) + " exceeds gamma = " + fmt(mf.gamma(n, m));
        return rep;
      }
  for (Mass n1 = 1; n1 <= n_max; ++n1)
    for (Mass n2 = 1; n2 <= n_max; ++n2) {
      const double g12 = mf.gamma(n1, n2);
      const double d2 = mf.d(n2);
      for (Mass n3 = 1; n3 <= n_max; ++n3) {
        const Mass s = n2 + n3;
        double ratio = 1.0;
        if (d2 > 0) {
          const double r = mf.d(s) / d2;
          ratio = std::max(1.0, r * r * r);
        } else if (mf.d(s) > 0) {
          ratio = std::numeric_limits<double>::infinity();
        }
        const double lhs = double(n2) * mf.gamma(n1, s) * ratio;
        const double rhs = double(s) * g12;
        if (lhs > rhs * (1 + 1e-12)) {
          rep.pass = false;
          rep.violation = std::array<Mass, 3>{n1, n2, n3};
          rep.message = "growth condition fails at (n1,n2,n3) = (" + std::to_string(n1) + "," +
                        std::to_string(n2) + "," + std::to_string(n3) + "): " + fmt(lhs) +
                        " > " + fmt(rhs);
          return rep;
        }
      }
    }
  rep.message = "hypothesis holds for masses up to " + std::to_string(n_max);
  return rep;
}

InitialDataReport validate_initial_data(const InitialData& id, const MassFunctions& mf,
                                        Mass m_max) {
  InitialDataReport rep;
  if (id.h.empty()) throw ValidationError("initial data has no species");
  for (const auto& comps : id.h)
    for (const auto& p : comps)
      if (!(p.scale > 0) || !(p.total >= 0))
        throw ValidationError("density component needs positive scale and nonnegative total");
  if (!mf.d.bounded()) {
    rep.status = InitialDataReport::Status::fail;
    rep.message = "d is unbounded";
    return rep;
  }
  if (mf.gamma.kind() == PairFunction::Kind::custom) {
    rep.status = InitialDataReport::Status::not_certified;
    rep.message = "growth of a custom gamma cannot be certified";
    return rep;
  }
  if (!mf.gamma.at_most_linear_in_first()) {
    rep.status = InitialDataReport::Status::fail;
    rep.message = "gamma grows faster than linearly in its first argument";
    return rep;
  }
  if (id.max_mass() > m_max) {
    rep.status = InitialDataReport::Status::not_certified;
    rep.message = "initial data has masses beyond " + std::to_string(m_max);
    return rep;
  }
  for (const auto& comps : id.h)
    for (const auto& p : comps)
      if (std::isinf(p.support_radius())) {
        rep.status = InitialDataReport::Status::not_certified;
        rep.message = "k has unbounded support (" + p.describe() + ")";
        return rep;
      }
  rep.message = "k bounded with bounded support, d bounded, gamma at most linear";
  return rep;
}

double log_scale(double eps) {
  if (!(eps > 0 && eps < 1)) throw ValidationError("eps must lie in (0, 1)");
  return -std::log(eps);
}

std::size_t initial_particle_count(double Z, double eps) {
  if (!(Z > 0)) throw ValidationError("Z must be positive");
  return std::size_t(std::llround(Z * log_scale(eps)));
}

Configuration sample_initial_configuration(const InitialData& id, double eps,
                                           std::uint64_t seed) {
  const double Z = id.Z();
  const std::size_t N = initial_particle_count(Z, eps);
  if (N == 0) throw ValidationError("Z |log eps| rounds to zero particles");
  struct Comp {
    Mass n;
    const DensityProfile* p;
  };
  std::vector<Comp> comps;
  std::vector<double> weights;
  for (Mass n = 1; n <= id.max_mass(); ++n)
    for (const auto& p : id.h[std::size_t(n - 1)]) {
      comps.push_back({n, &p});
      weights.push_back(p.total);
    }
  Rng rng(seed);
  std::discrete_distribution<std::size_t> pick(weights.begin(), weights.end());
  std::vector<Particle> ps;
  ps.reserve(N);
  for (std::size_t k = 0; k < N; ++k) {
    const auto& c = comps[pick(rng.engine())];
    ps.push_back({c.p->sample(rng), c.n});
  }
  return Configuration(std::move(ps));
}

}  // namespace coag2d
