#include "coag2d/pde.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstring>
#include <istream>
#include <ostream>
#include <sstream>

namespace coag2d {

int PdeConfig::cells_per_side() const {
  if (mode == PdeMode::homogeneous) return 1;
  return int(std::lround(2.0 * L / hx));
}

void PdeConfig::validate(const MassFunctions& mf) const {
  if (!(dt > 0)) throw ValidationError("pde dt must be positive");
  if (M_max < 1) throw ValidationError("M_max must be >= 1");
  if (mode == PdeMode::homogeneous) return;
  if (!(L > 0 && hx > 0)) throw ValidationError("pde L and hx must be positive");
  const double n = 2.0 * L / hx;
  if (std::abs(n - std::round(n)) > 1e-9 * n || std::round(n) < 3)
    throw ValidationError("2L/hx must be an integer >= 3");
  double dmax = 0.0;
  for (Mass m = 1; m <= M_max; ++m) dmax = std::max(dmax, mf.d(m));
  if (dt > hx * hx / (4.0 * dmax) * (1 + 1e-12))
    throw ValidationError("CFL violated: dt > hx^2 / (4 max d)");
}

BetaTable::BetaTable(const MassFunctions& mf, Mass M_max) : M_(M_max) {
  if (M_max < 1) throw ValidationError("M_max must be >= 1");
  table_.resize(std::size_t(M_max) * std::size_t(M_max));
  for (Mass n = 1; n <= M_max; ++n)
    for (Mass m = 1; m <= M_max; ++m)
      table_[std::size_t(n - 1) * std::size_t(M_max) + std::size_t(m - 1)] = beta(n, m, mf);
}

BetaTable BetaTable::constant(double b, Mass M_max) {
  if (!(b >= 0)) throw ValidationError("beta must be nonnegative");
  if (M_max < 1) throw ValidationError("M_max must be >= 1");
  BetaTable t;
  t.M_ = M_max;
  t.table_.assign(std::size_t(M_max) * std::size_t(M_max), b);
  return t;
}

bool BetaTable::zero() const {
  return std::all_of(table_.begin(), table_.end(), [](double v) { return v == 0.0; });
}

// --- field ----------------------------------------------------------------------------

MassDensityField MassDensityField::zeros(double L, double hx, int nx, Mass M_max) {
  if (nx < 1 || M_max < 1) throw ValidationError("field needs nx >= 1 and M_max >= 1");
  MassDensityField f;
  f.L = L;
  f.hx = hx;
  f.nx = nx;
  f.M_max = M_max;
  f.values.assign(std::size_t(M_max) * f.cells(), 0.0);
  return f;
}

MassDensityField MassDensityField::homogeneous(std::vector<double> c, Mass M_max) {
  if (c.size() > std::size_t(M_max)) throw ValidationError("more initial values than M_max");
  auto f = zeros(0.5, 1.0, 1, M_max);
  for (std::size_t k = 0; k < c.size(); ++k) {
    if (!(c[k] >= 0)) throw ValidationError("densities must be nonnegative");
    f.values[k] = c[k];
  }
  return f;
}

std::span<double> MassDensityField::f(Mass n) {
  return {values.data() + std::size_t(n - 1) * cells(), cells()};
}

std::span<const double> MassDensityField::f(Mass n) const {
  return {values.data() + std::size_t(n - 1) * cells(), cells()};
}

Vec2 MassDensityField::center(int ix, int iy) const {
  return {-L + (ix + 0.5) * hx, -L + (iy + 0.5) * hx};
}

double MassDensityField::integral(Mass n) const {
  double s = 0.0;
  for (double v : f(n)) s += v;
  return s * cell_area();
}

double MassDensityField::M0() const {
  double s = 0.0;
  for (Mass n = 1; n <= M_max; ++n) s += integral(n);
  return s;
}

double MassDensityField::total_mass() const {
  double s = 0.0;
  for (Mass n = 1; n <= M_max; ++n) s += double(n) * integral(n);
  return s;
}

double MassDensityField::min_value() const {
  return values.empty() ? 0.0 : *std::min_element(values.begin(), values.end());
}

MassDensityField field_from_initial_data(const InitialData& id, const PdeConfig& cfg) {
  if (cfg.mode == PdeMode::homogeneous)
    throw ValidationError("homogeneous fields are built from constants, not densities");
  const int nx = cfg.cells_per_side();
  auto f = MassDensityField::zeros(cfg.L, cfg.hx, nx, cfg.M_max);
  for (Mass n = 1; n <= std::min(id.max_mass(), cfg.M_max); ++n) {
    auto fn = f.f(n);
    for (int iy = 0; iy < nx; ++iy)
      for (int ix = 0; ix < nx; ++ix) fn[std::size_t(iy) * nx + ix] = id.density(n, f.center(ix, iy));
  }
  return f;
}

// --- reaction --------------------------------------------------------------------------

namespace {

void check_compatible(const MassDensityField& f, const BetaTable& beta) {
  if (beta.M_max() != f.M_max) throw ValidationError("beta table and field disagree on M_max");
}

// a * x + b * y, including the overflow tally.
MassDensityField combine(double a, const MassDensityField& x, double b, const MassDensityField& y) {
  MassDensityField out = x;
  for (std::size_t k = 0; k < out.values.size(); ++k)
    out.values[k] = a * x.values[k] + b * y.values[k];
  out.overflow_mass = a * x.overflow_mass + b * y.overflow_mass;
  return out;
}

double max_loss_rate(const MassDensityField& f, const BetaTable& beta) {
  const auto M = f.M_max;
  const std::size_t nc = f.cells();
  double r = 0.0;
  for (std::size_t c = 0; c < nc; ++c)
    for (Mass n = 1; n <= M; ++n) {
      double s = 0.0;
      for (Mass m = 1; m <= M; ++m) s += beta(m, n) * f.values[std::size_t(m - 1) * nc + c];
      r = std::max(r, 2.0 * s);
    }
  return r;
}

void euler_reaction_inplace(MassDensityField& f, double h, const BetaTable& beta) {
  const auto M = std::size_t(f.M_max);
  const std::size_t nc = f.cells();
  std::vector<double> loc(M), next(M);
  double flux = 0.0;
  for (std::size_t c = 0; c < nc; ++c) {
    bool any = false;
    for (std::size_t k = 0; k < M; ++k) {
      loc[k] = f.values[k * nc + c];
      any = any || loc[k] != 0.0;
    }
    if (!any) continue;
    for (std::size_t n = 1; n <= M; ++n) {
      double gain = 0.0;
      for (std::size_t m = 1; m < n; ++m) gain += beta(Mass(m), Mass(n - m)) * loc[m - 1] * loc[n - m - 1];
      double s = 0.0;
      for (std::size_t m = 1; m <= M; ++m) s += beta(Mass(m), Mass(n)) * loc[m - 1];
      next[n - 1] = loc[n - 1] + h * (gain - 2.0 * loc[n - 1] * s);
    }
    for (std::size_t a = 1; a <= M; ++a) {
      if (loc[a - 1] == 0.0) continue;
      for (std::size_t b = M + 1 - a; b <= M; ++b)
        flux += double(a + b) * beta(Mass(a), Mass(b)) * loc[a - 1] * loc[b - 1];
    }
    for (std::size_t k = 0; k < M; ++k) f.values[k * nc + c] = std::max(next[k], 0.0);
  }
  f.overflow_mass += h * f.cell_area() * flux;
}

}  // namespace

std::vector<double> gain_term(const MassDensityField& f, Mass n, const BetaTable& beta) {
  check_compatible(f, beta);
  if (n < 1 || n > f.M_max) throw ValidationError("mass index out of range");
  std::vector<double> out(f.cells(), 0.0);
  for (Mass m = 1; m < n; ++m) {
    const auto a = f.f(m), b = f.f(n - m);
    const double bt = beta(m, n - m);
    for (std::size_t c = 0; c < out.size(); ++c) out[c] += bt * a[c] * b[c];
  }
  return out;
}

std::vector<double> loss_term(const MassDensityField& f, Mass n, const BetaTable& beta) {
  check_compatible(f, beta);
  if (n < 1 || n > f.M_max) throw ValidationError("mass index out of range");
  std::vector<double> s(f.cells(), 0.0);
  for (Mass m = 1; m <= f.M_max; ++m) {
    const auto a = f.f(m);
    const double bt = beta(m, n);
    for (std::size_t c = 0; c < s.size(); ++c) s[c] += bt * a[c];
  }
  const auto fn = f.f(n);
  for (std::size_t c = 0; c < s.size(); ++c) s[c] *= 2.0 * fn[c];
  return s;
}

double overflow_flux(const MassDensityField& f, const BetaTable& beta) {
  check_compatible(f, beta);
  const Mass M = f.M_max;
  double s = 0.0;
  for (Mass a = 1; a <= M; ++a)
    for (Mass b = M + 1 - a; b <= M; ++b) {
      const auto fa = f.f(a), fb = f.f(b);
      double p = 0.0;
      for (std::size_t c = 0; c < fa.size(); ++c) p += fa[c] * fb[c];
      s += double(a + b) * beta(a, b) * p;
    }
  return s * f.cell_area();
}

MassDensityField step_reaction(const MassDensityField& f, double dt, const BetaTable& beta) {
  check_compatible(f, beta);
  if (!(dt >= 0)) throw ValidationError("dt must be nonnegative");
  MassDensityField out = f;
  if (beta.zero() || dt == 0) {
    out.t = f.t + dt;
    return out;
  }
  double done = 0.0;
  while (done < dt) {
    const double rate = max_loss_rate(out, beta);
    double h = dt - done;
    if (rate * h > 0.5) h = 0.5 / rate;
    if (h >= dt - done) h = dt - done;
    euler_reaction_inplace(out, h, beta);
    done = (h == dt - done) ? dt : done + h;
  }
  out.t = f.t + dt;
  return out;
}

// --- diffusion --------------------------------------------------------------------------

MassDensityField step_diffusion(const MassDensityField& f, double dt, const MassFunctions& mf,
                                Boundary boundary) {
  if (!(dt >= 0)) throw ValidationError("dt must be nonnegative");
  MassDensityField out = f;
  out.t = f.t + dt;
  if (f.nx == 1 || dt == 0) return out;
  const int nx = f.nx;
  const double inv_h2 = 1.0 / (f.hx * f.hx);
  for (Mass n = 1; n <= f.M_max; ++n) {
    const double d = mf.d(n);
    if (dt * d * 4.0 * inv_h2 > 1.0 + 1e-12)
      throw ValidationError("CFL violated: dt > hx^2 / (4 d(n)) for n = " + std::to_string(n));
    if (d == 0.0) continue;
    const auto src = f.f(n);
    auto dst = out.f(n);
    const double k = dt * d * inv_h2;
    auto at = [&](int ix, int iy, int cx, int cy) {
      if (boundary == Boundary::periodic) {
        ix = (ix + nx) % nx;
        iy = (iy + nx) % nx;
      } else if (ix < 0 || ix >= nx || iy < 0 || iy >= nx) {
        ix = cx;
        iy = cy;
      }
      return src[std::size_t(iy) * nx + ix];
    };
    for (int iy = 0; iy < nx; ++iy)
      for (int ix = 0; ix < nx; ++ix) {
        const double c = src[std::size_t(iy) * nx + ix];
        const double lap = at(ix - 1, iy, ix, iy) + at(ix + 1, iy, ix, iy) +
                           at(ix, iy - 1, ix, iy) + at(ix, iy + 1, ix, iy) - 4.0 * c;
        dst[std::size_t(iy) * nx + ix] = c + k * lap;
      }
  }
  return out;
}

// --- time integration ---------------------------------------------------------------------

namespace {

MassDensityField heun_reaction(const MassDensityField& f, double h, const BetaTable& beta) {
  const auto f1 = step_reaction(f, h, beta);
  const auto f2 = step_reaction(f1, h, beta);
  auto out = combine(0.5, f, 0.5, f2);
  out.t = f.t + h;
  return out;
}

MassDensityField heun_diffusion(const MassDensityField& f, double h, const MassFunctions& mf,
                                Boundary bc) {
  const auto f1 = step_diffusion(f, h, mf, bc);
  const auto f2 = step_diffusion(f1, h, mf, bc);
  auto out = combine(0.5, f, 0.5, f2);
  out.t = f.t + h;
  return out;
}

}  // namespace

std::vector<MassDensityField> solve(const MassDensityField& f0, const PdeConfig& cfg,
                                    const MassFunctions& mf, const BetaTable& beta, double T,
                                    const std::vector<double>& snapshot_times) {
  cfg.validate(mf);
  check_compatible(f0, beta);
  if (f0.M_max != cfg.M_max) throw ValidationError("field and config disagree on M_max");
  if (cfg.mode == PdeMode::homogeneous && f0.nx != 1)
    throw ValidationError("homogeneous mode needs a single-cell field");
  if (!(T >= 0)) throw ValidationError("T must be nonnegative");
  std::vector<double> targets = snapshot_times;
  for (double t : targets)
    if (!(t >= 0 && t <= T)) throw ValidationError("snapshot time outside [0, T]");
  std::sort(targets.begin(), targets.end());
  targets.erase(std::unique(targets.begin(), targets.end()), targets.end());

  std::vector<MassDensityField> out;
  std::size_t next_target = 0;
  MassDensityField f = f0;
  f.t = 0.0;
  auto take = [&](double t) {
    while (next_target < targets.size() && targets[next_target] <= t) {
      out.push_back(f);
      out.back().t = targets[next_target];
      ++next_target;
    }
  };
  take(0.0);
  const bool diffuse = cfg.mode == PdeMode::planar && f.nx > 1;
  double t = 0.0;
  std::uint64_t k = 0;
  while (t < T) {
    const double grid_next = std::min(double(k + 1) * cfg.dt, T);
    double next = grid_next;
    if (next_target < targets.size()) next = std::min(next, targets[next_target]);
    if (next >= grid_next) ++k;
    const double h = next - t;
    if (diffuse) f = heun_diffusion(f, 0.5 * h, mf, cfg.boundary);
    f = heun_reaction(f, h, beta);
    if (diffuse) f = heun_diffusion(f, 0.5 * h, mf, cfg.boundary);
    f.t = next;
    t = next;
    take(t);
  }
  return out;
}

double weak_error(const EmpiricalMeasure& em, const MassDensityField& f, const TestFunction& J,
                  Mass n) {
  const double particles = integrate_test_function(em, J, n);
  double field = 0.0;
  if (n >= 1 && n <= f.M_max) {
    const auto fn = f.f(n);
    for (int iy = 0; iy < f.nx; ++iy)
      for (int ix = 0; ix < f.nx; ++ix) {
        const double v = fn[std::size_t(iy) * f.nx + ix];
        if (v != 0.0) field += J(f.center(ix, iy)) * v;
      }
    field *= f.cell_area();
  }
  return std::abs(particles - field);
}

// --- serialization ----------------------------------------------------------------------------

namespace {

constexpr char kMagic[8] = {'C', '2', 'D', 'F', 'L', 'D', '1', '\0'};

template <class T>
void put(std::ostream& os, const T& v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <class T>
T get(std::istream& is) {
  T v{};
  if (!is.read(reinterpret_cast<char*>(&v), sizeof(T))) throw ValidationError("truncated field file");
  return v;
}

std::string num(double v) {
  char buf[64];
  auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

double parse_num(const std::string& s) {
  double v = 0.0;
  auto r = std::from_chars(s.data(), s.data() + s.size(), v);
  if (r.ec != std::errc() || r.ptr != s.data() + s.size())
    throw ValidationError("bad number in field CSV: '" + s + "'");
  return v;
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string tok;
  while (std::getline(ss, tok, ',')) out.push_back(tok);
  return out;
}

}  // namespace

void write_field_binary(std::ostream& os, const MassDensityField& f) {
  os.write(kMagic, sizeof kMagic);
  put(os, f.L);
  put(os, f.hx);
  put(os, std::int64_t(f.M_max));
  put(os, f.t);
  put(os, std::int64_t(f.nx));
  put(os, f.overflow_mass);
  os.write(reinterpret_cast<const char*>(f.values.data()),
           std::streamsize(f.values.size() * sizeof(double)));
}

MassDensityField read_field_binary(std::istream& is) {
  char magic[8];
  if (!is.read(magic, sizeof magic) || std::memcmp(magic, kMagic, sizeof magic) != 0)
    throw ValidationError("not a field file");
  const double L = get<double>(is);
  const double hx = get<double>(is);
  const auto M = get<std::int64_t>(is);
  const double t = get<double>(is);
  const auto nx = get<std::int64_t>(is);
  const double overflow = get<double>(is);
  if (M < 1 || nx < 1 || nx > (1 << 16)) throw ValidationError("bad field header");
  auto f = MassDensityField::zeros(L, hx, int(nx), M);
  f.t = t;
  f.overflow_mass = overflow;
  if (!is.read(reinterpret_cast<char*>(f.values.data()),
               std::streamsize(f.values.size() * sizeof(double))))
    throw ValidationError("truncated field file");
  return f;
}

void write_field_csv(std::ostream& os, const MassDensityField& f) {
  os << "L,hx,M_max,t,nx,overflow_mass\n";
  os << num(f.L) << ',' << num(f.hx) << ',' << f.M_max << ',' << num(f.t) << ',' << f.nx << ','
     << num(f.overflow_mass) << '\n';
  for (Mass n = 1; n <= f.M_max; ++n) {
    os << "n=" << n << '\n';
    const auto fn = f.f(n);
    for (int iy = 0; iy < f.nx; ++iy) {
      for (int ix = 0; ix < f.nx; ++ix) os << (ix ? "," : "") << num(fn[std::size_t(iy) * f.nx + ix]);
      os << '\n';
    }
  }
}

MassDensityField read_field_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line) || line != "L,hx,M_max,t,nx,overflow_mass")
    throw ValidationError("bad field CSV header");
  if (!std::getline(is, line)) throw ValidationError("truncated field CSV");
  const auto h = split(line);
  if (h.size() != 6) throw ValidationError("bad field CSV header values");
  const auto M = Mass(std::stoll(h[2]));
  const int nx = std::stoi(h[4]);
  auto f = MassDensityField::zeros(parse_num(h[0]), parse_num(h[1]), nx, M);
  f.t = parse_num(h[3]);
  f.overflow_mass = parse_num(h[5]);
  for (Mass n = 1; n <= M; ++n) {
    if (!std::getline(is, line) || line != "n=" + std::to_string(n))
      throw ValidationError("field CSV: expected block for n=" + std::to_string(n));
    auto fn = f.f(n);
    for (int iy = 0; iy < nx; ++iy) {
      if (!std::getline(is, line)) throw ValidationError("truncated field CSV");
      const auto row = split(line);
      if (row.size() != std::size_t(nx)) throw ValidationError("field CSV row has wrong length");
      for (int ix = 0; ix < nx; ++ix) fn[std::size_t(iy) * nx + ix] = parse_num(row[ix]);
    }
  }
  return f;
}

}  // namespace coag2d
