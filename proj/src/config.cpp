#include "coag2d/config.hpp"

#include <algorithm>
#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <charconv>
#include <fstream>
#include <map>
#include <numbers>
#include <set>
#include <sstream>

namespace coag2d {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

double parse_double(const std::string& raw) {
  const std::string s = trim(raw);
  double v = 0.0;
  auto r = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || r.ec != std::errc() || r.ptr != s.data() + s.size())
    throw ValidationError("not a number: '" + raw + "'");
  return v;
}

std::int64_t parse_int(const std::string& raw) {
  const std::string s = trim(raw);
  std::int64_t v = 0;
  auto r = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || r.ec != std::errc() || r.ptr != s.data() + s.size())
    throw ValidationError("not an integer: '" + raw + "'");
  return v;
}

std::uint64_t parse_u64(const std::string& raw) {
  const std::string s = trim(raw);
  std::uint64_t v = 0;
  auto r = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || r.ec != std::errc() || r.ptr != s.data() + s.size())
    throw ValidationError("not an unsigned integer: '" + raw + "'");
  return v;
}

bool parse_bool(const std::string& raw) {
  const std::string s = trim(raw);
  if (s == "true" || s == "1" || s == "yes") return true;
  if (s == "false" || s == "0" || s == "no") return false;
  throw ValidationError("not a boolean: '" + raw + "'");
}

std::string num(double v) {
  char buf[64];
  auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

std::string join(const std::vector<double>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + num(v[i]);
  return s;
}

// "name(a,b,c)" -> ("name", [a, b, c])
std::pair<std::string, std::vector<double>> call(const std::string& raw) {
  const std::string s = trim(raw);
  const auto open = s.find('(');
  if (open == std::string::npos) return {s, {}};
  if (s.back() != ')') throw ValidationError("unbalanced parentheses in '" + raw + "'");
  const std::string inner = s.substr(open + 1, s.size() - open - 2);
  return {trim(s.substr(0, open)), trim(inner).empty() ? std::vector<double>{} : parse_list(inner)};
}

void need_args(const std::string& name, const std::vector<double>& a, std::size_t n) {
  if (a.size() != n)
    throw ValidationError(name + " takes " + std::to_string(n) + " argument(s), got " +
                          std::to_string(a.size()));
}

std::function<double(Mass)> parse_radius(const std::string& spec) {
  auto [name, a] = call(spec);
  if (name == "sqrt") {
    need_args(name, a, 0);
    return [](Mass m) { return std::sqrt(double(m)); };
  }
  if (name == "constant") {
    need_args(name, a, 1);
    if (!(a[0] > 0)) throw ValidationError("radius must be positive");
    const double r = a[0];
    return [r](Mass) { return r; };
  }
  throw ValidationError("unknown radius function '" + spec + "'");
}

const std::map<std::string, std::set<std::string>>& vocabulary() {
  static const std::map<std::string, std::set<std::string>> v = {
      {"experiment", {"kind", "ensemble", "seed", "threads", "out"}},
      {"model", {"alpha", "d", "gamma", "M_max", "radius"}},
      {"initial", {}},
      {"sim", {"dt", "T", "eps", "rate_cap", "variant", "diffusion", "eps_list", "snapshot_times"}},
      {"pde", {"L", "hx", "dt", "M_max", "boundary", "mode"}},
      {"potential", {"tau_list", "eps_list", "grid_n", "R", "k_radius"}},
      {"stosszahlansatz", {"M1", "M2", "deltas", "cells_per_delta"}},
  };
  return v;
}

void rebuild_model(ModelParams& m) {
  m.mf.alpha = parse_pair_function(m.alpha_spec);
  m.mf.d = parse_mass_function(m.d_spec);
  m.mf.gamma = parse_pair_function(m.gamma_spec);
  m.ks.radius_fn = parse_radius(m.radius_spec);
  m.initial.h.clear();
  for (const auto& s : m.initial_specs) m.initial.h.push_back(s.empty() ? std::vector<DensityProfile>{} : parse_density(s));
  if (m.M_max < 1) throw ValidationError("M_max must be >= 1");
}

}  // namespace

std::string to_string(ExperimentKind k) {
  switch (k) {
    case ExperimentKind::kinetic_limit: return "kinetic_limit";
    case ExperimentKind::stosszahlansatz: return "stosszahlansatz";
    case ExperimentKind::potential_sweep: return "potential_sweep";
    case ExperimentKind::pde_only: return "pde_only";
    case ExperimentKind::sim_only: return "sim_only";
    case ExperimentKind::mass_radius: return "mass_radius";
  }
  return {};
}

ExperimentKind experiment_kind_from_string(const std::string& raw) {
  const std::string s = trim(raw);
  for (auto k : {ExperimentKind::kinetic_limit, ExperimentKind::stosszahlansatz,
                 ExperimentKind::potential_sweep, ExperimentKind::pde_only, ExperimentKind::sim_only,
                 ExperimentKind::mass_radius})
    if (to_string(k) == s) return k;
  throw ValidationError("unknown experiment kind '" + raw + "'");
}

std::vector<double> parse_list(const std::string& s) {
  std::vector<double> out;
  std::stringstream ss(s);
  std::string tok;
  while (std::getline(ss, tok, ',')) out.push_back(parse_double(tok));
  return out;
}

PairFunction parse_pair_function(const std::string& spec) {
  auto [name, a] = call(spec);
  if (name == "constant") return need_args(name, a, 1), PairFunction::constant(a[0]);
  if (name == "product") return need_args(name, a, 1), PairFunction::product(a[0]);
  if (name == "sum") return need_args(name, a, 1), PairFunction::sum(a[0]);
  if (name == "power_product") return need_args(name, a, 2), PairFunction::power_product(a[0], a[1]);
  if (name == "tabulated") {
    if (a.empty()) throw ValidationError("tabulated needs a size");
    const int n = int(a[0]);
    return PairFunction::tabulated(std::vector<double>(a.begin() + 1, a.end()), n);
  }
  throw ValidationError("unknown pair function '" + spec + "'");
}

MassFunction parse_mass_function(const std::string& spec) {
  auto [name, a] = call(spec);
  if (name == "constant") return need_args(name, a, 1), MassFunction::constant(a[0]);
  if (name == "power_law") return need_args(name, a, 2), MassFunction::power_law(a[0], a[1]);
  if (name == "tabulated") return MassFunction::tabulated(a);
  throw ValidationError("unknown mass function '" + spec + "'");
}

std::vector<DensityProfile> parse_density(const std::string& spec) {
  std::vector<DensityProfile> out;
  std::stringstream ss(spec);
  std::string part;
  while (std::getline(ss, part, ';')) {
    if (trim(part).empty()) continue;
    auto [name, a] = call(part);
    need_args(name, a, 4);
    DensityProfile p;
    if (name == "bump")
      p.shape = DensityProfile::Shape::bump;
    else if (name == "disc")
      p.shape = DensityProfile::Shape::disc;
    else if (name == "gaussian")
      p.shape = DensityProfile::Shape::gaussian;
    else
      throw ValidationError("unknown density shape '" + name + "'");
    p.center = {a[0], a[1]};
    p.scale = a[2];
    p.total = a[3];
    if (!(p.scale > 0) || !(p.total >= 0))
      throw ValidationError("density needs positive scale and nonnegative total");
    out.push_back(p);
  }
  return out;
}

ExperimentConfig default_config(ExperimentKind kind) {
  ExperimentConfig c;
  c.kind = kind;
  auto& m = c.model;
  m.initial_specs = {"bump(0,0,2,20)"};
  c.sim.dt = 0.01;
  c.sim.T = 0.1;
  c.sim.eps = 1e-2;
  c.snapshot_times = {0.0, 0.05, 0.1};
  c.pde.L = 4;
  c.pde.hx = 0.125;
  c.pde.dt = 1e-3;
  c.pde.M_max = 16;
  m.M_max = 16;
  switch (kind) {
    case ExperimentKind::potential_sweep:
      c.tau_list = {0.1, 1.0, 2 * std::numbers::pi, 100.0};
      c.potential_eps = {1e-3, 1e-4, 1e-5, 1e-6, 1e-7, 1e-8, 1e-9, 1e-10, 1e-11, 1e-12};
      break;
    case ExperimentKind::kinetic_limit:
    case ExperimentKind::stosszahlansatz:
      m.initial_specs = {"bump(0,0,40,2000)"};
      c.ensemble = 200;
      c.eps_list = {1e-2, 1e-3, 1e-4};
      c.sim.T = 1.0;
      c.sim.dt = 0.05;
      c.snapshot_times = {0.25, 0.5, 1.0};
      c.pde.L = 64;
      c.pde.hx = 1.0;
      c.pde.dt = 0.05;
      c.deltas = {2.0, 4.0, 8.0};
      break;
    case ExperimentKind::mass_radius:
      m.initial_specs = {"disc(0,0,0.5,5)", "disc(0,0,0.5,5)"};
      c.ensemble = 200;
      c.sim.eps = 1e-3;
      c.sim.T = 0.05;
      c.sim.dt = 0.01;
      c.snapshot_times = {};
      break;
    case ExperimentKind::pde_only:
      c.snapshot_times = {0.0, 0.5, 1.0};
      c.sim.T = 1.0;
      break;
    case ExperimentKind::sim_only:
      break;
  }
  if (c.potential_eps.empty()) c.potential_eps = {1e-3, 1e-6, 1e-9, 1e-12};
  if (c.tau_list.empty()) c.tau_list = {2 * std::numbers::pi};
  if (c.deltas.empty()) c.deltas = {0.5};
  if (c.eps_list.empty()) c.eps_list = {c.sim.eps};
  rebuild_model(m);
  return c;
}

ExperimentConfig parse_config(std::istream& is) {
  namespace pt = boost::property_tree;
  pt::ptree tree;
  try {
    pt::ini_parser::read_ini(is, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ValidationError(std::string("config: ") + e.what());
  }
  const auto& vocab = vocabulary();
  for (const auto& [section, body] : tree) {
    auto it = vocab.find(section);
    if (it == vocab.end()) {
      if (body.empty()) throw ValidationError("config: key '" + section + "' outside any section");
      throw ValidationError("config: unknown section [" + section + "]");
    }
    for (const auto& [key, val] : body) {
      (void)val;
      const bool ok = section == "initial" ? key.rfind("mass", 0) == 0 : it->second.count(key) > 0;
      if (!ok) throw ValidationError("config: unknown key '" + key + "' in [" + section + "]");
    }
  }
  auto get = [&](const std::string& path) -> std::optional<std::string> {
    auto v = tree.get_optional<std::string>(pt::ptree::path_type(path, '/'));
    if (!v) return std::nullopt;
    return trim(*v);
  };

  ExperimentKind kind = ExperimentKind::sim_only;
  if (auto v = get("experiment/kind")) kind = experiment_kind_from_string(*v);
  ExperimentConfig c = default_config(kind);
  if (auto v = get("experiment/ensemble")) c.ensemble = int(parse_int(*v));
  if (auto v = get("experiment/seed")) c.seed = parse_u64(*v);
  if (auto v = get("experiment/threads")) c.threads = int(parse_int(*v));
  if (auto v = get("experiment/out")) c.out = *v;

  auto& m = c.model;
  if (auto v = get("model/alpha")) m.alpha_spec = *v;
  if (auto v = get("model/d")) m.d_spec = *v;
  if (auto v = get("model/gamma")) m.gamma_spec = *v;
  if (auto v = get("model/radius")) m.radius_spec = *v;
  if (auto v = get("model/M_max")) {
    m.M_max = parse_int(*v);
    c.pde.M_max = m.M_max;
  }
  if (auto init = tree.get_child_optional("initial")) {
    std::map<Mass, std::string> byMass;
    for (const auto& [key, val] : *init) {
      const Mass n = parse_int(key.substr(4));
      if (n < 1) throw ValidationError("config: initial mass index must be >= 1");
      byMass[n] = trim(val.data());
    }
    if (!byMass.empty()) {
      m.initial_specs.assign(std::size_t(byMass.rbegin()->first), "");
      for (const auto& [n, s] : byMass) m.initial_specs[std::size_t(n - 1)] = s;
    }
  }

  if (auto v = get("sim/dt")) c.sim.dt = parse_double(*v);
  if (auto v = get("sim/T")) c.sim.T = parse_double(*v);
  if (auto v = get("sim/eps")) c.sim.eps = parse_double(*v);
  if (auto v = get("sim/rate_cap")) c.sim.rate_cap = parse_double(*v);
  if (auto v = get("sim/variant")) {
    if (*v == "standard")
      c.sim.variant = Variant::standard;
    else if (*v == "mass_radius")
      c.sim.variant = Variant::mass_radius;
    else
      throw ValidationError("config: unknown variant '" + *v + "'");
  }
  if (auto v = get("sim/diffusion")) c.sim.diffusion = parse_bool(*v);
  if (auto v = get("sim/eps_list")) c.eps_list = parse_list(*v);
  if (auto v = get("sim/snapshot_times")) c.snapshot_times = v->empty() ? std::vector<double>{} : parse_list(*v);

  if (auto v = get("pde/L")) c.pde.L = parse_double(*v);
  if (auto v = get("pde/hx")) c.pde.hx = parse_double(*v);
  if (auto v = get("pde/dt")) c.pde.dt = parse_double(*v);
  if (auto v = get("pde/M_max")) c.pde.M_max = parse_int(*v);
  if (auto v = get("pde/boundary")) {
    if (*v == "neumann")
      c.pde.boundary = Boundary::neumann;
    else if (*v == "periodic")
      c.pde.boundary = Boundary::periodic;
    else
      throw ValidationError("config: unknown boundary '" + *v + "'");
  }
  if (auto v = get("pde/mode")) {
    if (*v == "planar")
      c.pde.mode = PdeMode::planar;
    else if (*v == "homogeneous")
      c.pde.mode = PdeMode::homogeneous;
    else
      throw ValidationError("config: unknown pde mode '" + *v + "'");
  }

  if (auto v = get("potential/tau_list")) c.tau_list = parse_list(*v);
  if (auto v = get("potential/eps_list")) c.potential_eps = parse_list(*v);
  if (auto v = get("potential/grid_n")) c.potential_grid.n = int(parse_int(*v));
  if (auto v = get("potential/R")) c.potential_grid.R = parse_double(*v);
  if (auto v = get("potential/k_radius")) c.k_radius = parse_double(*v);

  if (auto v = get("stosszahlansatz/M1")) c.M1 = parse_int(*v);
  if (auto v = get("stosszahlansatz/M2")) c.M2 = parse_int(*v);
  if (auto v = get("stosszahlansatz/deltas")) c.deltas = parse_list(*v);
  if (auto v = get("stosszahlansatz/cells_per_delta")) c.cells_per_delta = int(parse_int(*v));

  rebuild_model(m);
  if (c.ensemble < 1) throw ValidationError("config: ensemble must be >= 1");
  if (c.threads < 1) throw ValidationError("config: threads must be >= 1");
  c.sim.validate();
  if (c.eps_list.empty()) c.eps_list = {c.sim.eps};
  for (double e : c.eps_list)
    if (!(e > 0 && e < 1)) throw ValidationError("config: eps_list entries must lie in (0, 1)");
  return c;
}

ExperimentConfig parse_config_string(const std::string& text) {
  std::istringstream is(text);
  return parse_config(is);
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ValidationError("cannot open config '" + path + "'");
  return parse_config(f);
}

std::string ExperimentConfig::resolved_text() const {
  std::ostringstream os;
  os << "[experiment]\nkind = " << to_string(kind) << "\nensemble = " << ensemble
     << "\nseed = " << seed << "\nthreads = " << threads << "\nout = " << out << "\n\n";
  os << "[model]\nalpha = " << model.alpha_spec << "\nd = " << model.d_spec
     << "\ngamma = " << model.gamma_spec << "\nM_max = " << model.M_max
     << "\nradius = " << model.radius_spec << "\n\n";
  os << "[initial]\n";
  for (std::size_t n = 0; n < model.initial_specs.size(); ++n)
    if (!model.initial_specs[n].empty()) os << "mass" << n + 1 << " = " << model.initial_specs[n] << "\n";
  os << "\n[sim]\ndt = " << num(sim.dt) << "\nT = " << num(sim.T) << "\neps = " << num(sim.eps)
     << "\nrate_cap = " << num(sim.rate_cap)
     << "\nvariant = " << (sim.variant == Variant::standard ? "standard" : "mass_radius")
     << "\ndiffusion = " << (sim.diffusion ? "true" : "false") << "\neps_list = " << join(eps_list)
     << "\nsnapshot_times = " << join(snapshot_times) << "\n\n";
  os << "[pde]\nL = " << num(pde.L) << "\nhx = " << num(pde.hx) << "\ndt = " << num(pde.dt)
     << "\nM_max = " << pde.M_max
     << "\nboundary = " << (pde.boundary == Boundary::neumann ? "neumann" : "periodic")
     << "\nmode = " << (pde.mode == PdeMode::planar ? "planar" : "homogeneous") << "\n\n";
  os << "[potential]\ntau_list = " << join(tau_list) << "\neps_list = " << join(potential_eps)
     << "\ngrid_n = " << potential_grid.n << "\nR = " << num(potential_grid.R)
     << "\nk_radius = " << num(k_radius) << "\n\n";
  os << "[stosszahlansatz]\nM1 = " << M1 << "\nM2 = " << M2 << "\ndeltas = " << join(deltas)
     << "\ncells_per_delta = " << cells_per_delta << "\n";
  return os.str();
}

std::uint64_t ExperimentConfig::hash() const {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : resolved_text()) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace coag2d
