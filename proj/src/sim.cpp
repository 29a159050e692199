#include "coag2d/sim.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace coag2d {

namespace {

using CellKey = std::pair<std::int64_t, std::int64_t>;

CellKey cell_key(Vec2 x, double side) {
  const double cx = std::floor(x.x / side), cy = std::floor(x.y / side);
  constexpr double lim = 4e18;
  if (!(std::abs(cx) < lim && std::abs(cy) < lim))
    throw std::overflow_error("particle coordinates out of cell-index range");
  return {std::int64_t(cx), std::int64_t(cy)};
}

// Merges slots a and b of cfg into a new particle; shared by coagulate() and
// the stepper so both consume randomness identically.
EventRecord merge_into(const Configuration& cfg, std::size_t a, std::size_t b, double t,
                       Rng& rng, Particle& merged) {
  const auto& ea = cfg.entries()[a];
  const auto& eb = cfg.entries()[b];
  const Mass mi = ea.particle.mass, mj = eb.particle.mass;
  const bool kept_i = rng.uniform() * double(mi + mj) < double(mi);
  merged.mass = mi + mj;
  merged.position = kept_i ? ea.particle.position : eb.particle.position;
  return {t, ea.id, eb.id, mi, mj, kept_i};
}

}  // namespace

void SimConfig::validate() const {
  if (!(dt > 0)) throw ValidationError("dt must be positive");
  if (!(T >= 0)) throw ValidationError("T must be nonnegative");
  if (!(eps > 0 && eps < 1)) throw ValidationError("eps must lie in (0, 1)");
  if (!(rate_cap > 0 && rate_cap < 1)) throw ValidationError("rate_cap must lie in (0, 1)");
}

double EmpiricalMeasure::total(Mass n) const {
  auto it = points.find(n);
  return it == points.end() ? 0.0 : weight * double(it->second.size());
}

// --- cell index -------------------------------------------------------------------

CellIndex::CellIndex(const Configuration& cfg, double cell_size) : cell_size_(cell_size) {
  if (!(cell_size > 0)) throw ValidationError("cell size must be positive");
  const auto& es = cfg.entries();
  cell_.resize(es.size());
  order_.resize(es.size());
  for (std::size_t i = 0; i < es.size(); ++i) {
    cell_[i] = cell_key(es[i].particle.position, cell_size);
    order_[i] = i;
  }
  std::sort(order_.begin(), order_.end(), [&](std::size_t a, std::size_t b) {
    return cell_[a] != cell_[b] ? cell_[a] < cell_[b] : a < b;
  });
  for (std::size_t k = 0; k < order_.size();) {
    std::size_t e = k;
    while (e < order_.size() && cell_[order_[e]] == cell_[order_[k]]) ++e;
    ranges_.push_back({cell_[order_[k]], {k, e}});
    k = e;
  }
}

void CellIndex::for_each_pair(const std::function<void(std::size_t, std::size_t)>& f) const {
  static constexpr std::array<std::array<std::int64_t, 2>, 4> half = {
      {{1, -1}, {1, 0}, {1, 1}, {0, 1}}};
  for (const auto& [key, range] : ranges_) {
    for (std::size_t a = range.first; a < range.second; ++a)
      for (std::size_t b = a + 1; b < range.second; ++b)
        f(std::min(order_[a], order_[b]), std::max(order_[a], order_[b]));
    for (const auto& off : half) {
      const CellKey nk{key.first + off[0], key.second + off[1]};
      auto it = std::lower_bound(ranges_.begin(), ranges_.end(), nk,
                                 [](const auto& r, const CellKey& k) { return r.first < k; });
      if (it == ranges_.end() || it->first != nk) continue;
      for (std::size_t a = range.first; a < range.second; ++a)
        for (std::size_t b = it->second.first; b < it->second.second; ++b)
          f(std::min(order_[a], order_[b]), std::max(order_[a], order_[b]));
    }
  }
}

std::vector<std::pair<std::size_t, std::size_t>> CellIndex::candidate_pairs() const {
  std::vector<std::pair<std::size_t, std::size_t>> out;
  for_each_pair([&](std::size_t i, std::size_t j) {
    out.emplace_back(i, j);
    out.emplace_back(j, i);
  });
  std::sort(out.begin(), out.end());
  return out;
}

CellIndex build_cell_index(const Configuration& cfg, double interaction_diameter) {
  if (!(interaction_diameter > 0)) throw ValidationError("interaction diameter must be positive");
  return CellIndex(cfg, interaction_diameter);
}

// --- elementary operations -----------------------------------------------------------

void brownian_step(Configuration& cfg, double dt, const MassFunctions& mf, Rng& rng) {
  if (!(dt >= 0)) throw ValidationError("dt must be nonnegative");
  if (dt == 0) return;
  for (auto& e : cfg.entries()) {
    const double s = std::sqrt(2.0 * mf.d(e.particle.mass) * dt);
    const double gx = rng.normal();
    const double gy = rng.normal();
    e.particle.position.x += s * gx;
    e.particle.position.y += s * gy;
  }
}

double range_scale(Mass mi, Mass mj, const KernelSpec& ks, Variant variant) {
  return variant == Variant::mass_radius ? ks.radius(mi) + ks.radius(mj) : 1.0;
}

double pair_rate(const Particle& pi, const Particle& pj, double eps, const KernelSpec& ks,
                 const MassFunctions& mf, Variant variant) {
  const double s = range_scale(pi.mass, pj.mass, ks, variant);
  const double es = eps * s;
  const Vec2 d = pi.position - pj.position;
  if (d.norm2() >= ks.support_radius * ks.support_radius * es * es) return 0.0;
  const double v = ks.V((1.0 / es) * d);
  return v * mf.alpha(pi.mass, pj.mass) / (es * es * log_scale(eps));
}

EventRecord coagulate(Configuration& cfg, ParticleId i, ParticleId j, Rng& rng) {
  if (i == j) throw std::out_of_range("cannot coagulate a particle with itself");
  const auto a = cfg.find(i), b = cfg.find(j);
  if (!a || !b) throw std::out_of_range("coagulate: particle is not alive");
  Particle merged;
  const EventRecord ev = merge_into(cfg, *a, *b, cfg.time(), rng, merged);
  cfg.erase_slots({*a, *b});
  cfg.insert(merged);
  return ev;
}

// --- stepper ---------------------------------------------------------------------------

Simulator::Simulator(Configuration cfg, const SimConfig& sim, KernelSpec ks, MassFunctions mf)
    : cfg_(std::move(cfg)), sim_(sim), ks_(std::move(ks)), mf_(std::move(mf)) {
  sim_.validate();
  if (!ks_.V) throw ValidationError("kernel V is not set");
  if (!(ks_.sup_value > 0) || !(ks_.support_radius > 0))
    throw ValidationError("kernel needs positive sup value and support radius");
  L_ = log_scale(sim_.eps);
  refresh_bounds();
}

void Simulator::refresh_bounds() {
  std::vector<Mass> masses;
  masses.reserve(cfg_.size());
  for (const auto& e : cfg_.entries()) masses.push_back(e.particle.mass);
  std::sort(masses.begin(), masses.end());
  masses.erase(std::unique(masses.begin(), masses.end()), masses.end());
  double amax = 0.0, rmin = std::numeric_limits<double>::infinity(), rmax = 0.0;
  max_d_ = 0.0;
  for (Mass n : masses) {
    max_d_ = std::max(max_d_, mf_.d(n));
    for (Mass m : masses) amax = std::max(amax, mf_.alpha(n, m));
    if (sim_.variant == Variant::mass_radius) {
      rmin = std::min(rmin, ks_.radius(n));
      rmax = std::max(rmax, ks_.radius(n));
    }
  }
  double smin = 1.0, smax = 1.0;
  if (sim_.variant == Variant::mass_radius && !masses.empty()) {
    smin = 2 * rmin;
    smax = 2 * rmax;
  }
  reach_ = ks_.support_radius * sim_.eps * smax;
  rate_bound_ = ks_.sup_value * amax / (sim_.eps * sim_.eps * smin * smin * L_);
}

std::size_t Simulator::substeps_for(double h) const {
  const double x = rate_bound_ * h / sim_.rate_cap;
  return x <= 1.0 ? 1 : std::size_t(std::ceil(x));
}

void Simulator::rebuild() {
  ++rebuilds_;
  const auto& es = cfg_.entries();
  const double list_range = reach_ + skin_;
  pairs_.clear();
  if (es.size() >= 2) {
    CellIndex idx(cfg_, list_range);
    const double r2 = list_range * list_range;
    idx.for_each_pair([&](std::size_t i, std::size_t j) {
      if ((es[i].particle.position - es[j].particle.position).norm2() < r2)
        pairs_.emplace_back(std::uint32_t(i), std::uint32_t(j));
    });
    std::sort(pairs_.begin(), pairs_.end());
  }
  ref_pos_.resize(es.size());
  for (std::size_t i = 0; i < es.size(); ++i) ref_pos_[i] = es[i].particle.position;
  dirty_ = false;
}

void Simulator::substep(double h, Rng& rng, EventLog& log) {
  auto& es = cfg_.entries();
  // The skin lets the pair list survive about 25 substeps of diffusion.
  const double sigma = sim_.diffusion ? std::sqrt(2.0 * max_d_ * h) : 0.0;
  const double want_skin = std::max(reach_, 40.0 * sigma);
  if (want_skin > skin_ || want_skin < 0.25 * skin_) {
    skin_ = want_skin;
    dirty_ = true;
  }
  if (sim_.diffusion) {
    const double lim2 = 0.25 * skin_ * skin_;
    bool moved_far = false;
    for (std::size_t k = 0; k < es.size(); ++k) {
      auto& p = es[k].particle;
      const double s = std::sqrt(2.0 * mf_.d(p.mass) * h);
      const double gx = rng.normal();
      const double gy = rng.normal();
      p.position.x += s * gx;
      p.position.y += s * gy;
      if (!dirty_ && !moved_far && (p.position - ref_pos_[k]).norm2() >= lim2) moved_far = true;
    }
    if (moved_far) dirty_ = true;
  }
  if (dirty_) rebuild();
  ++total_substeps_;

  const double t_end = cfg_.time() + h;
  const double R0 = ks_.support_radius;
  std::vector<std::pair<std::uint32_t, std::uint32_t>> fired;
  for (const auto& [a, b] : pairs_) {
    const Particle& pa = es[a].particle;
    const Particle& pb = es[b].particle;
    const double s = range_scale(pa.mass, pb.mass, ks_, sim_.variant);
    const double es_ = sim_.eps * s;
    const Vec2 d = pa.position - pb.position;
    if (d.norm2() >= R0 * R0 * es_ * es_) continue;
    const double pref = 1.0 / (es_ * es_ * L_);
    const double vab = ks_.V((1.0 / es_) * d);
    const double vba = ks_.V((-1.0 / es_) * d);
    const double lab = pref * vab * mf_.alpha(pa.mass, pb.mass);
    const double lba = pref * vba * mf_.alpha(pb.mass, pa.mass);
    if (probe_) {
      if (pa.mass == probe_->M1 && pb.mass == probe_->M2)
        probe_->integral += h * lab / L_ * probe_->J(pa.position) * probe_->Jbar(pb.position);
      if (pb.mass == probe_->M1 && pa.mass == probe_->M2)
        probe_->integral += h * lba / L_ * probe_->J(pb.position) * probe_->Jbar(pa.position);
    }
    if (lab > 0 && rng.uniform() < -std::expm1(-lab * h)) fired.emplace_back(a, b);
    if (lba > 0 && rng.uniform() < -std::expm1(-lba * h)) fired.emplace_back(b, a);
  }
  if (fired.empty()) {
    cfg_.set_time(t_end);
    return;
  }
  for (std::size_t k = fired.size(); k > 1; --k) {
    const auto r = std::size_t(rng.uniform() * double(k));
    std::swap(fired[k - 1], fired[std::min(r, k - 1)]);
  }
  std::vector<char> dead(es.size(), 0);
  std::vector<std::size_t> erase;
  std::vector<Particle> born;
  for (const auto& [a, b] : fired) {
    if (dead[a] || dead[b]) continue;
    Particle merged;
    log.push_back(merge_into(cfg_, a, b, t_end, rng, merged));
    dead[a] = dead[b] = 1;
    erase.push_back(a);
    erase.push_back(b);
    born.push_back(merged);
  }
  cfg_.erase_slots(std::move(erase));
  for (const auto& p : born) cfg_.insert(p);
  cfg_.set_time(t_end);
  refresh_bounds();
  dirty_ = true;
}

EventLog Simulator::step(Rng& rng) { return step(sim_.dt, rng); }

EventLog Simulator::step(double h, Rng& rng) {
  if (!(h >= 0)) throw ValidationError("step length must be nonnegative");
  EventLog log;
  const double t0 = cfg_.time();
  double done = 0.0;
  // Re-plan the remaining substeps after each coagulation, since new masses
  // may raise the rate bound.
  while (done < h) {
    const double remaining = h - done;
    const std::size_t k = substeps_for(remaining);
    const double hs = remaining / double(k);
    const double bound = rate_bound_;
    for (std::size_t s = 0; s < k; ++s) {
      const std::size_t before = log.size();
      substep(hs, rng, log);
      done = (s + 1 == k) ? h : done + hs;
      if (log.size() != before && rate_bound_ > bound) break;
    }
  }
  cfg_.set_time(t0 + h);
  return log;
}

EventLog step(Configuration& cfg, const SimConfig& sim, const KernelSpec& ks,
              const MassFunctions& mf, Rng& rng) {
  Simulator s(std::move(cfg), sim, ks, mf);
  EventLog log = s.step(rng);
  cfg = std::move(s.configuration());
  return log;
}

// --- measures and diagnostics -------------------------------------------------------------

EmpiricalMeasure empirical_measure(const Configuration& cfg, double eps) {
  EmpiricalMeasure em;
  em.time = cfg.time();
  em.weight = 1.0 / log_scale(eps);
  for (const auto& e : cfg.entries()) em.points[e.particle.mass].push_back(e.particle.position);
  return em;
}

double integrate_test_function(const EmpiricalMeasure& em, const TestFunction& J, Mass n) {
  auto it = em.points.find(n);
  if (it == em.points.end()) return 0.0;
  double s = 0.0;
  for (const auto& x : it->second) s += J(x);
  return em.weight * s;
}

double q_functional(const Configuration& cfg, double eps, const TestFunction& J,
                    const TestFunction& Jbar, Mass M1, Mass M2, const KernelSpec& ks,
                    const MassFunctions& mf) {
  const double L = log_scale(eps);
  const double reach = ks.support_radius * eps;
  const auto& es = cfg.entries();
  double s = 0.0;
  auto add = [&](const Particle& p, const Particle& q) {
    if (p.mass != M1 || q.mass != M2) return;
    const double v = ks.V((1.0 / eps) * (p.position - q.position));
    if (v == 0.0) return;
    s += mf.alpha(p.mass, q.mass) * v / (eps * eps) * J(p.position) * Jbar(q.position);
  };
  if (es.size() < 2) return 0.0;
  build_cell_index(cfg, reach).for_each_pair([&](std::size_t i, std::size_t j) {
    add(es[i].particle, es[j].particle);
    add(es[j].particle, es[i].particle);
  });
  return s / (L * L);
}

namespace {

// Sorted (lattice node, mollified density) list for the mass-n points.
std::vector<std::pair<CellKey, double>> splat(const std::vector<Vec2>& pts, double weight,
                                              const MollifierSpec& mol, double hq) {
  std::vector<std::pair<CellKey, double>> acc;
  const double R = mol.support_radius * mol.delta;
  for (const auto& x : pts) {
    const auto a0 = std::int64_t(std::ceil((x.x - R) / hq));
    const auto a1 = std::int64_t(std::floor((x.x + R) / hq));
    const auto b0 = std::int64_t(std::ceil((x.y - R) / hq));
    const auto b1 = std::int64_t(std::floor((x.y + R) / hq));
    for (auto a = a0; a <= a1; ++a)
      for (auto b = b0; b <= b1; ++b) {
        const double v = mol.scaled(x - Vec2{double(a) * hq, double(b) * hq});
        if (v != 0.0) acc.push_back({{a, b}, weight * v});
      }
  }
  std::sort(acc.begin(), acc.end(), [](const auto& p, const auto& q) { return p.first < q.first; });
  std::vector<std::pair<CellKey, double>> out;
  for (const auto& [k, v] : acc) {
    if (!out.empty() && out.back().first == k)
      out.back().second += v;
    else
      out.push_back({k, v});
  }
  return out;
}

}  // namespace

double stosszahlansatz_rhs(const EmpiricalMeasure& em, const MollifierSpec& mol,
                           const TestFunction& J, const TestFunction& Jbar, Mass M1, Mass M2,
                           double beta, int cells_per_delta) {
  if (!(mol.delta > 0)) throw ValidationError("mollifier scale must be positive");
  if (cells_per_delta < 8)
    throw ValidationError("quadrature grid must resolve delta with at least 8 cells");
  if (beta == 0.0) return 0.0;
  auto i1 = em.points.find(M1), i2 = em.points.find(M2);
  if (i1 == em.points.end() || i2 == em.points.end()) return 0.0;
  const double hq = mol.delta / cells_per_delta;
  const auto g1 = splat(i1->second, em.weight, mol, hq);
  const auto g2 = M1 == M2 ? g1 : splat(i2->second, em.weight, mol, hq);
  double s = 0.0;
  std::size_t p = 0, q = 0;
  while (p < g1.size() && q < g2.size()) {
    if (g1[p].first < g2[q].first) {
      ++p;
    } else if (g2[q].first < g1[p].first) {
      ++q;
    } else {
      const Vec2 w{double(g1[p].first.first) * hq, double(g1[p].first.second) * hq};
      s += J(w) * Jbar(w) * g1[p].second * g2[q].second;
      ++p;
      ++q;
    }
  }
  return beta * hq * hq * s;
}

// --- trajectories -----------------------------------------------------------------------------

RunRecord run_from(Configuration initial, const SimConfig& sim, const KernelSpec& ks,
                   const MassFunctions& mf, const std::vector<double>& snapshot_times,
                   const StosszahlansatzProbe* probe) {
  sim.validate();
  std::vector<double> targets = snapshot_times;
  for (double t : targets)
    if (!(t >= 0 && t <= sim.T)) throw ValidationError("snapshot time outside [0, T]");
  std::sort(targets.begin(), targets.end());
  targets.erase(std::unique(targets.begin(), targets.end()), targets.end());

  RunRecord rec;
  rec.seed = sim.seed;
  rec.initial_count = initial.size();
  rec.initial_mass = initial.total_mass();
  initial.set_time(0.0);

  Simulator s(std::move(initial), sim, ks, mf);
  Rng rng(derive_seed(sim.seed, 1));
  QProbe qp;
  std::vector<MollifierSpec> mols;
  std::vector<double> rhs_prev;
  auto rhs_now = [&]() {
    std::vector<double> v;
    const auto em = empirical_measure(s.configuration(), sim.eps);
    for (const auto& m : mols)
      v.push_back(stosszahlansatz_rhs(em, m, probe->J, probe->Jbar, probe->M1, probe->M2,
                                      probe->beta, probe->cells_per_delta));
    return v;
  };
  if (probe) {
    qp.J = probe->J;
    qp.Jbar = probe->Jbar;
    qp.M1 = probe->M1;
    qp.M2 = probe->M2;
    s.attach_probe(&qp);
    for (double d : probe->deltas) mols.push_back(MollifierSpec::default_bump(d));
    rhs_prev = rhs_now();
    rec.probe_t.push_back(0.0);
    rec.q_integral.push_back(0.0);
    rec.rhs_integral.push_back(std::vector<double>(mols.size(), 0.0));
  }

  std::size_t next_target = 0;
  auto take_snapshots = [&](double t) {
    while (next_target < targets.size() && targets[next_target] <= t) {
      Configuration c = s.configuration();
      c.set_time(targets[next_target]);
      rec.snapshots.push_back({targets[next_target], std::move(c)});
      ++next_target;
    }
  };
  take_snapshots(0.0);

  double t = 0.0;
  std::uint64_t k = 0;
  while (t < sim.T) {
    double grid_next = std::min(double(k + 1) * sim.dt, sim.T);
    double next = grid_next;
    if (next_target < targets.size()) next = std::min(next, targets[next_target]);
    if (next >= grid_next) ++k;
    auto ev = s.step(next - t, rng);
    rec.events.insert(rec.events.end(), ev.begin(), ev.end());
    s.configuration().set_time(next);
    if (probe) {
      auto cur = rhs_now();
      auto acc = rec.rhs_integral.back();
      for (std::size_t m = 0; m < cur.size(); ++m)
        acc[m] += 0.5 * (next - t) * (cur[m] + rhs_prev[m]);
      rhs_prev = std::move(cur);
      rec.probe_t.push_back(next);
      rec.q_integral.push_back(qp.integral);
      rec.rhs_integral.push_back(std::move(acc));
    }
    t = next;
    take_snapshots(t);
  }
  rec.substeps = s.total_substeps();
  rec.final_cfg = s.configuration();
  return rec;
}

RunRecord run(const SimConfig& sim, const InitialData& id, const KernelSpec& ks,
              const MassFunctions& mf, const std::vector<double>& snapshot_times,
              const StosszahlansatzProbe* probe) {
  sim.validate();
  Configuration c = sample_initial_configuration(id, sim.eps, derive_seed(sim.seed, 0));
  return run_from(std::move(c), sim, ks, mf, snapshot_times, probe);
}

}  // namespace coag2d
