#include "coag2d/harness.hpp"

#include <chrono>
#include <cmath>
#include <numbers>
#include <sstream>

#include "json.hpp"

namespace coag2d {

using nlohmann::json;

namespace {

json stat_json(const Stat& s) {
  json j = {{"mean", s.mean}, {"n", s.n}};
  if (s.has_stderr()) {
    j["stderr"] = s.stderr_;
    j["sd"] = s.sd;
  } else {
    j["stderr"] = nullptr;
  }
  return j;
}

json provenance_json(const Provenance& p) {
  return {{"config_text", p.config_text},
          {"config_hash", p.config_hash},
          {"seeds", p.seeds},
          {"version", p.version},
          {"threads", p.threads}};
}

double smooth_bump(Vec2 x, Vec2 c, double r) {
  const double u = (x - c).norm2() / (r * r);
  return u < 1.0 ? (1.0 - u) * (1.0 - u) : 0.0;
}

}  // namespace

Stat summarize(std::vector<double> v) {
  Stat s;
  s.n = v.size();
  if (v.empty()) {
    s.mean = s.sd = s.stderr_ = std::nan("");
    return s;
  }
  std::sort(v.begin(), v.end());
  double sum = 0.0;
  for (double x : v) sum += x;
  s.mean = sum / double(v.size());
  if (v.size() < 2) {
    s.sd = s.stderr_ = std::nan("");
    return s;
  }
  double ss = 0.0;
  for (double x : v) ss += (x - s.mean) * (x - s.mean);
  s.sd = std::sqrt(ss / double(v.size() - 1));
  s.stderr_ = s.sd / std::sqrt(double(v.size()));
  return s;
}

bool nonincreasing_3sigma(const std::vector<Stat>& seq) {
  for (std::size_t i = 1; i < seq.size(); ++i) {
    const double se = std::hypot(seq[i].has_stderr() ? seq[i].stderr_ : 0.0,
                                 seq[i - 1].has_stderr() ? seq[i - 1].stderr_ : 0.0);
    if (!(seq[i].mean <= seq[i - 1].mean + 3.0 * se)) return false;
  }
  return true;
}

std::vector<std::uint64_t> ensemble_seeds(const ExperimentConfig& cfg) {
  std::vector<std::uint64_t> s(std::size_t(cfg.ensemble));
  for (std::size_t i = 0; i < s.size(); ++i) s[i] = derive_seed(cfg.seed, i);
  return s;
}

Provenance make_provenance(const ExperimentConfig& cfg) {
  Provenance p;
  p.config_text = cfg.resolved_text();
  p.config_hash = cfg.hash();
  p.seeds = ensemble_seeds(cfg);
  p.threads = cfg.threads;
  return p;
}

double initial_length_scale(const InitialData& id) {
  double l = 0.0;
  for (const auto& comps : id.h)
    for (const auto& p : comps) l = std::max(l, p.center.norm() + p.scale);
  return l > 0 ? l : 1.0;
}

std::vector<BatteryItem> test_battery(double l) {
  return {
      {"one", [](Vec2) { return 1.0; }},
      {"bump_center", [l](Vec2 x) { return smooth_bump(x, {0.0, 0.0}, l); }},
      {"bump_shifted", [l](Vec2 x) { return smooth_bump(x, {0.5 * l, 0.0}, 0.5 * l); }},
      {"x_weighted_bump", [l](Vec2 x) { return (x.x / l) * smooth_bump(x, {0.0, 0.0}, l); }},
  };
}

// --- kinetic limit ------------------------------------------------------------------------

std::vector<MassDensityField> kinetic_limit_pde(const ExperimentConfig& cfg) {
  PdeConfig pc = cfg.pde;
  pc.mode = PdeMode::planar;
  const auto& mf = cfg.model.mf;
  const BetaTable beta(mf, pc.M_max);
  const auto f0 = field_from_initial_data(cfg.model.initial, pc);
  double T = 0.0;
  for (double t : cfg.snapshot_times) T = std::max(T, t);
  return solve(f0, pc, mf, beta, T, cfg.snapshot_times);
}

namespace {

struct RunSummary {
  std::uint64_t seed = 0;
  std::vector<double> items;
  double battery = 0.0;
  std::vector<double> M0;
  std::vector<double> err, q, rhs;
};

KineticLimitLevel run_level(const ExperimentConfig& cfg, double eps,
                            const std::vector<MassDensityField>& fields,
                            const std::vector<double>& times) {
  const auto t0 = std::chrono::steady_clock::now();
  const auto& mf = cfg.model.mf;
  const auto battery = test_battery(initial_length_scale(cfg.model.initial));
  const std::vector<Mass> masses = {1, 2};
  StosszahlansatzProbe probe;
  probe.J = battery[1].J;
  probe.Jbar = battery[1].J;
  probe.M1 = cfg.M1;
  probe.M2 = cfg.M2;
  probe.deltas = cfg.deltas;
  probe.beta = beta(cfg.M1, cfg.M2, mf);
  probe.cells_per_delta = cfg.cells_per_delta;

  const auto seeds = ensemble_seeds(cfg);
  const double L = log_scale(eps);
  auto one = [&](std::size_t i) {
    SimConfig sim = cfg.sim;
    sim.eps = eps;
    sim.seed = seeds[i];
    sim.T = times.empty() ? 0.0 : *std::max_element(times.begin(), times.end());
    const auto rec = run(sim, cfg.model.initial, cfg.model.ks, mf, times, &probe);
    RunSummary s;
    s.seed = seeds[i];
    for (std::size_t k = 0; k < rec.snapshots.size(); ++k) {
      const auto em = empirical_measure(rec.snapshots[k].cfg, eps);
      for (const auto& b : battery)
        for (Mass n : masses) s.items.push_back(weak_error(em, fields[k], b.J, n));
      s.M0.push_back(double(rec.snapshots[k].cfg.size()) / L);
    }
    double sum = 0.0;
    for (double v : s.items) sum += v;
    s.battery = s.items.empty() ? 0.0 : sum / double(s.items.size());
    for (std::size_t d = 0; d < probe.deltas.size(); ++d) {
      const double q = rec.q_integral.back(), r = rec.rhs_integral.back()[d];
      s.q.push_back(q);
      s.rhs.push_back(r);
      s.err.push_back(std::abs(q - r));
    }
    return s;
  };
  auto runs = parallel_map(seeds.size(), cfg.threads, one);
  std::sort(runs.begin(), runs.end(), [](const auto& a, const auto& b) { return a.seed < b.seed; });

  KineticLimitLevel lvl;
  lvl.eps = eps;
  lvl.N = initial_particle_count(cfg.model.initial.Z(), eps);
  lvl.runs = runs.size();
  lvl.times = times;
  for (double t : times)
    for (const auto& b : battery)
      for (Mass n : masses) {
        std::ostringstream os;
        os << b.name << "/n=" << n << "/t=" << t;
        lvl.item_labels.push_back(os.str());
      }
  auto column = [&](auto member, std::size_t k) {
    std::vector<double> v;
    for (const auto& r : runs) v.push_back((r.*member)[k]);
    return summarize(std::move(v));
  };
  // Item labels above are nested t / item / n; the per-run vector is nested
  // the same way since snapshots are in time order.
  for (std::size_t k = 0; k < lvl.item_labels.size(); ++k) lvl.item_errors.push_back(column(&RunSummary::items, k));
  {
    std::vector<double> v;
    for (const auto& r : runs) v.push_back(r.battery);
    lvl.battery_error = summarize(std::move(v));
  }
  for (std::size_t k = 0; k < times.size(); ++k) {
    lvl.M0_sim.push_back(column(&RunSummary::M0, k));
    lvl.M0_pde.push_back(fields[k].M0());
    const auto& s = lvl.M0_sim.back();
    lvl.M0_agree.push_back(s.has_stderr() && std::abs(s.mean - lvl.M0_pde.back()) <= 3.0 * s.stderr_);
  }
  for (std::size_t d = 0; d < cfg.deltas.size(); ++d) {
    lvl.err_abs.push_back(column(&RunSummary::err, d));
    lvl.q_integral.push_back(column(&RunSummary::q, d));
    lvl.rhs_integral.push_back(column(&RunSummary::rhs, d));
  }
  lvl.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return lvl;
}

}  // namespace

KineticLimitReport run_kinetic_limit(const ExperimentConfig& cfg) {
  KineticLimitReport rep;
  rep.provenance = make_provenance(cfg);
  rep.deltas = cfg.deltas;
  std::vector<double> times = cfg.snapshot_times;
  std::sort(times.begin(), times.end());
  times.erase(std::unique(times.begin(), times.end()), times.end());
  ExperimentConfig c = cfg;
  c.snapshot_times = times;
  const auto fields = kinetic_limit_pde(c);
  std::vector<double> eps = cfg.eps_list;
  std::sort(eps.begin(), eps.end(), std::greater<>());
  for (double e : eps) rep.levels.push_back(run_level(c, e, fields, times));

  std::vector<Stat> be;
  rep.M0_within_3se = true;
  for (const auto& l : rep.levels) {
    be.push_back(l.battery_error);
    for (bool ok : l.M0_agree) rep.M0_within_3se = rep.M0_within_3se && ok;
  }
  rep.weak_error_trend = nonincreasing_3sigma(be);
  rep.err_trend = true;
  for (std::size_t d = 0; d < rep.deltas.size(); ++d) {
    std::vector<Stat> seq;
    for (const auto& l : rep.levels) seq.push_back(l.err_abs[d]);
    rep.err_trend_per_delta.push_back(nonincreasing_3sigma(seq));
    rep.err_trend = rep.err_trend && rep.err_trend_per_delta.back();
  }
  return rep;
}

KineticLimitReport run_stosszahlansatz(const ExperimentConfig& cfg) { return run_kinetic_limit(cfg); }

std::string KineticLimitReport::to_json() const {
  json j;
  j["weak_error_trend"] = weak_error_trend;
  j["M0_within_3se"] = M0_within_3se;
  j["err_trend"] = err_trend;
  j["err_trend_per_delta"] = err_trend_per_delta;
  j["deltas"] = deltas;
  for (const auto& l : levels) {
    json lj = {{"eps", l.eps}, {"N", l.N}, {"runs", l.runs}, {"times", l.times},
               {"battery_error", stat_json(l.battery_error)}, {"M0_pde", l.M0_pde},
               {"M0_agree", l.M0_agree}, {"wall_seconds", l.wall_seconds}};
    for (std::size_t k = 0; k < l.item_labels.size(); ++k)
      lj["items"][l.item_labels[k]] = stat_json(l.item_errors[k]);
    for (const auto& s : l.M0_sim) lj["M0_sim"].push_back(stat_json(s));
    for (std::size_t d = 0; d < l.err_abs.size(); ++d)
      lj["stosszahlansatz"].push_back({{"delta", deltas[d]},
                                       {"abs_err", stat_json(l.err_abs[d])},
                                       {"q_integral", stat_json(l.q_integral[d])},
                                       {"rhs_integral", stat_json(l.rhs_integral[d])}});
    j["levels"].push_back(lj);
  }
  j["provenance"] = provenance_json(provenance);
  return j.dump(2);
}

std::vector<NamedFigure> kinetic_limit_figures(const KineticLimitReport& rep) {
  Plot weak{"Mean weak error of the test battery", "|log eps|", "E|weak error|", {}, {}, false};
  Series ws{"battery mean", {}, {}, true};
  for (const auto& l : rep.levels) {
    ws.x.push_back(log_scale(l.eps));
    ws.y.push_back(l.battery_error.mean);
  }
  weak.series.push_back(ws);
  Plot m0{"Particle count density M0(t)", "t", "M0", {}, {}, false};
  if (!rep.levels.empty()) m0.series.push_back({"PDE", rep.levels[0].times, rep.levels[0].M0_pde, true});
  for (const auto& l : rep.levels) {
    Series s{"sim eps=" + std::to_string(l.eps), l.times, {}, true};
    for (const auto& st : l.M0_sim) s.y.push_back(st.mean);
    m0.series.push_back(s);
  }
  Plot err{"Stosszahlansatz error", "|log eps|", "E|Err|", {}, {}, false};
  for (std::size_t d = 0; d < rep.deltas.size(); ++d) {
    Series s{"delta=" + std::to_string(rep.deltas[d]), {}, {}, true};
    for (const auto& l : rep.levels) {
      s.x.push_back(log_scale(l.eps));
      s.y.push_back(l.err_abs[d].mean);
    }
    err.series.push_back(s);
  }
  return {{"weak_error.svg", weak}, {"M0.svg", m0}, {"stosszahlansatz.svg", err}};
}

std::vector<CostProjection> project_kinetic_limit_cost(const ExperimentConfig& cfg, double pilot_seconds) {
  std::vector<CostProjection> out;
  std::vector<double> times = cfg.snapshot_times;
  double T = 0.0;
  for (double t : times) T = std::max(T, t);
  // M0(t) from the PDE on a fine time grid for the particle-count integral.
  ExperimentConfig c = cfg;
  c.snapshot_times.clear();
  for (int k = 0; k <= 20; ++k) c.snapshot_times.push_back(T * k / 20.0);
  const auto fields = kinetic_limit_pde(c);
  double m0_integral = 0.0;
  for (std::size_t k = 1; k < fields.size(); ++k)
    m0_integral += 0.5 * (fields[k].t - fields[k - 1].t) * (fields[k].M0() + fields[k - 1].M0());

  for (double eps : cfg.eps_list) {
    SimConfig sim = cfg.sim;
    sim.eps = eps;
    sim.seed = cfg.seed;
    Configuration init = sample_initial_configuration(cfg.model.initial, eps, derive_seed(cfg.seed, 0));
    CostProjection p;
    p.eps = eps;
    p.N = init.size();
    Simulator s(std::move(init), sim, cfg.model.ks, cfg.model.mf);
    p.substeps_per_unit_time = double(s.substeps_for(sim.dt)) / sim.dt;
    const double h = 100.0 / p.substeps_per_unit_time;
    Rng rng(derive_seed(cfg.seed, 1));
    double particle_substeps = 0.0;
    const auto t0 = std::chrono::steady_clock::now();
    double wall = 0.0;
    do {
      const std::size_t before = s.total_substeps();
      const double n = double(s.configuration().size());
      s.step(h, rng);
      particle_substeps += n * double(s.total_substeps() - before);
      wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    } while (wall < pilot_seconds);
    p.seconds_per_particle_substep = wall / particle_substeps;
    p.particle_substeps = double(cfg.ensemble) * p.substeps_per_unit_time * log_scale(eps) * m0_integral;
    p.projected_seconds = p.particle_substeps * p.seconds_per_particle_substep / double(std::max(1, cfg.threads));
    out.push_back(p);
  }
  return out;
}

// --- potential sweep -------------------------------------------------------------------------

PotentialSweepReport run_potential_sweep(const ExperimentConfig& cfg) {
  PotentialSweepReport rep;
  rep.reports = parallel_map(cfg.tau_list.size(), cfg.threads, [&](std::size_t i) {
    return verify_potential_limit(cfg.model.ks, cfg.tau_list[i], cfg.potential_eps, cfg.k_radius,
                                  cfg.potential_grid);
  });
  auto rel_ok = [&](double got, double want) {
    return want == 0.0 ? std::abs(got) <= 1e-12 : std::abs(got - want) <= rep.tolerance * std::abs(want);
  };
  rep.center_ok = rep.lambda_ok = rep.lambda_range_ok = rep.fit_ok = rep.factor_chain_ok = true;
  for (const auto& r : rep.reports) {
    rep.center_ok = rep.center_ok && rel_ok(r.center_limit, r.expected_center());
    rep.lambda_ok = rep.lambda_ok && rel_ok(r.lambda_limit, r.expected_lambda());
    if (r.tau > 0) {
      for (const auto& row : r.rows)
        rep.lambda_range_ok = rep.lambda_range_ok && row.lambda_eps > 0 && row.lambda_eps < 1.05;
      rep.fit_ok = rep.fit_ok && r.fit_r2 >= 0.9;
    }
    // With d(n) + d(m) = 1 the propensity alpha equals tau.
    const double b = beta_from(r.tau, 1.0);
    rep.factor_chain_ok = rep.factor_chain_ok && rel_ok(r.tau * r.factor_limit, b);
  }
  return rep;
}

std::string PotentialSweepReport::csv() const {
  std::ostringstream os;
  os.precision(17);
  os << "tau,eps,log_eps,sup_error,lambda_eps,factor\n";
  for (const auto& r : reports)
    for (const auto& row : r.rows)
      os << row.tau << ',' << row.eps << ',' << row.log_eps << ',' << row.sup_error << ','
         << row.lambda_eps << ',' << row.factor << '\n';
  return os.str();
}

std::string PotentialSweepReport::to_json() const {
  json j;
  j["tolerance"] = tolerance;
  j["center_ok"] = center_ok;
  j["lambda_ok"] = lambda_ok;
  j["lambda_range_ok"] = lambda_range_ok;
  j["fit_ok"] = fit_ok;
  j["factor_chain_ok"] = factor_chain_ok;
  for (const auto& r : reports)
    j["tau"].push_back({{"tau", r.tau},
                        {"center_limit", r.center_limit},
                        {"expected_center", r.expected_center()},
                        {"lambda_limit", r.lambda_limit},
                        {"expected_lambda", r.expected_lambda()},
                        {"factor_limit", r.factor_limit},
                        {"expected_factor", r.expected_factor()},
                        {"fit_c", r.fit_c},
                        {"fit_r2", r.fit_r2},
                        {"sup_error_decreasing", r.sup_error_decreasing}});
  return j.dump(2);
}

std::vector<NamedFigure> PotentialSweepReport::figures() const {
  std::vector<NamedFigure> out;
  for (const auto& r : reports) {
    char tag[32];
    std::snprintf(tag, sizeof tag, "%.4g", r.tau);
    Plot c{"Centre value of w, tau = " + std::string(tag), "1/|log eps|", "w(0)", {}, {r.expected_center()}, false};
    Series s{"w(0)", {}, {}, true};
    Plot e{"Sup error, tau = " + std::string(tag), "|log eps|", "e(eps)", {}, {}, false};
    Series se{"e(eps)", {}, {}, true}, fit{"c/|log eps|", {}, {}, true};
    for (const auto& row : r.rows) {
      s.x.push_back(1.0 / row.log_eps);
      s.y.push_back(row.center);
      se.x.push_back(row.log_eps);
      se.y.push_back(row.sup_error);
      fit.x.push_back(row.log_eps);
      fit.y.push_back(r.fit_c / row.log_eps);
    }
    s.x.push_back(0.0);
    s.y.push_back(r.center_limit);
    c.series.push_back(s);
    e.series = {se, fit};
    out.push_back({"potential_center_tau" + std::string(tag) + ".svg", c});
    out.push_back({"potential_error_tau" + std::string(tag) + ".svg", e});
  }
  return out;
}

// --- mass-dependent range -------------------------------------------------------------------

MassRadiusReport run_mass_radius_comparison(const ExperimentConfig& cfg) {
  MassRadiusReport rep;
  rep.provenance = make_provenance(cfg);
  rep.T = cfg.sim.T;
  if (!(cfg.sim.T > 0)) throw ValidationError("mass-radius comparison needs T > 0");
  const auto seeds = ensemble_seeds(cfg);
  auto rates = [&](Variant v) {
    auto vals = parallel_map(seeds.size(), cfg.threads, [&](std::size_t i) {
      SimConfig sim = cfg.sim;
      sim.variant = v;
      sim.seed = seeds[i];
      const auto rec = run(sim, cfg.model.initial, cfg.model.ks, cfg.model.mf, {});
      return double(rec.events.size()) / sim.T;
    });
    return summarize(std::move(vals));
  };
  rep.standard = rates(Variant::standard);
  rep.mass_radius = rates(Variant::mass_radius);
  rep.overlap = rep.standard.ci95_lo() <= rep.mass_radius.ci95_hi() &&
                rep.mass_radius.ci95_lo() <= rep.standard.ci95_hi();
  return rep;
}

std::string MassRadiusReport::to_json() const {
  json j = {{"T", T},
            {"standard", stat_json(standard)},
            {"mass_radius", stat_json(mass_radius)},
            {"ci95_overlap", overlap},
            {"provenance", provenance_json(provenance)}};
  return j.dump(2);
}

}  // namespace coag2d
