// coag2d command-line front end.
//
//   coag2d simulate | pde | potential | kinetic-limit | stosszahlansatz | mass-radius | plot
//
// Exit codes: 0 success, 1 runtime error, 2 invalid input, 3 an asserted
// experimental outcome did not hold.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <numbers>
#include <sstream>

#include "CLI11.hpp"
#include "coag2d/config.hpp"
#include "coag2d/harness.hpp"
#include "coag2d/pde.hpp"
#include "coag2d/plot.hpp"
#include "coag2d/records.hpp"

namespace fs = std::filesystem;
using namespace coag2d;

namespace {

struct Common {
  std::string config;
  std::uint64_t seed = 0;
  bool seed_set = false;
  std::string out;
  int threads = 0;
  std::string format = "jsonl";
};

ExperimentConfig resolve(const Common& c, ExperimentKind kind) {
  ExperimentConfig cfg = c.config.empty() ? default_config(kind) : load_config(c.config);
  if (!c.config.empty() && cfg.kind != kind) {
    // A config written for another verb still supplies model and numerics.
    cfg.kind = kind;
  }
  if (c.seed_set) cfg.seed = c.seed;
  if (!c.out.empty()) cfg.out = c.out;
  if (c.threads > 0) cfg.threads = c.threads;
  fs::create_directories(cfg.out);
  std::ofstream(fs::path(cfg.out) / "config.resolved.ini") << cfg.resolved_text();
  return cfg;
}

void write_file(const fs::path& p, const std::string& s) {
  std::ofstream f(p, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write " + p.string());
  f << s;
}

int cmd_simulate(const Common& c) {
  auto cfg = resolve(c, ExperimentKind::sim_only);
  SimConfig sim = cfg.sim;
  sim.seed = cfg.seed;
  const auto rec = run(sim, cfg.model.initial, cfg.model.ks, cfg.model.mf, cfg.snapshot_times);
  const fs::path out(cfg.out);
  if (c.format == "jsonl") {
    std::ofstream ev(out / "events.jsonl"), sn(out / "snapshots.jsonl");
    write_events_jsonl(ev, rec.events);
    write_snapshots_jsonl(sn, rec.snapshots);
  } else {
    std::ofstream ev(out / "events.csv");
    ev << "t,i,j,m_i,m_j,kept\n";
    ev.precision(17);
    for (const auto& e : rec.events)
      ev << e.t << ',' << e.i << ',' << e.j << ',' << e.m_i << ',' << e.m_j << ',' << (e.kept_i ? 'i' : 'j') << '\n';
    std::ofstream sn(out / "snapshots.csv");
    sn << "t,slot,x,y,mass\n";
    sn.precision(17);
    for (const auto& s : rec.snapshots)
      for (std::size_t k = 0; k < s.cfg.size(); ++k) {
        const auto& p = s.cfg.entries()[k].particle;
        sn << s.t << ',' << k << ',' << p.position.x << ',' << p.position.y << ',' << p.mass << '\n';
      }
  }
  std::printf("particles %zu -> %zu, events %zu, mass %lld -> %lld, substeps %zu\n", rec.initial_count,
              rec.final_cfg.size(), rec.events.size(), (long long)rec.initial_mass,
              (long long)rec.final_cfg.total_mass(), rec.substeps);
  return 0;
}

int cmd_pde(const Common& c) {
  auto cfg = resolve(c, ExperimentKind::pde_only);
  const auto& mf = cfg.model.mf;
  PdeConfig pc = cfg.pde;
  MassDensityField f0;
  if (pc.mode == PdeMode::homogeneous) {
    std::vector<double> v;
    for (Mass n = 1; n <= cfg.model.initial.max_mass(); ++n) v.push_back(cfg.model.initial.mass_integral(n));
    f0 = MassDensityField::homogeneous(v, pc.M_max);
  } else {
    f0 = field_from_initial_data(cfg.model.initial, pc);
  }
  double T = cfg.sim.T;
  for (double t : cfg.snapshot_times) T = std::max(T, t);
  const auto fields = solve(f0, pc, mf, BetaTable(mf, pc.M_max), T, cfg.snapshot_times);
  const fs::path out(cfg.out);
  std::ofstream summary(out / (c.format == "csv" ? "summary.csv" : "summary.jsonl"));
  summary.precision(17);
  if (c.format == "csv") summary << "t,M0,total_mass,overflow_mass\n";
  for (std::size_t k = 0; k < fields.size(); ++k) {
    const auto& f = fields[k];
    const std::string stem = "field_" + std::to_string(k);
    std::ofstream bin(out / (stem + ".bin"), std::ios::binary);
    write_field_binary(bin, f);
    if (c.format == "csv") {
      std::ofstream csv(out / (stem + ".csv"));
      write_field_csv(csv, f);
      summary << f.t << ',' << f.M0() << ',' << f.total_mass() << ',' << f.overflow_mass << '\n';
    } else {
      summary << "{\"t\":" << f.t << ",\"M0\":" << f.M0() << ",\"total_mass\":" << f.total_mass()
              << ",\"overflow_mass\":" << f.overflow_mass << "}\n";
    }
    std::printf("t=%g M0=%.10g mass=%.10g overflow=%.3g\n", f.t, f.M0(), f.total_mass(), f.overflow_mass);
  }
  return 0;
}

int cmd_potential(const Common& c) {
  auto cfg = resolve(c, ExperimentKind::potential_sweep);
  const auto rep = run_potential_sweep(cfg);
  const fs::path out(cfg.out);
  write_file(out / "potential.csv", rep.csv());
  write_file(out / "potential_report.json", rep.to_json());
  emit_plots(rep.figures(), cfg.out, std::cerr);
  for (const auto& r : rep.reports)
    std::printf("tau=%-10.6g w(0)->%.6f (want %.6f)  Lambda->%.6f (want %.6f)  R2=%.4f\n", r.tau,
                r.center_limit, r.expected_center(), r.lambda_limit, r.expected_lambda(), r.fit_r2);
  return rep.ok() ? 0 : 3;
}

int cmd_kinetic(const Common& c, ExperimentKind kind) {
  auto cfg = resolve(c, kind);
  const auto rep = run_kinetic_limit(cfg);
  const fs::path out(cfg.out);
  write_file(out / (kind == ExperimentKind::kinetic_limit ? "kinetic_limit.json" : "stosszahlansatz.json"),
             rep.to_json());
  emit_plots(kinetic_limit_figures(rep), cfg.out, std::cerr);
  for (const auto& l : rep.levels)
    std::printf("eps=%g N=%zu runs=%zu battery E|err|=%.5g +- %.2g\n", l.eps, l.N, l.runs,
                l.battery_error.mean, l.battery_error.stderr_);
  if (kind == ExperimentKind::kinetic_limit) {
    std::printf("weak-error trend %s, M0 within 3 se %s\n", rep.weak_error_trend ? "yes" : "no",
                rep.M0_within_3se ? "yes" : "no");
    return rep.weak_error_trend && rep.M0_within_3se ? 0 : 3;
  }
  std::printf("Err trend %s\n", rep.err_trend ? "yes" : "no");
  return rep.err_trend ? 0 : 3;
}

int cmd_mass_radius(const Common& c) {
  auto cfg = resolve(c, ExperimentKind::mass_radius);
  const auto rep = run_mass_radius_comparison(cfg);
  write_file(fs::path(cfg.out) / "mass_radius.json", rep.to_json());
  std::printf("events per unit time: standard %.5g +- %.2g, mass_radius %.5g +- %.2g, CI overlap %s\n",
              rep.standard.mean, rep.standard.stderr_, rep.mass_radius.mean, rep.mass_radius.stderr_,
              rep.overlap ? "yes" : "no");
  return rep.overlap ? 0 : 3;
}

// Plots from a potential.csv written by the `potential` verb.
int cmd_plot(const std::string& input, const std::string& out_dir) {
  std::ifstream in(input);
  if (!in) throw ValidationError("cannot open " + input);
  std::string line;
  std::getline(in, line);
  if (line != "tau,eps,log_eps,sup_error,lambda_eps,factor")
    throw ValidationError("plot expects a potential CSV with header tau,eps,log_eps,sup_error,lambda_eps,factor");
  std::map<double, Series> err, lam;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string tok;
    std::vector<double> v;
    while (std::getline(ss, tok, ',')) v.push_back(std::stod(tok));
    if (v.size() != 6) throw ValidationError("bad potential CSV row: " + line);
    char name[32];
    std::snprintf(name, sizeof name, "tau=%.4g", v[0]);
    err[v[0]].name = lam[v[0]].name = name;
    err[v[0]].x.push_back(v[2]);
    err[v[0]].y.push_back(v[3]);
    lam[v[0]].x.push_back(v[2]);
    lam[v[0]].y.push_back(v[4]);
  }
  Plot pe{"Sup error of w", "|log eps|", "e(eps)", {}, {}, false};
  Plot pl{"Lambda_eps", "|log eps|", "Lambda", {}, {}, false};
  for (auto& [t, s] : err) pe.series.push_back(s);
  for (auto& [t, s] : lam) {
    pl.series.push_back(s);
    pl.reference_y.push_back(t / (2 * std::numbers::pi + t));
  }
  const std::string dir = out_dir.empty() ? "." : out_dir;
  for (const auto& p : emit_plots({{"sup_error.svg", pe}, {"lambda.svg", pl}}, dir, std::cerr))
    std::printf("wrote %s\n", p.c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Coagulating planar Brownian particles: simulation, Smoluchowski PDE and potential solver"};
  app.require_subcommand(1);
  Common common;
  std::string plot_input;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", common.config, "INI configuration file");
    sub->add_option("--seed", common.seed, "Base seed")->each([&](const std::string&) { common.seed_set = true; });
    sub->add_option("--out", common.out, "Output directory");
    sub->add_option("--threads", common.threads, "Worker threads")->check(CLI::PositiveNumber);
    sub->add_option("--format", common.format, "Output format")->check(CLI::IsMember({"csv", "jsonl"}));
  };
  auto* sim = app.add_subcommand("simulate", "Run one particle trajectory");
  auto* pde = app.add_subcommand("pde", "Solve the Smoluchowski system");
  auto* pot = app.add_subcommand("potential", "Potential-limit sweep over tau and eps");
  auto* kin = app.add_subcommand("kinetic-limit", "Particle ensembles against the PDE");
  auto* ssz = app.add_subcommand("stosszahlansatz", "Collision-term factorization error");
  auto* mr = app.add_subcommand("mass-radius", "Standard vs mass-dependent interaction range");
  auto* plot = app.add_subcommand("plot", "Render SVG plots from a potential CSV");
  for (auto* s : {sim, pde, pot, kin, ssz, mr, plot}) add_common(s);
  plot->add_option("--input", plot_input, "potential.csv to plot")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    if (*sim) return cmd_simulate(common);
    if (*pde) return cmd_pde(common);
    if (*pot) return cmd_potential(common);
    if (*kin) return cmd_kinetic(common, ExperimentKind::kinetic_limit);
    if (*ssz) return cmd_kinetic(common, ExperimentKind::stosszahlansatz);
    if (*mr) return cmd_mass_radius(common);
    if (*plot) return cmd_plot(plot_input, common.out);
  } catch (const ValidationError& e) {
    std::fprintf(stderr, "invalid input: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
