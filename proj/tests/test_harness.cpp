#include <algorithm>
#include <cmath>
#include <filesystem>
#include <numbers>
#include <random>
#include <sstream>

#include "coag2d/config.hpp"
#include "coag2d/harness.hpp"
#include "coag2d/plot.hpp"
#include "coag2d/records.hpp"
#include "doctest.h"

using namespace coag2d;
using std::numbers::pi;

TEST_CASE("config: parsing, strict vocabulary and canonical text") {
  const std::string text = R"(
[experiment]
kind = sim_only
seed = 42
ensemble = 3

[model]
alpha = product(2)
d = power_law(0.5,0.25)
gamma = product(2)

[initial]
mass1 = disc(0,0,1,10); bump(2,0,0.5,5)
mass3 = gaussian(0,1,0.3,2)

[sim]
eps = 0.001
dt = 0.02
T = 0.5
variant = mass_radius
)";
  const auto c = parse_config_string(text);
  CHECK(c.seed == 42);
  CHECK(c.ensemble == 3);
  CHECK(c.model.mf.alpha(2, 3) == 12.0);
  CHECK(c.model.mf.d(16) == doctest::Approx(0.25));
  REQUIRE(c.model.initial.h.size() == 3);
  CHECK(c.model.initial.h[0].size() == 2);
  CHECK(c.model.initial.h[1].empty());
  CHECK(c.model.initial.Z() == doctest::Approx(17.0));
  CHECK(c.sim.variant == Variant::mass_radius);

  const auto again = parse_config_string(c.resolved_text());
  CHECK(again.resolved_text() == c.resolved_text());
  CHECK(again.hash() == c.hash());

  CHECK_THROWS_AS(parse_config_string("[sim]\nepsilon = 0.1\n"), ValidationError);
  CHECK_THROWS_AS(parse_config_string("[simulation]\neps = 0.1\n"), ValidationError);
  CHECK_THROWS_AS(parse_config_string("[model]\nalpha = quadratic(1)\n"), ValidationError);
  CHECK_THROWS_AS(parse_config_string("[experiment]\nensemble = 0\n"), ValidationError);
  CHECK_THROWS_AS(parse_config_string("[sim]\neps = 2\n"), ValidationError);

  for (auto k : {ExperimentKind::kinetic_limit, ExperimentKind::stosszahlansatz, ExperimentKind::potential_sweep,
                 ExperimentKind::pde_only, ExperimentKind::sim_only, ExperimentKind::mass_radius}) {
    const auto d = default_config(k);
    CHECK(parse_config_string(d.resolved_text()).hash() == d.hash());
  }
}

TEST_CASE("function specs round-trip through describe") {
  for (const auto& s : {"constant(1.5)", "product(2)", "sum(0.5)", "power_product(1,0.5)"})
    CHECK(parse_pair_function(parse_pair_function(s).describe()).describe() == parse_pair_function(s).describe());
  for (const auto& s : {"constant(0.5)", "power_law(1,0.333)", "tabulated(1,0.5,0.25)"})
    CHECK(parse_mass_function(parse_mass_function(s).describe()).describe() == parse_mass_function(s).describe());
}

TEST_CASE("event and snapshot records round-trip bit-exactly") {
  std::mt19937_64 gen(1);
  std::uniform_real_distribution<double> U(-1e3, 1e3);
  EventLog log;
  for (int k = 0; k < 200; ++k)
    log.push_back({U(gen) * 1e-7, gen(), gen(), Mass(gen() % 1000 + 1), Mass(gen() % 1000 + 1), bool(k % 2)});
  log.push_back({0.1 + 0.2, 0, 1, 1, 1, true});
  std::stringstream ss;
  write_events_jsonl(ss, log);
  CHECK(read_events_jsonl(ss) == log);
  CHECK(event_to_json(log.back()).find("\"kept\":\"i\"") != std::string::npos);

  std::vector<Particle> ps;
  for (int k = 0; k < 50; ++k) ps.push_back({{U(gen), std::nextafter(U(gen), 0.0)}, Mass(k + 1)});
  ps.push_back({{5e-324, -0.0}, 7});
  std::vector<Snapshot> snaps{{0.0, Configuration(ps, 0.0)}, {1.0 / 3.0, Configuration(ps, 1.0 / 3.0)}};
  std::stringstream sn;
  write_snapshots_jsonl(sn, snaps);
  const auto back = read_snapshots_jsonl(sn);
  REQUIRE(back.size() == 2);
  CHECK(back[1].t == 1.0 / 3.0);
  for (std::size_t k = 0; k < ps.size(); ++k) {
    const auto& p = back[1].cfg.entries()[k].particle;
    CHECK(p.position == ps[k].position);
    CHECK(p.mass == ps[k].mass);
  }
  CHECK_THROWS(event_from_json("{\"t\":1}"));
}

TEST_CASE("SVG output is deterministic and skips empty figures") {
  Plot p{"convergence", "x", "y", {{"a", {1, 2, 3}, {0.1, 0.05, 0.02}}, {"b", {2}, {0.3}}}, {0.0}, false};
  CHECK(render_svg(p) == render_svg(p));
  CHECK(render_svg(p).find("<circle") != std::string::npos);
  Plot single{"one", "x", "y", {{"s", {1.0}, {2.0}}}, {}, true};
  const auto svg = render_svg(single);
  CHECK(std::count(svg.begin(), svg.end(), '\n') > 5);
  CHECK(svg.find("polyline") == std::string::npos);

  HeatStrip h{"Err", {"eps=0.01", "eps=0.001"}, {"d=2", "d=4"}, {{0.1, 0.2}, {0.05, 0.1}}};
  CHECK(render_svg(h) == render_svg(h));

  std::ostringstream warn;
  const auto dir = (std::filesystem::temp_directory_path() / "coag2d_plot_test").string();
  const auto written = emit_plots({{"full.svg", p}, {"empty.svg", Plot{"e", "x", "y", {{"none", {}, {}}}, {}, false}}},
                                  dir, warn);
  CHECK(written.size() == 1);
  CHECK(warn.str().find("empty.svg") != std::string::npos);
}

TEST_CASE("summaries are order independent") {
  std::mt19937_64 gen(3);
  std::lognormal_distribution<double> D(0.0, 2.0);
  std::vector<double> v(1000);
  for (auto& x : v) x = D(gen);
  const auto a = summarize(v);
  std::shuffle(v.begin(), v.end(), gen);
  const auto b = summarize(v);
  CHECK(a.mean == b.mean);
  CHECK(a.stderr_ == b.stderr_);
  CHECK(a.stderr_ == doctest::Approx(a.sd / std::sqrt(1000.0)));

  const auto one = summarize({2.5});
  CHECK(one.mean == 2.5);
  CHECK_FALSE(one.has_stderr());
  CHECK(std::isnan(one.stderr_));

  CHECK(nonincreasing_3sigma({{1.0, 0, 0.1, 10}, {1.2, 0, 0.1, 10}, {0.5, 0, 0.1, 10}}));
  CHECK_FALSE(nonincreasing_3sigma({{1.0, 0, 0.01, 10}, {1.2, 0, 0.01, 10}}));
}

TEST_CASE("parallel_map keeps index order and rethrows") {
  const auto v = parallel_map(100, 4, [](std::size_t i) { return i * i; });
  for (std::size_t i = 0; i < 100; ++i) CHECK(v[i] == i * i);
  CHECK_THROWS_AS(parallel_map(10, 3,
                               [](std::size_t i) -> int {
                                 if (i == 7) throw std::runtime_error("boom");
                                 return 0;
                               }),
                  std::runtime_error);
}

namespace {

ExperimentConfig small_kinetic() {
  auto c = default_config(ExperimentKind::kinetic_limit);
  c.model.initial_specs = {"disc(0,0,1,30)"};
  c.model.alpha_spec = "constant(0)";
  c.model.gamma_spec = "constant(1)";
  c.model.M_max = 4;
  c.pde.M_max = 4;
  c.pde.L = 4;
  c.pde.hx = 0.25;
  c.pde.dt = 0.01;
  c.sim.dt = 0.05;
  c.snapshot_times = {0.05, 0.1};
  c.eps_list = {1e-2, 1e-3};
  c.deltas = {0.5};
  c.ensemble = 1;
  return parse_config_string(c.resolved_text());
}

}  // namespace

TEST_CASE("kinetic limit: single run and no coagulation") {
  const auto c = small_kinetic();
  const auto rep = run_kinetic_limit(c);
  REQUIRE(rep.levels.size() == 2);
  CHECK(rep.levels[0].eps > rep.levels[1].eps);
  for (const auto& l : rep.levels) {
    CHECK(l.runs == 1);
    CHECK_FALSE(l.battery_error.has_stderr());
    CHECK(l.err_abs[0].mean == 0.0);
    CHECK(l.q_integral[0].mean == 0.0);
    CHECK(l.rhs_integral[0].mean == 0.0);
    CHECK(l.item_labels.size() == l.item_errors.size());
  }
  CHECK(rep.provenance.seeds.size() == 1);
  CHECK(rep.to_json().find("config_text") != std::string::npos);
}

TEST_CASE("kinetic limit: results do not depend on the worker count") {
  auto c = small_kinetic();
  c.model.alpha_spec = "constant(1)";
  c.ensemble = 4;
  c = parse_config_string(c.resolved_text());
  const auto a = run_kinetic_limit(c);
  c.threads = 3;
  const auto b = run_kinetic_limit(c);
  for (std::size_t k = 0; k < a.levels.size(); ++k) {
    CHECK(a.levels[k].battery_error.mean == b.levels[k].battery_error.mean);
    CHECK(a.levels[k].err_abs[0].mean == b.levels[k].err_abs[0].mean);
    CHECK(a.levels[k].M0_sim[1].mean == b.levels[k].M0_sim[1].mean);
  }
}

TEST_CASE("potential sweep: zero coupling row and monotone limit") {
  auto c = default_config(ExperimentKind::potential_sweep);
  c.tau_list = {0.0, 1.0, 2 * pi};
  c.potential_eps = {1e-3, 1e-6, 1e-9};
  c.potential_grid = {1.0, 32};
  const auto rep = run_potential_sweep(c);
  REQUIRE(rep.reports.size() == 3);
  for (const auto& r : rep.reports[0].rows) {
    CHECK(r.sup_error == 0.0);
    CHECK(r.lambda_eps == 0.0);
    CHECK(r.center == 0.0);
  }
  CHECK(rep.reports[1].lambda_limit > rep.reports[0].lambda_limit);
  CHECK(rep.reports[2].lambda_limit > rep.reports[1].lambda_limit);
  CHECK(rep.csv().rfind("tau,eps,log_eps,sup_error,lambda_eps,factor\n", 0) == 0);
  CHECK(rep.figures().size() >= 2);
}

TEST_CASE("mass-radius comparison") {
  auto c = default_config(ExperimentKind::mass_radius);
  c.ensemble = 40;
  c.model.initial_specs = {"disc(0,0,0.3,6)"};
  c = parse_config_string(c.resolved_text());
  const auto rep = run_mass_radius_comparison(c);
  CHECK(rep.standard.n == 40);
  CHECK(std::abs(rep.standard.mean - rep.mass_radius.mean) <
        3 * std::hypot(rep.standard.stderr_, rep.mass_radius.stderr_));

  c.model.alpha_spec = "constant(0)";
  c = parse_config_string(c.resolved_text());
  const auto quiet = run_mass_radius_comparison(c);
  CHECK(quiet.standard.mean == 0.0);
  CHECK(quiet.mass_radius.mean == 0.0);
}
