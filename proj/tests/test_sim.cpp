#include <cmath>
#include <numbers>
#include <random>

#include "coag2d/sim.hpp"
#include "doctest.h"
#include "oracles.hpp"

using namespace coag2d;
using std::numbers::pi;

namespace {

MassFunctions constant_rates(double alpha, double d = 0.5) {
  MassFunctions mf;
  mf.alpha = PairFunction::constant(alpha);
  mf.d = MassFunction::constant(d);
  mf.gamma = PairFunction::constant(std::max(alpha, 1.0));
  return mf;
}

Configuration pair_at(Vec2 a, Vec2 b, Mass ma = 1, Mass mb = 1) {
  return Configuration({{a, ma}, {b, mb}});
}

std::vector<Vec2> positions(const Configuration& c) {
  std::vector<Vec2> x;
  for (const auto& e : c.entries()) x.push_back(e.particle.position);
  return x;
}

InitialData disc_data(double total, double radius = 1.0) {
  return InitialData::single_species({DensityProfile::Shape::disc, {0, 0}, radius, total});
}

}  // namespace

TEST_CASE("brownian_step: zero step and displacement statistics") {
  const auto mf = constant_rates(1.0);
  Configuration c = pair_at({0.3, 0.4}, {1, 1});
  Rng rng(1);
  brownian_step(c, 0.0, mf, rng);
  CHECK(c.entries()[0].particle.position == Vec2{0.3, 0.4});

  const int n = 100000;
  std::vector<double> dx(n), dy(n), ex(n);
  for (int k = 0; k < n; ++k) {
    Configuration p = pair_at({0, 0}, {0, 0});
    Rng r(derive_seed(99, std::uint64_t(k)));
    brownian_step(p, 1.0, mf, r);
    dx[k] = p.entries()[0].particle.position.x;
    dy[k] = p.entries()[0].particle.position.y;
    ex[k] = p.entries()[1].particle.position.x;
  }
  // Var of the sample variance of N(0, s2) is 2 s2^2 / (n - 1).
  const double se_var = std::sqrt(2.0 / (n - 1));
  CHECK(std::abs(oracle::sample_variance(dx) - 1.0) < 3 * se_var);
  CHECK(std::abs(oracle::sample_variance(dy) - 1.0) < 3 * se_var);
  double cov = 0.0;
  for (int k = 0; k < n; ++k) cov += dx[k] * ex[k];
  cov /= n;
  CHECK(std::abs(cov) < 3.0 / std::sqrt(double(n)));
}

TEST_CASE("pair_rate: support, value and the mass-dependent range") {
  const auto ks = KernelSpec::default_bump();
  const auto mf = constant_rates(1.0);
  const double eps = std::exp(-10.0);
  CHECK(pair_rate({{0, 0}, 1}, {{eps, 0}, 1}, eps, ks, mf) == 0.0);
  CHECK(pair_rate({{0, 0}, 1}, {{0, 0}, 1}, eps, ks, mf) ==
        doctest::Approx(std::exp(20.0) * 0.1 * 2 / pi).epsilon(1e-12));

  for (double r : {0.0, 0.3, 0.9, 1.5}) {
    const Particle a{{0, 0}, 1}, b{{r * eps, 0}, 1};
    const double mr = pair_rate(a, b, eps, ks, mf, Variant::mass_radius);
    const double st = pair_rate(a, b, 2 * eps, ks, mf, Variant::standard);
    CHECK(mr == doctest::Approx(st * log_scale(2 * eps) / log_scale(eps)).epsilon(1e-12));
  }
  CHECK(range_scale(1, 4, ks, Variant::mass_radius) == doctest::Approx(3.0));
  CHECK(range_scale(1, 4, ks, Variant::standard) == 1.0);
}

TEST_CASE("coagulate: placement frequency, conservation and dead labels") {
  int kept_i = 0, fair = 0;
  const int trials = 10000;
  for (int k = 0; k < trials; ++k) {
    Rng rng(derive_seed(5, std::uint64_t(k)));
    Configuration c = pair_at({0, 0}, {1, 0}, 3, 1);
    const auto ids = std::pair{c.entries()[0].id, c.entries()[1].id};
    const auto ev = coagulate(c, ids.first, ids.second, rng);
    REQUIRE(c.size() == 1);
    CHECK(c.total_mass() == 4);
    CHECK(c.entries()[0].particle.position == (ev.kept_i ? Vec2{0, 0} : Vec2{1, 0}));
    kept_i += ev.kept_i;

    Configuration e = pair_at({0, 0}, {1, 0}, 2, 2);
    fair += coagulate(e, e.entries()[0].id, e.entries()[1].id, rng).kept_i;
  }
  const double sd3 = std::sqrt(trials * 0.75 * 0.25), sd2 = std::sqrt(trials * 0.25);
  CHECK(std::abs(kept_i - 0.75 * trials) < 3 * sd3);
  CHECK(std::abs(fair - 0.5 * trials) < 3 * sd2);

  Rng rng(1);
  Configuration c = pair_at({0, 0}, {1, 0});
  const auto a = c.entries()[0].id, b = c.entries()[1].id;
  coagulate(c, a, b, rng);
  CHECK_THROWS_AS(coagulate(c, a, b, rng), std::out_of_range);
}

TEST_CASE("cell index agrees with brute force on random configurations") {
  std::mt19937_64 gen(2024);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t n = 2 + gen() % 150;
    const double box = 0.2 + 3.0 * U(gen), r = 0.05 + 0.3 * U(gen);
    std::vector<Particle> ps;
    for (std::size_t i = 0; i < n; ++i) ps.push_back({{box * (U(gen) - 0.5), box * (U(gen) - 0.5)}, 1});
    const Configuration c(ps);
    const auto x = positions(c);
    const auto ref = oracle::pairs_within(x, r);
    std::set<std::pair<std::size_t, std::size_t>> got;
    for (auto [i, j] : build_cell_index(c, r).candidate_pairs())
      if ((x[i] - x[j]).norm() < r) got.insert({i, j});
    CHECK(got == ref);
  }

  const Configuration single({{{0, 0}, 1}});
  CHECK(build_cell_index(single, 1.0).candidate_pairs().empty());

  std::vector<Particle> same(12, Particle{{0.25, -0.5}, 1});
  CHECK(build_cell_index(Configuration(same), 0.1).candidate_pairs().size() == 12 * 11);
}

TEST_CASE("step: isolated particles only diffuse") {
  SimConfig sim;
  sim.dt = 0.01;
  sim.eps = 1e-3;
  Configuration c = pair_at({0, 0}, {5, 5});
  Rng rng(3);
  const auto log = step(c, sim, KernelSpec::default_bump(), constant_rates(1.0), rng);
  CHECK(log.empty());
  CHECK(c.size() == 2);
}

TEST_CASE("step: two frozen overlapping particles fire with both orders") {
  SimConfig sim;
  sim.eps = 0.1;
  sim.dt = 1e-3;
  sim.diffusion = false;
  const auto ks = KernelSpec::default_bump();
  const auto mf = constant_rates(1.0);
  const double lambda = pair_rate({{0, 0}, 1}, {{0, 0}, 1}, sim.eps, ks, mf);
  const int trials = 10000;
  int fired = 0;
  for (int k = 0; k < trials; ++k) {
    Configuration c = pair_at({0, 0}, {0, 0});
    Rng rng(derive_seed(17, std::uint64_t(k)));
    fired += !step(c, sim, ks, mf, rng).empty();
  }
  const double p = -std::expm1(-2 * lambda * sim.dt);
  CHECK(std::abs(fired - p * trials) < 3 * std::sqrt(trials * p * (1 - p)));
}

TEST_CASE("frozen pair: coagulation time is exponential with the summed rate") {
  SimConfig sim;
  sim.eps = 0.1;
  sim.dt = 1.0;
  sim.rate_cap = 1e-3;
  sim.diffusion = false;
  const auto ks = KernelSpec::default_bump();
  const auto mf = constant_rates(1.0);
  const Vec2 off{0.03, 0.02};
  const double total = pair_rate({{0, 0}, 1}, {off, 1}, sim.eps, ks, mf) +
                       pair_rate({off, 1}, {{0, 0}, 1}, sim.eps, ks, mf);
  std::vector<double> times;
  for (int k = 0; k < 10000; ++k) {
    Simulator s(pair_at({0, 0}, off), sim, ks, mf);
    Rng rng(derive_seed(23, std::uint64_t(k)));
    for (;;) {
      const auto log = s.step(0.05, rng);
      if (!log.empty()) {
        times.push_back(log.front().t);
        break;
      }
    }
  }
  const double D = oracle::ks_statistic(times, [&](double t) { return -std::expm1(-total * t); });
  CHECK(oracle::kolmogorov_pvalue(D, times.size()) > 0.01);
}

TEST_CASE("frozen pair: firing probability does not depend on the substep") {
  const auto ks = KernelSpec::default_bump();
  const auto mf = constant_rates(1.0);
  SimConfig sim;
  sim.eps = 0.1;
  sim.dt = 2e-3;
  sim.diffusion = false;
  const double lambda = pair_rate({{0, 0}, 1}, {{0, 0}, 1}, sim.eps, ks, mf);
  const double p = -std::expm1(-2 * lambda * sim.dt);
  for (double cap : {0.2, 0.02, 0.002}) {
    sim.rate_cap = cap;
    int fired = 0;
    const int trials = 10000;
    for (int k = 0; k < trials; ++k) {
      Configuration c = pair_at({0, 0}, {0, 0});
      Rng rng(derive_seed(41, std::uint64_t(k)));
      fired += !step(c, sim, ks, mf, rng).empty();
    }
    CHECK(std::abs(fired - p * trials) < 3 * std::sqrt(trials * p * (1 - p)));
  }
}

TEST_CASE("runs: conservation, event bookkeeping and reproducibility") {
  SimConfig sim;
  sim.eps = 1e-2;
  sim.dt = 0.01;
  sim.T = 0.2;
  sim.seed = 77;
  const auto ks = KernelSpec::default_bump();
  auto mf = constant_rates(1.0);
  const auto id = disc_data(40.0, 0.3);
  const auto a = run(sim, id, ks, mf, {0.0, 0.1, 0.2});
  const auto b = run(sim, id, ks, mf, {0.0, 0.1, 0.2});
  CHECK(a.events.size() > 5);
  CHECK(a.events == b.events);
  CHECK(a.final_cfg.total_mass() == a.initial_mass);
  CHECK(a.final_cfg.size() + a.events.size() == a.initial_count);
  REQUIRE(a.snapshots.size() == 3);
  for (std::size_t k = 1; k < a.events.size(); ++k) CHECK(a.events[k].t >= a.events[k - 1].t);
  std::set<ParticleId> victims;
  for (const auto& e : a.events) {
    CHECK(victims.insert(e.i).second);
    CHECK(victims.insert(e.j).second);
  }
  for (const auto& s : a.snapshots) CHECK(s.cfg.total_mass() == a.initial_mass);

  SimConfig other = sim;
  other.seed = 78;
  CHECK_FALSE(run(other, id, ks, mf, {}).events == a.events);

  SimConfig zero = sim;
  zero.T = 0.0;
  const auto z = run(zero, id, ks, mf, {0.0});
  REQUIRE(z.snapshots.size() == 1);
  const auto init = sample_initial_configuration(id, sim.eps, derive_seed(sim.seed, 0));
  CHECK(positions(z.snapshots[0].cfg) == positions(init));

  mf.alpha = PairFunction::constant(0.0);
  const auto quiet = run(sim, id, ks, mf, {});
  CHECK(quiet.events.empty());
  CHECK(quiet.final_cfg.size() == quiet.initial_count);
}

TEST_CASE("without coagulation, paths are Brownian") {
  SimConfig sim;
  sim.eps = 1e-2;
  sim.dt = 0.05;
  sim.T = 0.5;
  const auto ks = KernelSpec::default_bump();
  auto mf = constant_rates(0.0, 0.7);
  std::vector<double> dx;
  for (std::uint64_t s = 0; s < 100; ++s) {
    std::vector<Particle> ps(100, Particle{{0, 0}, 1});
    sim.seed = s;
    const auto rec = run_from(Configuration(ps), sim, ks, mf, {});
    for (const auto& e : rec.final_cfg.entries()) dx.push_back(e.particle.position.x);
  }
  const double want = 2 * 0.7 * sim.T;
  CHECK(std::abs(oracle::sample_variance(dx) - want) < 3 * want * std::sqrt(2.0 / double(dx.size() - 1)));
}

TEST_CASE("mass-dependent range with r = 1/2 reproduces the standard dynamics") {
  auto ks = KernelSpec::default_bump();
  ks.radius_fn = [](Mass) { return 0.5; };
  SimConfig sim;
  sim.eps = 1e-2;
  sim.dt = 0.01;
  sim.T = 0.2;
  sim.seed = 5;
  const auto mf = constant_rates(1.0);
  const auto id = disc_data(40.0, 0.3);
  const auto st = run(sim, id, ks, mf, {});
  sim.variant = Variant::mass_radius;
  const auto mr = run(sim, id, ks, mf, {});
  CHECK(st.events.size() > 5);
  CHECK(st.events == mr.events);

  auto quiet = mf;
  quiet.alpha = PairFunction::constant(0.0);
  CHECK(run(sim, id, KernelSpec::default_bump(), quiet, {}).events.empty());
}

TEST_CASE("empirical measure and test-function integrals") {
  const double eps = 1e-3, L = log_scale(eps);
  CHECK(empirical_measure(Configuration{}, eps).total(1) == 0.0);

  Configuration two({{{1, 2}, 1}, {{-3, 0.5}, 1}, {{0, 0}, 2}});
  const auto em = empirical_measure(two, eps);
  CHECK(em.total(1) == doctest::Approx(2 / L));
  CHECK(integrate_test_function(em, [](Vec2) { return 0.0; }, 1) == 0.0);
  CHECK(integrate_test_function(em, [](Vec2 x) { return 2 * x.x + x.y; }, 1) ==
        doctest::Approx((4.0 + (-5.5)) / L));

  const DensityProfile h{DensityProfile::Shape::bump, {0, 0}, 1.0, 500.0};
  const auto id = InitialData::single_species(h);
  const auto c = sample_initial_configuration(id, eps, 9);
  const auto g = empirical_measure(c, eps);
  CHECK(g.total(1) == doctest::Approx(double(c.size()) / L));
  const auto J = [](Vec2 x) { return std::exp(-x.norm2()); };
  const double EJ = oracle::simpson([](double r) { return std::exp(-r * r) * 4 * r * (1 - r * r); }, 0, 1);
  const double EJ2 =
      oracle::simpson([](double r) { return std::exp(-2 * r * r) * 4 * r * (1 - r * r); }, 0, 1);
  const double N = double(c.size());
  const double se = std::sqrt(N * (EJ2 - EJ * EJ)) / L;
  CHECK(std::abs(integrate_test_function(g, J, 1) - N / L * EJ) < 3 * se);
}

TEST_CASE("q_functional: values and linearity") {
  const auto ks = KernelSpec::default_bump();
  const auto mf = constant_rates(1.5);
  const double eps = 1e-3, L = log_scale(eps);
  const auto one = [](Vec2) { return 1.0; };
  const auto two = [](Vec2) { return 2.0; };
  Configuration far({{{0, 0}, 1}, {{1, 0}, 2}});
  CHECK(q_functional(far, eps, one, one, 1, 2, ks, mf) == 0.0);

  Configuration same({{{0.1, 0.1}, 1}, {{0.1, 0.1}, 2}});
  const double want = 1.5 * (2 / pi) / (eps * eps * L * L);
  CHECK(q_functional(same, eps, one, one, 1, 2, ks, mf) == doctest::Approx(want).epsilon(1e-12));
  CHECK(q_functional(same, eps, two, one, 1, 2, ks, mf) == doctest::Approx(2 * want).epsilon(1e-12));
  Configuration twins({{{0.1, 0.1}, 1}, {{0.1, 0.1}, 1}});
  CHECK(q_functional(twins, eps, one, one, 1, 1, ks, mf) == doctest::Approx(2 * want).epsilon(1e-12));
}

TEST_CASE("stosszahlansatz_rhs: values and resolution") {
  const double eps = 1e-3, L = log_scale(eps), delta = 0.2, b = 2.5;
  const auto one = [](Vec2) { return 1.0; };
  const auto mol = MollifierSpec::default_bump(delta);
  CHECK(stosszahlansatz_rhs(empirical_measure(Configuration{}, eps), mol, one, one, 1, 2, b) == 0.0);

  const auto em = empirical_measure(Configuration({{{0.3, -0.2}, 1}, {{0.3, -0.2}, 2}}), eps);
  CHECK(stosszahlansatz_rhs(em, mol, one, one, 1, 2, 0.0) == 0.0);
  const double want = b / (L * L) * MollifierSpec::default_bump_square_integral() / (delta * delta);
  double prev_err = 1e300;
  for (int cpd : {8, 16, 32}) {
    const double err = std::abs(stosszahlansatz_rhs(em, mol, one, one, 1, 2, b, cpd) - want);
    CHECK(err <= prev_err);
    prev_err = err;
  }
  CHECK(prev_err < 1e-6 * want);
  CHECK_THROWS_AS(stosszahlansatz_rhs(em, mol, one, one, 1, 2, b, 4), ValidationError);
}

TEST_CASE("sim config validation") {
  SimConfig s;
  s.eps = 1.5;
  CHECK_THROWS_AS(s.validate(), ValidationError);
  s.eps = 0.01;
  s.dt = 0.0;
  CHECK_THROWS_AS(s.validate(), ValidationError);
  s.dt = 0.1;
  s.T = -1;
  CHECK_THROWS_AS(s.validate(), ValidationError);
}
