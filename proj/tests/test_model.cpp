#include <cmath>
#include <numbers>
#include <random>

#include "coag2d/model.hpp"
#include "doctest.h"
#include "oracles.hpp"

using namespace coag2d;
using std::numbers::pi;

namespace {

MassFunctions with(PairFunction alpha, MassFunction d, PairFunction gamma) {
  MassFunctions mf;
  mf.alpha = std::move(alpha);
  mf.d = std::move(d);
  mf.gamma = std::move(gamma);
  return mf;
}

}  // namespace

TEST_CASE("beta: values from the formula") {
  auto mf = with(PairFunction::constant(2 * pi), MassFunction::constant(0.5), PairFunction::constant(2 * pi));
  CHECK(beta(1, 1, mf) == doctest::Approx(pi).epsilon(1e-14));

  mf.alpha = PairFunction::constant(1e12);
  CHECK(std::abs(beta(3, 5, mf) - 2 * pi) < 1e-6);

  mf.alpha = PairFunction::constant(0.0);
  CHECK(beta(2, 7, mf) == 0.0);
}

TEST_CASE("beta: symmetry, bounds and monotonicity") {
  auto mf = with(PairFunction::power_product(0.7, 0.5), MassFunction::power_law(1.0, 0.3),
                 PairFunction::product(1.0));
  for (Mass n = 1; n <= 50; ++n)
    for (Mass m = 1; m <= 50; ++m) {
      const double b = beta(n, m, mf);
      CHECK(b == beta(m, n, mf));
      const double a = mf.alpha(n, m), D = mf.d(n) + mf.d(m);
      CHECK(b > 0);
      CHECK(b < a);
      CHECK(b < 2 * pi * D);
    }
  double prev = 0.0;
  for (double a = 1e-3; a < 1e6; a *= 1.7) {
    const double b = beta_from(a, 1.0);
    CHECK(b > prev);
    prev = b;
  }
}

TEST_CASE("tau: values and the beta identity") {
  auto mf = with(PairFunction::constant(2 * pi), MassFunction::constant(0.5), PairFunction::constant(2 * pi));
  CHECK(tau(1, 2, mf) == doctest::Approx(2 * pi));
  mf.alpha = PairFunction::constant(1.0);
  CHECK(tau(1, 1, mf) == doctest::Approx(1.0));

  std::mt19937_64 gen(7);
  std::uniform_real_distribution<double> U(0.01, 20.0);
  for (int k = 0; k < 100; ++k) {
    const double a = U(gen), d1 = U(gen), d2 = U(gen);
    std::vector<double> dt{d1, d2};
    auto m = with(PairFunction::constant(a), MassFunction::tabulated(dt), PairFunction::constant(a));
    const double t = tau(1, 2, m), D = d1 + d2;
    CHECK(beta(1, 2, m) == doctest::Approx(D * 2 * pi * t / (2 * pi + t)).epsilon(1e-12));
  }
}

TEST_CASE("validate_hypothesis: reference families") {
  SUBCASE("constant d, gamma(n,m) = m") {
    auto mf = with(PairFunction::constant(1.0), MassFunction::constant(0.5),
                   PairFunction::custom([](Mass, Mass m) { return double(m); }, "second"));
    CHECK(validate_hypothesis(mf, 12).pass);
  }
  SUBCASE("d(n) = 1/n, gamma = nm") {
    auto mf = with(PairFunction::constant(1.0), MassFunction::power_law(1.0, 1.0), PairFunction::product(1.0));
    CHECK(validate_hypothesis(mf, 20).pass);
  }
  SUBCASE("constant gamma, d(n) = n fails at (1,1,1)") {
    auto mf = with(PairFunction::constant(1.0), MassFunction::power_law(1.0, -1.0), PairFunction::constant(1.0));
    const auto rep = validate_hypothesis(mf, 5);
    CHECK_FALSE(rep.pass);
    REQUIRE(rep.violation.has_value());
    CHECK(*rep.violation == std::array<Mass, 3>{1, 1, 1});
  }
  SUBCASE("alpha above gamma is reported") {
    auto mf = with(PairFunction::constant(2.0), MassFunction::constant(0.5), PairFunction::constant(1.0));
    const auto rep = validate_hypothesis(mf, 3);
    CHECK_FALSE(rep.pass);
    CHECK((*rep.violation)[2] == 0);
  }
  CHECK_THROWS_AS(validate_hypothesis(MassFunctions{}, 1), ValidationError);
}

TEST_CASE("validate_hypothesis agrees with direct enumeration on random families") {
  std::mt19937_64 gen(11);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  int fails = 0, passes = 0;
  for (int trial = 0; trial < 200; ++trial) {
    const Mass n_max = 2 + Mass(gen() % 9);
    std::vector<double> dtab(std::size_t(2 * n_max));
    for (auto& v : dtab) v = 0.2 + U(gen);
    if (trial % 2) std::sort(dtab.rbegin(), dtab.rend());
    const double ga = 0.5 + U(gen), gp = U(gen) * 1.2, ac = U(gen) * 1.5;
    auto gamma_fn = [=](Mass n, Mass m) { return ga * std::pow(double(n * m), gp); };
    auto mf = with(PairFunction::constant(ac), MassFunction::tabulated(dtab),
                   PairFunction::custom(gamma_fn, "random"));
    const auto rep = validate_hypothesis(mf, n_max);
    const auto ref = oracle::hypothesis_violation([&](Mass, Mass) { return ac; },
                                                  [&](Mass n) { return mf.d(n); }, gamma_fn, n_max);
    CHECK(rep.pass == !ref.has_value());
    if (ref) CHECK(*rep.violation == *ref);
    (rep.pass ? passes : fails)++;
  }
  CHECK(passes > 10);
  CHECK(fails > 10);
}

TEST_CASE("validate_initial_data: sufficient conditions") {
  InitialData id;
  id.h = {{DensityProfile{DensityProfile::Shape::disc, {0, 0}, 1.0, 1.0}}};
  auto mf = with(PairFunction::constant(1.0), MassFunction::constant(0.5), PairFunction::product(1.0));
  CHECK(validate_initial_data(id, mf, 64).status == InitialDataReport::Status::certified);

  InitialData g;
  g.h = {{DensityProfile{DensityProfile::Shape::gaussian, {0, 0}, 1.0, 1.0}}};
  const auto rg = validate_initial_data(g, mf, 64);
  CHECK(rg.status == InitialDataReport::Status::not_certified);
  CHECK_FALSE(rg.pass());

  mf.d = MassFunction::power_law(1.0, -1.0);
  CHECK(validate_initial_data(id, mf, 64).status == InitialDataReport::Status::fail);
}

TEST_CASE("sample_initial_configuration: count, species and reproducibility") {
  InitialData one = InitialData::single_species({DensityProfile::Shape::bump, {0, 0}, 1.0, 1.0});
  const auto c = sample_initial_configuration(one, std::exp(-100.0), 3);
  CHECK(c.size() == 100);
  for (const auto& e : c.entries()) CHECK(e.particle.mass == 1);

  const auto c2 = sample_initial_configuration(one, std::exp(-100.0), 3);
  REQUIRE(c2.size() == c.size());
  for (std::size_t k = 0; k < c.size(); ++k) CHECK(c.entries()[k].particle.position == c2.entries()[k].particle.position);

  CHECK_THROWS_AS(sample_initial_configuration(one, 0.9, 1), ValidationError);

  InitialData two;
  two.h = {{DensityProfile{DensityProfile::Shape::bump, {0, 0}, 1.0, 300.0}},
           {DensityProfile{DensityProfile::Shape::disc, {1, 0}, 0.5, 200.0}}};
  std::size_t ones = 0, total = 0;
  for (std::uint64_t s = 0; s < 100; ++s) {
    const auto cfg = sample_initial_configuration(two, 1e-3, s);
    REQUIRE(cfg.size() == 3454);
    ones += cfg.count_mass(1);
    total += cfg.size();
  }
  const double p = 0.6, mean = p * double(total), sd = std::sqrt(double(total) * p * (1 - p));
  CHECK(std::abs(double(ones) - mean) < 3 * sd);
}

TEST_CASE("sampled positions follow the profile") {
  // E r^2 under the radial law 4 r (1 - r^2) on [0, 1].
  const DensityProfile bump{DensityProfile::Shape::bump, {2, -1}, 1.0, 1.0};
  Rng rng(5);
  const int n = 100000;
  std::vector<double> r2(n);
  for (auto& v : r2) v = (bump.sample(rng) - Vec2{2, -1}).norm2();
  double m = 0.0;
  for (double v : r2) m += v;
  m /= n;
  const double ref = oracle::simpson([](double r) { return r * r * 2 * (1 - r * r) * 2 * r; }, 0, 1);
  CHECK(std::abs(m - ref) < 3 * std::sqrt(oracle::sample_variance(r2) / n));
}

TEST_CASE("kernels and mollifiers are normalized") {
  const auto ks = KernelSpec::default_bump();
  CHECK_NOTHROW(validate_kernel(ks));
  CHECK(kernel_integral(ks.V, ks.support_radius) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(ks(Vec2{0, 0}) == doctest::Approx(2 / pi));
  CHECK(ks(Vec2{1.0, 0.1}) == 0.0);
  CHECK_NOTHROW(validate_mollifier(MollifierSpec::default_bump(0.3)));
  const auto mol = MollifierSpec::default_bump(1.0);
  const double sq = oracle::simpson(
      [&](double r) { return 2 * pi * r * std::pow(mol.eta(Vec2{r, 0}), 2); }, 0, 1);
  CHECK(sq == doctest::Approx(MollifierSpec::default_bump_square_integral()).epsilon(1e-9));

  KernelSpec bad = ks;
  bad.V = [](Vec2 x) { return x.norm() < 1 ? 1.0 : 0.0; };
  CHECK_THROWS_AS(validate_kernel(bad, 1e-6), ValidationError);
}

TEST_CASE("configuration invariants") {
  Configuration c;
  const auto a = c.insert({{0, 0}, 2});
  const auto b = c.insert({{1, 0}, 3});
  CHECK(a != b);
  CHECK(c.total_mass() == 5);
  CHECK(c.find(b).value() == 1);
  CHECK_THROWS_AS(c.insert({{0, 0}, 0}), ValidationError);
  CHECK_THROWS_AS(c.insert({{std::nan(""), 0}, 1}), ValidationError);
  c.erase_slots({0});
  CHECK_FALSE(c.find(a).has_value());
  CHECK(c.find(b).value() == 0);
}

TEST_CASE("pair and mass functions") {
  const auto t = PairFunction::tabulated({1, 2, 2, 4}, 2);
  CHECK(t(1, 2) == t(2, 1));
  CHECK(t(5, 5) == t(2, 2));
  CHECK_THROWS_AS(PairFunction::tabulated({1, 2, 3, 4}, 2), ValidationError);
  CHECK(PairFunction::product(2.0)(3, 4) == 24.0);
  CHECK(PairFunction::sum(1.0)(3, 4) == 7.0);
  CHECK(PairFunction::product(1.0).at_most_linear_in_first());
  CHECK_FALSE(PairFunction::power_product(1.0, 2.0).at_most_linear_in_first());
  CHECK_THROWS_AS(PairFunction::constant(-1.0), ValidationError);
  CHECK(MassFunction::power_law(2.0, 1.0)(4) == 0.5);
  CHECK_FALSE(MassFunction::power_law(1.0, -1.0).bounded());
  CHECK(log_scale(std::exp(-7.0)) == doctest::Approx(7.0));
  CHECK(initial_particle_count(500, 1e-3) == 3454);
}
