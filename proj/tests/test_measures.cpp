#include "doctest.h"

#include "depsim/errors.hpp"
#include "depsim/measures.hpp"
#include "depsim/rates.hpp"
#include "depsim/rng.hpp"

#include <cmath>
#include <vector>

#include "json.hpp"

using namespace depsim;

namespace {

// builtins exercised by the family-wide property tests
std::vector<RateSpec> family_specs() {
  std::vector<RateSpec> v;
  v.push_back(make_asep(0.7));
  v.push_back(make_zrp_const(1.0, 0.0));
  v.push_back(make_zrp(GeomExpF{1.0}, 1.0, 0.25));
  v.push_back(make_bricklayers_exp(1.0, 1.0, 0.0));
  v.push_back(make_bricklayers_table({1.2, 1.5}, 1.0, 1.0, 0.5));
  v.push_back(make_pap_exclusion(1.0, 0.4, 0.8));
  return v;
}

// a theta strictly inside the admissible interval, biased toward low
// densities so truncated supports stay small
double interior_theta(const RateSpec& s) {
  double lo = s.theta_lo, hi = s.theta_hi;
  if (std::isfinite(lo) && std::isfinite(hi)) return 0.5 * (lo + hi) + 0.1;
  if (std::isfinite(hi)) return hi - 0.8;
  if (std::isfinite(lo)) return lo + 0.8;
  return 0.2;
}

} // namespace

TEST_SUITE("measures") {

TEST_CASE("two-point marginal is symmetric at zero tilt") {
  RateSpec asep = make_asep(0.6);
  TiltedMeasure m = tilted(asep, 0.0);
  CHECK(m.dist.lo() == 0);
  CHECK(m.dist.hi() == 1);
  CHECK(m.dist.pmf(0) == doctest::Approx(0.5).epsilon(1e-14));
  CHECK(m.dist.pmf(1) == doctest::Approx(0.5).epsilon(1e-14));
  CHECK(density_of_theta(m) == doctest::Approx(0.5).epsilon(1e-14));
  CHECK(variance(m) == doctest::Approx(0.25).epsilon(1e-14));
  CHECK(m.tail_mass_bound == 0.0);
  // Z(0) = 1/f(0)! + 1/f(1)! = 1 + 1/0.6... no: f(1) = 1 for exclusion,
  // both weights are 1, so Z = 2
  CHECK(m.log_Z == doctest::Approx(std::log(2.0)).epsilon(1e-14));
}

TEST_CASE("constant-rate source-only model gives the geometric marginal") {
  RateSpec zrp = make_zrp_const(1.0, 0.0);
  double theta = -0.5;
  TiltedMeasure m = tilted(zrp, theta, 1e-12);
  // f == 1 above zero, so pmf(z) = (1 - e^theta) e^{theta z}
  double base = 1.0 - std::exp(theta);
  CHECK(m.dist.pmf(0) == doctest::Approx(0.3934693402873666).epsilon(1e-11));
  for (int z = 0; z <= 10; ++z)
    CHECK(m.dist.pmf(z) ==
          doctest::Approx(base * std::exp(theta * z)).epsilon(1e-10));
  CHECK(m.tail_mass_bound <= 1e-12);
  CHECK(m.mean() ==
        doctest::Approx(std::exp(theta) / (1.0 - std::exp(theta)))
            .epsilon(1e-10));
}

TEST_CASE("tilt parameter outside the admissible interval is rejected") {
  RateSpec zrp = make_zrp_const(1.0, 0.0); // theta_hi = log lim f = 0
  CHECK_THROWS_AS(tilted(zrp, 0.1), ThetaOutOfRangeError);
  CHECK_THROWS_AS(tilted(zrp, 0.0), ThetaOutOfRangeError); // open interval
  CHECK_NOTHROW(tilted(zrp, -1e-3));

  RateSpec brick = make_bricklayers_table({1.2, 1.5}, 1.0, 1.0, 0.0);
  CHECK_THROWS_AS(tilted(brick, std::log(1.5) + 0.01), ThetaOutOfRangeError);
  CHECK_THROWS_AS(tilted(brick, -std::log(1.5) - 0.01),
                  ThetaOutOfRangeError);
  CHECK_NOTHROW(tilted(brick, 0.3));
}

TEST_CASE("support cap is reported when the tail decays too slowly") {
  RateSpec zrp = make_zrp_const(1.0, 0.0);
  // per-step weight ratio e^theta is 1 - 1e-9: mass to 1e-12 needs ~3e10
  // support points, far past the cap
  CHECK_THROWS_AS(tilted(zrp, -1e-9), TruncationError);
}

TEST_CASE("doubly infinite marginal is symmetric at zero tilt") {
  RateSpec brick = make_bricklayers_exp(1.0, 1.0, 0.0);
  TiltedMeasure m = tilted(brick, 0.0);
  CHECK(std::abs(m.mean()) < 1e-12);
  CHECK(m.dist.lo() < 0);
  CHECK(m.dist.hi() > 0);
  for (int z = 1; z <= 3; ++z)
    CHECK(m.dist.pmf(z) == doctest::Approx(m.dist.pmf(-z)).epsilon(1e-12));
  // log f(z)! = beta z^2 / 2, so weights are the discrete Gaussian
  CHECK(m.dist.pmf(2) / m.dist.pmf(0) ==
        doctest::Approx(std::exp(-2.0)).epsilon(1e-12));
}

TEST_CASE("density map inverts to the logit for exclusion") {
  RateSpec asep = make_asep(1.0);
  for (double rho : {0.1, 0.3, 0.5, 0.62, 0.9}) {
    double th = theta_of_density(asep, rho);
    CHECK(th ==
          doctest::Approx(std::log(rho / (1.0 - rho))).epsilon(1e-10));
  }
  CHECK(theta_of_density(asep, 0.5) == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("density map inverts the geometric mean formula") {
  RateSpec zrp = make_zrp_const(1.0, 0.0);
  // rho = e^theta / (1 - e^theta), so rho = 1 sits at theta = log(1/2)
  double th = theta_of_density(zrp, 1.0);
  CHECK(th == doctest::Approx(std::log(0.5)).epsilon(1e-10));
  CHECK(variance(tilted(zrp, th)) == doctest::Approx(2.0).epsilon(1e-9));
  CHECK_THROWS_AS(theta_of_density(zrp, -0.2), ConfigError);
}

TEST_CASE("density round trip holds across the family") {
  for (const RateSpec& spec : family_specs()) {
    CAPTURE(spec.name);
    double base = interior_theta(spec);
    for (double d : {-0.45, -0.15, 0.0, 0.2, 0.5}) {
      double theta = base + d;
      if (!(theta > spec.theta_lo + 0.05 && theta < spec.theta_hi - 0.05))
        continue;
      double rho = density_of_theta(tilted(spec, theta));
      CAPTURE(theta);
      CHECK(theta_of_density(spec, rho) ==
            doctest::Approx(theta).epsilon(1e-10));
    }
  }
}

TEST_CASE("variance equals the slope of the density map") {
  for (const RateSpec& spec : family_specs()) {
    CAPTURE(spec.name);
    double theta = interior_theta(spec);
    double h = 1e-4;
    double up = density_of_theta(tilted(spec, theta + h, 1e-14));
    double dn = density_of_theta(tilted(spec, theta - h, 1e-14));
    double slope = (up - dn) / (2.0 * h);
    CHECK(variance(tilted(spec, theta)) ==
          doctest::Approx(slope).epsilon(1e-6));
  }
}

TEST_CASE("covariance with occupancy equals the tilt derivative") {
  for (const RateSpec& spec : family_specs()) {
    CAPTURE(spec.name);
    double theta = interior_theta(spec);
    std::vector<std::function<double(int)>> phis = {
        [](int z) { return static_cast<double>(z); },
        [](int z) { return static_cast<double>(z) * z; },
        [&spec](int z) { return spec.f(z); }};
    for (std::size_t k = 0; k < phis.size(); ++k) {
      CAPTURE(k);
      double h = 1e-4;
      auto mean_phi = [&](double th) {
        TiltedMeasure m = tilted(spec, th, 1e-14);
        double e = 0.0;
        for (int z = m.dist.lo(); z <= m.dist.hi(); ++z)
          e += m.dist.pmf(z) * phis[k](z);
        return e;
      };
      double slope = (mean_phi(theta + h) - mean_phi(theta - h)) / (2.0 * h);
      double cov = cov_with_omega(tilted(spec, theta), phis[k]);
      CHECK(cov == doctest::Approx(slope).epsilon(1e-6));
    }
  }
}

TEST_CASE("covariance basics") {
  RateSpec asep = make_asep(1.0);
  TiltedMeasure m = tilted(asep, theta_of_density(asep, 0.3));
  CHECK(cov_with_omega(m, [](int) { return 3.25; }) ==
        doctest::Approx(0.0).epsilon(1e-12));
  CHECK(cov_with_omega(m, [](int z) { return static_cast<double>(z); }) ==
        doctest::Approx(variance(m)).epsilon(1e-12));
  // phi = f = 1{omega = 1}: Cov(1{w=1}, w) = rho (1 - rho)
  CHECK(cov_with_omega(m, [&asep](int z) { return asep.f(z); }) ==
        doctest::Approx(0.21).epsilon(1e-9));
}

TEST_CASE("seeding marginal collapses to a point for exclusion") {
  for (double rho : {0.2, 0.5, 0.8}) {
    SeedMeasure s = seed_measure(make_asep(0.9), rho);
    CHECK(s.dist.pmf(0) == 1.0);
    CHECK(s.renorm_mass < 1e-12);
  }
}

TEST_CASE("seeding marginal sums to one exactly when occupancies start at zero") {
  RateSpec zrp = make_zrp(GeomExpF{1.0}, 1.0, 0.0);
  SeedMeasure s = seed_measure(zrp, 0.8);
  // the double sum telescopes to Var/Var with no renormalization needed
  CHECK(s.renorm_mass < 1e-11);
  double total = 0.0;
  for (int y = s.dist.lo(); y <= s.dist.hi(); ++y) {
    CHECK(s.dist.pmf(y) >= 0.0);
    total += s.dist.pmf(y);
  }
  CHECK(total == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("seeding marginal leaves room at a finite top occupancy") {
  SeedMeasure s = seed_measure(make_pap_exclusion(1.0, 0.4, 0.8), 0.2);
  CHECK(s.dist.pmf(1) == 0.0);
  CHECK(s.dist.pmf(0) > 0.0);
  CHECK(s.dist.pmf(-1) > 0.0);
}

TEST_CASE("seeding marginal tail is nonincreasing above the density") {
  RateSpec zrp = make_zrp_const(1.0, 0.0);
  SeedMeasure s = seed_measure(zrp, 1.3);
  for (int y = 2; y < s.dist.hi(); ++y)
    CHECK(s.dist.pmf(y + 1) <= s.dist.pmf(y) + 1e-15);
}

TEST_CASE("seeding marginal on a doubly infinite space is flagged, not broken") {
  SeedMeasure s = seed_measure(make_bricklayers_exp(1.0, 1.0, 0.0), 0.4);
  CHECK(s.renorm_mass < 1e-8); // tiny truncation deficit, recorded
  double total = 0.0;
  for (int y = s.dist.lo(); y <= s.dist.hi(); ++y) {
    CHECK(s.dist.pmf(y) >= 0.0);
    total += s.dist.pmf(y);
  }
  CHECK(total == doctest::Approx(1.0).epsilon(1e-14)); // renormalized
}

TEST_CASE("head and tail forms of the seeding sum agree in the overlap") {
  RateSpec zrp = make_zrp_const(1.0, 0.0);
  double rho = 1.3;
  TiltedMeasure m = tilted(zrp, theta_of_density(zrp, rho), 1e-13);
  // direct suffix sum, including the cancelling below-rho region
  auto direct = [&](int y) {
    double t = 0.0;
    for (int z = m.dist.hi(); z > y; --z) t += (z - rho) * m.dist.pmf(z);
    return t / m.variance();
  };
  SeedMeasure s = seed_measure(zrp, rho);
  for (int y = s.dist.lo(); y <= 4; ++y)
    CHECK(s.dist.pmf(y) == doctest::Approx(direct(y)).epsilon(1e-9));
}

TEST_CASE("stochastic dominance in the density across the family") {
  for (const RateSpec& spec : family_specs()) {
    CAPTURE(spec.name);
    double base = interior_theta(spec);
    double lam = density_of_theta(tilted(spec, base - 0.3));
    double rho = density_of_theta(tilted(spec, base + 0.2));
    REQUIRE(lam < rho);

    TiltedMeasure ml = tilted(spec, theta_of_density(spec, lam));
    TiltedMeasure mr = tilted(spec, theta_of_density(spec, rho));
    CHECK(dominance_check(ml.dist, mr.dist).dominated);
    CHECK_FALSE(dominance_check(mr.dist, ml.dist).dominated);

    SeedMeasure sl = seed_measure(spec, lam);
    SeedMeasure sr = seed_measure(spec, rho);
    CHECK(dominance_check(sl.dist, sr.dist).dominated);

    DominanceReport self = dominance_check(ml.dist, ml.dist);
    CHECK(self.dominated);
    CHECK_FALSE(self.has_witness);
  }
}

TEST_CASE("dominance failure reports the first CDF crossing") {
  DiscreteDist high(0, {0.2, 0.8});
  DiscreteDist low(0, {0.7, 0.3});
  DominanceReport rep = dominance_check(high, low);
  CHECK_FALSE(rep.dominated);
  CHECK(rep.has_witness);
  CHECK(rep.witness_z == 0);
  CHECK(rep.gap == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("common-quantile coupling is deterministic and ordered") {
  RateSpec asep = make_asep(1.0);
  TiltedMeasure ml = tilted(asep, theta_of_density(asep, 0.2));
  TiltedMeasure mr = tilted(asep, theta_of_density(asep, 0.6));
  MonotoneCoupling c =
      monotone_couple(ml.dist, mr.dist, Strictness::Weak);

  // shared uniform u: (0,0) for u < 0.4, (0,1) for u in (0.4, 0.8), (1,1)
  // above; exercised via the quantile maps directly
  CHECK(c.lower().quantile(0.3) == 0);
  CHECK(c.upper().quantile(0.3) == 0);
  CHECK(c.lower().quantile(0.6) == 0);
  CHECK(c.upper().quantile(0.6) == 1);
  CHECK(c.lower().quantile(0.9) == 1);
  CHECK(c.upper().quantile(0.9) == 1);

  RngStream rng(2026, 7);
  int n01 = 0, n = 20000;
  for (int i = 0; i < n; ++i) {
    auto [y, z] = c.sample(rng);
    CHECK(y <= z);
    if (y == 0 && z == 1) ++n01;
  }
  // P(0,1) = rho - lambda = 0.4; binomial SE ~ 0.0035
  CHECK(static_cast<double>(n01) / n == doctest::Approx(0.4).epsilon(0.05));
}

TEST_CASE("identical marginals couple to the diagonal") {
  DiscreteDist d(2, {0.25, 0.5, 0.25});
  MonotoneCoupling c = monotone_couple(d, d, Strictness::Weak);
  RngStream rng(11, 0);
  for (int i = 0; i < 64; ++i) {
    auto [y, z] = c.sample(rng);
    CHECK(y == z);
  }
}

TEST_CASE("strict coupling of seeded marginals never collides") {
  RateSpec asep = make_asep(0.8);
  SeedMeasure lo = seed_measure(asep, 0.3);
  SeedMeasure hi = seed_measure(asep, 0.5);
  MonotoneCoupling c =
      monotone_couple(lo.dist, shifted(hi.dist, 1), Strictness::Strict);
  RngStream rng(5, 1);
  for (int i = 0; i < 64; ++i) {
    auto [y, z] = c.sample(rng);
    CHECK(y == 0);
    CHECK(z == 1);
    CHECK(y < z);
  }

  RateSpec zrp = make_zrp(GeomExpF{1.0}, 1.0, 0.0);
  SeedMeasure zl = seed_measure(zrp, 0.6);
  SeedMeasure zr = seed_measure(zrp, 0.9);
  MonotoneCoupling zc =
      monotone_couple(zl.dist, shifted(zr.dist, 1), Strictness::Strict);
  for (int i = 0; i < 256; ++i) {
    auto [y, z] = zc.sample(rng);
    CHECK(y < z);
  }
}

TEST_CASE("coupling construction rejects unordered marginals") {
  DiscreteDist high(0, {0.2, 0.8});
  DiscreteDist low(0, {0.7, 0.3});
  CHECK_THROWS_AS(monotone_couple(high, low, Strictness::Weak),
                  DominationError);
  // strict mode needs a full step of separation, equality is not enough
  CHECK_THROWS_AS(monotone_couple(low, low, Strictness::Strict),
                  DominationError);
}

TEST_CASE("quantile sampling reproduces the mass function") {
  DiscreteDist d(-1, {0.1, 0.0, 0.65, 0.25});
  CHECK(d.quantile(0.0) == -1);
  CHECK(d.quantile(0.05) == -1);
  CHECK(d.quantile(0.1) == 1);  // zero-mass point is never selected
  CHECK(d.quantile(0.55) == 1);
  CHECK(d.quantile(0.8) == 2);
  CHECK(d.cdf(0) == doctest::Approx(0.1));
  CHECK(d.mean() == doctest::Approx(-0.1 + 0.65 + 0.5));
  RngStream rng(99, 3);
  int seen_zero_mass = 0;
  for (int i = 0; i < 4096; ++i)
    if (d.sample(rng) == 0) ++seen_zero_mass;
  CHECK(seen_zero_mass == 0);
}

TEST_CASE("measures serialize to parseable JSON") {
  RateSpec zrp = make_zrp_const(1.0, 0.0);
  TiltedMeasure m = tilted(zrp, -0.7);
  auto j = nlohmann::json::parse(to_json(m));
  CHECK(j["theta"].get<double>() == doctest::Approx(-0.7));
  CHECK(j["support"][0].get<int>() == m.dist.lo());
  CHECK(j["pmf"].size() ==
        static_cast<std::size_t>(m.dist.hi() - m.dist.lo() + 1));

  SeedMeasure s = seed_measure(zrp, 1.0);
  auto js = nlohmann::json::parse(to_json(s));
  CHECK(js["rho"].get<double>() == doctest::Approx(1.0));
  CHECK(js["renorm_mass"].get<double>() < 1e-10);
}

} // TEST_SUITE
