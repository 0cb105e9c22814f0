#include "doctest.h"

#include "depsim/coupling.hpp"
#include "depsim/errors.hpp"
#include "depsim/microconcavity.hpp"
#include "depsim/stats.hpp"

#include <cmath>
#include <functional>
#include <vector>

using namespace depsim;

namespace {

const std::function<double(int)> geomexp_f = [](int zz) {
  return 1.0 - std::exp(-static_cast<double>(zz));
};

// signed position of a ring site relative to origin 0, cut at L/2
int unwrap(int site, int L) { return site <= L / 2 ? site : site - L; }

// deterministic u-sweep: outcome frequencies match the branch weights to
// grid resolution
double sweep_freq(int n, const std::function<bool(double)>& hit) {
  int c = 0;
  for (int k = 0; k < n; ++k)
    if (hit((k + 0.5) / n)) ++c;
  return static_cast<double>(c) / n;
}

} // namespace

TEST_SUITE("microconcavity") {

TEST_CASE("low walker refresh matches its two-point law") {
  // f(z) = 1 - e^{-z}, omega = 2, eta = 0: P(a) = f(1)/f(2) = e/(e+1)
  const double pa = (1.0 - std::exp(-1.0)) / (1.0 - std::exp(-2.0));
  CHECK(pa == doctest::Approx(0.7310585786300049).epsilon(1e-15));
  CHECK(refresh_y(geomexp_f, 2, 0, 0, 1, pa - 1e-6) == 0);
  CHECK(refresh_y(geomexp_f, 2, 0, 0, 1, pa + 1e-6) == 1);
  const int n = 4096;
  double freq = sweep_freq(
      n, [&](double u) { return refresh_y(geomexp_f, 2, 0, 0, 1, u) == 0; });
  CHECK(std::abs(freq - pa) <= 1.0 / n);

  // one-particle interval: both branches coincide
  CHECK(refresh_y(geomexp_f, 1, 0, 5, 5, 0.0) == 5);
  CHECK(refresh_y(geomexp_f, 1, 0, 5, 5, 0.999) == 5);

  // constant f on the occupied range degenerates to a
  auto const_f = [](int) { return 1.0; };
  CHECK(refresh_y(const_f, 3, 1, 0, 1, 0.999) == 0);

  CHECK_THROWS_AS(refresh_y(geomexp_f, 2, 2, 0, -1, 0.5), Error);
  CHECK_THROWS_AS(refresh_y(geomexp_f, 3, 0, 0, 1, 0.5), Error);
}

TEST_CASE("high walker refresh matches its two-point law") {
  // P(b-1) = (f(2) - f(1))/f(2) = 1/(e+1)
  const double plow =
      (std::exp(-1.0) - std::exp(-2.0)) / (1.0 - std::exp(-2.0));
  CHECK(plow == doctest::Approx(0.2689414213699951).epsilon(1e-15));
  CHECK(refresh_z(geomexp_f, 2, 0, 0, 1, plow - 1e-6) == 0);
  CHECK(refresh_z(geomexp_f, 2, 0, 0, 1, plow + 1e-6) == 1);
  const int n = 4096;
  double freq = sweep_freq(
      n, [&](double u) { return refresh_z(geomexp_f, 2, 0, 0, 1, u) == 0; });
  CHECK(std::abs(freq - plow) <= 1.0 / n);

  // a single discrepancy leaves no room below b
  CHECK(refresh_z(geomexp_f, 3, 2, 4, 4, 0.0) == 4);
  auto const_f = [](int) { return 1.0; };
  CHECK(refresh_z(const_f, 3, 1, 0, 1, 0.0) == 1);
}

TEST_CASE("joint refresh splits one uniform and keeps the marginals") {
  // omega = 2, eta = 0: weights 1/(e+1), (e-1)/(e+1), 1/(e+1)
  const double e1 = 1.0 / (std::exp(1.0) + 1.0);
  auto at = [&](double u) { return refresh_joint(geomexp_f, 2, 0, 0, 1, u); };
  CHECK(at(e1 - 1e-6) == std::pair<int, int>{0, 0});
  CHECK(at(e1 + 1e-6) == std::pair<int, int>{0, 1});
  CHECK(at(1.0 - e1 - 1e-6) == std::pair<int, int>{0, 1});
  CHECK(at(1.0 - e1 + 1e-6) == std::pair<int, int>{1, 1});

  // one discrepancy: every outcome is the shared single label
  for (double u : {0.0, 0.5, 0.999})
    CHECK(refresh_joint(geomexp_f, 3, 2, 7, 7, u) == std::pair<int, int>{7, 7});

  // marginals collapse to the single-walker laws over a parameter sweep
  // (intervals of size >= 2, where the branches are distinguishable)
  const int n = 4096;
  for (int eta = 0; eta <= 3; ++eta)
    for (int omega = eta + 2; omega <= eta + 4; ++omega) {
      int a = -1, b = a + omega - eta - 1;
      double fy = sweep_freq(n, [&](double u) {
        return refresh_joint(geomexp_f, omega, eta, a, b, u).first == a;
      });
      double fz = sweep_freq(n, [&](double u) {
        return refresh_joint(geomexp_f, omega, eta, a, b, u).second == b;
      });
      double den = geomexp_f(omega) - geomexp_f(eta);
      CHECK(std::abs(fy - (geomexp_f(omega - 1) - geomexp_f(eta)) / den) <=
            2.0 / n);
      CHECK(std::abs(fz - (geomexp_f(eta + 1) - geomexp_f(eta)) / den) <=
            2.0 / n);
      for (int k = 0; k < 64; ++k) {
        auto [y, z] = refresh_joint(geomexp_f, omega, eta, a, b,
                                    (k + 0.5) / 64);
        CHECK(y <= z);
        CHECK(a <= y);
        CHECK(z <= b);
      }
    }

  auto const_f = [](int) { return 1.0; };
  CHECK(refresh_joint(const_f, 3, 1, 0, 1, 0.9) == std::pair<int, int>{0, 1});
  // convex f makes the middle weight negative
  auto convex_f = [](int zz) { return static_cast<double>(zz) * zz; };
  CHECK_THROWS_AS(refresh_joint(convex_f, 3, 0, 0, 2, 0.5), Error);
}

TEST_CASE("geometric label bound") {
  DiscreteDist nu = geometric_bound_nu(0.5);
  CHECK(nu.lo() == 0);
  CHECK(nu.pmf(0) == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(nu.pmf(1) == doctest::Approx(0.25).epsilon(1e-12));
  CHECK(1.0 - nu.cdf(2) == doctest::Approx(0.125).epsilon(1e-9));

  RateSpec zrp = make_zrp(GeomExpF{1.0}, 1.0, 0.0);
  IncrementRatioReport rep = check_increment_ratio(zrp);
  REQUIRE(rep.holds);
  CHECK(rep.ratio_bound == doctest::Approx(std::exp(-1.0)).epsilon(1e-9));
  DiscreteDist nue = geometric_bound_nu(rep.ratio_bound);
  CHECK(nue.pmf(0) == doctest::Approx(1.0 - std::exp(-1.0)).epsilon(1e-9));

  CHECK_THROWS_AS(geometric_bound_nu(0.0), ConfigError);
  CHECK_THROWS_AS(geometric_bound_nu(1.0), ConfigError);
}

TEST_CASE("driver rejects unsupported backgrounds") {
  RateSpec zrp = make_zrp(GeomExpF{1.0}, 1.0, 0.0);
  RateSpec zrp_back = make_zrp(GeomExpF{1.0}, 1.0, 0.25);
  RateSpec asep = make_asep(1.0);

  CoupledState good = make_two_density_pair(zrp, 0.8, 1.0, 32, RngStream(1, 0));
  CHECK_THROWS_AS(MicroState(good, zrp_back, RngStream(1, 1)), ConfigError);
  CHECK_THROWS_AS(MicroState(good, asep, RngStream(1, 1)), ConfigError);
  CoupledState plain =
      couple(zrp, {{1, 0, 1, 0}, {1, 0, 1, 0}}, RngStream(2, 0));
  CHECK_THROWS_AS(MicroState(std::move(plain), zrp, RngStream(1, 1)),
                  ConfigError);

  MicroState m(std::move(good), zrp, RngStream(1, 1));
  CHECK(m.y() == 0);
  CHECK(m.z() == 0);
  CHECK(m.site_y() == 0);
  CHECK(m.site_z() == 0);
}

TEST_CASE("walker invariants hold along a dense trajectory") {
  RateSpec zrp = make_zrp(GeomExpF{1.0}, 1.0, 0.0);
  const int L = 128;
  MicroState m(make_two_density_pair(zrp, 0.8, 1.0, L, RngStream(31, 0)), zrp,
               RngStream(31, 1));
  std::uint64_t seen = 0;
  WalkerObserver obs = [&](const MicroState& ms, const CoupledEvent& e) {
    ++seen;
    CHECK(ms.y() <= ms.z());
    const DiscrepancyLabels& lab = ms.background().labels;
    // the walker's label lives on its carrier's site, inside the interval
    CHECK(lab.site_of(ms.y()) == ms.site_y());
    CHECK(lab.site_of(ms.z()) == ms.site_z());
    CHECK(lab.lowest_at(ms.site_y()) <= ms.y());
    CHECK(ms.y() <= lab.highest_at(ms.site_y()));
    CHECK(lab.lowest_at(ms.site_z()) <= ms.z());
    CHECK(ms.z() <= lab.highest_at(ms.site_z()));
    CHECK(e.direction == 1); // totally asymmetric: deposition only
  };
  for (double t : {1.0, 2.0, 3.0, 4.0, 5.0}) {
    m.run_to(t, RunOptions{}, obs);
    FourView v = four_process_view(m);
    int diff_minus = 0, diff_plus = 0;
    for (int i = 0; i < L; ++i) {
      auto iu = static_cast<std::size_t>(i);
      CHECK(v.eta[iu] <= v.eta_plus[iu]);
      CHECK(v.eta_plus[iu] <= v.omega[iu]);
      CHECK(v.eta[iu] <= v.omega_minus[iu]);
      CHECK(v.omega_minus[iu] <= v.omega[iu]);
      diff_minus += v.omega[iu] - v.omega_minus[iu];
      diff_plus += v.eta_plus[iu] - v.eta[iu];
    }
    CHECK(diff_minus == 1);
    CHECK(diff_plus == 1);
    // the high walker's particle never trails the low walker's
    CHECK(unwrap(v.q_eta_site, L) >= unwrap(v.q_site, L));
  }
  CHECK(seen > 100);
}

TEST_CASE("single-discrepancy background pins both walkers") {
  RateSpec zrp = make_zrp(GeomExpF{1.0}, 1.0, 0.0);
  MicroState m(make_discrepancy_pair(zrp, 1.0, 64, RngStream(8, 0)), zrp,
               RngStream(8, 1));
  m.run_to(3.0, RunOptions{}, [](const MicroState& ms, const CoupledEvent&) {
    CHECK(ms.y() == 0);
    CHECK(ms.z() == 0);
    CHECK(ms.site_y() == ms.site_z());
  });
  // with one discrepancy the dressed processes collapse onto the pair
  FourView v = four_process_view(m);
  CHECK(v.omega_minus == m.background().configs[0]);
  CHECK(v.eta_plus == m.background().configs[1]);
  CHECK(v.q_site == m.background().labels.site_of(0));
}

TEST_CASE("walker carriers reproduce the single-discrepancy laws") {
  RateSpec zrp = make_zrp(GeomExpF{1.0}, 1.0, 0.0);
  const int L = 64, reps = 2000;
  const double t = 2.0, r = std::exp(-1.0);
  std::vector<double> q_micro, qeta_micro, q_upper, q_lower;
  std::vector<int> ylab, zlab;
  for (int rep = 0; rep < reps; ++rep) {
    MicroState m(make_two_density_pair(zrp, 0.8, 1.0, L, RngStream(500, rep)),
                 zrp, RngStream(501, rep));
    m.run_to(t);
    q_micro.push_back(unwrap(m.site_y(), L));
    qeta_micro.push_back(unwrap(m.site_z(), L));
    ylab.push_back(m.y());
    zlab.push_back(m.z());

    CoupledState up = make_discrepancy_pair(zrp, 1.0, L, RngStream(502, rep));
    q_upper.push_back(
        static_cast<double>(track_Q(up, zrp, std::vector<double>{t})[0]));
    CoupledState lo = make_discrepancy_pair(zrp, 0.8, L, RngStream(503, rep));
    q_lower.push_back(
        static_cast<double>(track_Q(lo, zrp, std::vector<double>{t})[0]));
  }
  // X_y walks as the density-1 second class particle, X_z as the 0.8 one
  TwoSampleKs ky = two_sample_ks(q_micro, q_upper, 0.01);
  CHECK(ky.pass);
  TwoSampleKs kz = two_sample_ks(qeta_micro, q_lower, 0.01);
  CHECK(kz.pass);

  // geometric stochastic bounds on the labels themselves
  double margin = dkw_margin(reps, 1e-3);
  for (int mlev = 1; mlev <= 8; ++mlev) {
    double tail_y = 0.0, tail_z = 0.0;
    for (int v : ylab) tail_y += v >= mlev;
    for (int v : zlab) tail_z += v <= -mlev;
    CHECK(tail_y / reps <= std::pow(r, mlev) + margin);
    CHECK(tail_z / reps <= std::pow(r, mlev) + margin);
  }
}

TEST_CASE("a walker reaching the ring cut aborts loudly") {
  RateSpec zrp = make_zrp(GeomExpF{1.0}, 1.0, 0.0);
  MicroState m(make_two_density_pair(zrp, 0.5, 2.0, 4, RngStream(77, 0)), zrp,
               RngStream(77, 1));
  CHECK_THROWS_AS(m.run_to(50.0), GuardError);
}

TEST_CASE("walker trajectories are reproducible") {
  RateSpec zrp = make_zrp(GeomExpF{1.0}, 1.0, 0.0);
  MicroState a(make_two_density_pair(zrp, 0.8, 1.0, 64, RngStream(91, 5)), zrp,
               RngStream(91, 6));
  MicroState b(make_two_density_pair(zrp, 0.8, 1.0, 64, RngStream(91, 5)), zrp,
               RngStream(91, 6));
  a.run_to(2.0);
  b.run_to(2.0);
  CHECK(a.y() == b.y());
  CHECK(a.z() == b.z());
  CHECK(a.site_y() == b.site_y());
  CHECK(a.site_z() == b.site_z());
  CHECK(a.background().configs == b.background().configs);
}

} // TEST_SUITE
