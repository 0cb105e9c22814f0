#include "doctest.h"

#include "depsim/errors.hpp"
#include "depsim/flux.hpp"
#include "depsim/harness/config.hpp"
#include "depsim/harness/experiments.hpp"
#include "depsim/measures.hpp"
#include "depsim/microconcavity.hpp"
#include "depsim/rates.hpp"

#include <atomic>
#include <cmath>
#include <cstdlib>
#include <string>
#include <vector>

using namespace depsim;
using namespace depsim::harness;

namespace {

// a tazrp config small enough for unit-test budgets
ExperimentConfig tiny_zrp(double t, int replicates) {
  ExperimentConfig cfg;
  cfg.model.family = "zrp";
  cfg.rho = 1.0;
  cfg.t_list = {t};
  cfg.replicates = replicates;
  cfg.master_seed = 42;
  return cfg;
}

struct WorkerEnv {
  std::string saved;
  bool had = false;
  explicit WorkerEnv(const char* v) {
    if (const char* old = std::getenv("DEPSIM_WORKERS")) {
      saved = old;
      had = true;
    }
    setenv("DEPSIM_WORKERS", v, 1);
  }
  ~WorkerEnv() {
    if (had)
      setenv("DEPSIM_WORKERS", saved.c_str(), 1);
    else
      unsetenv("DEPSIM_WORKERS");
  }
};

} // namespace

TEST_SUITE("harness") {

TEST_CASE("config json round trip and overrides") {
  ExperimentConfig cfg = parse_config(R"({
    "model": {"family": "zrp", "f": "geom-exp", "beta": 2.0, "p": 1.0},
    "rho": 0.7, "lambda": 0.4, "v": -0.25,
    "t_list": [1.0, 2.0, 4.0],
    "L": "auto", "replicates": 50, "master_seed": 9,
    "guard_factor": 8.0, "occ_cap": 40,
    "csv": "out.csv", "summary": "out.json"
  })");
  CHECK(cfg.model.family == "zrp");
  CHECK(cfg.model.beta == 2.0);
  CHECK(cfg.rho == 0.7);
  CHECK(cfg.lambda == 0.4);
  REQUIRE(cfg.v_override.has_value());
  CHECK(*cfg.v_override == -0.25);
  CHECK(cfg.t_list.size() == 3);
  CHECK(cfg.L == 0);
  CHECK(cfg.replicates == 50);
  CHECK(cfg.master_seed == 9);
  CHECK(cfg.guard_factor == 8.0);
  CHECK(cfg.occ_cap == 40);
  CHECK(cfg.csv_path == "out.csv");
  CHECK(cfg.summary_path == "out.json");

  // explicit integer L
  CHECK(parse_config(R"({"L": 64})").L == 64);

  // defaults survive an empty document
  ExperimentConfig d = parse_config("{}");
  CHECK(d.model.family == "asep");
  CHECK(d.rho == 0.5);
  CHECK(d.replicates == 2000);
}

TEST_CASE("config rejects malformed documents") {
  CHECK_THROWS_AS(parse_config("nonsense"), ConfigError);
  CHECK_THROWS_AS(parse_config("[1,2]"), ConfigError);
  CHECK_THROWS_AS(parse_config(R"({"rho": "high"})"), ConfigError);
  CHECK_THROWS_AS(parse_config(R"({"t_list": [2.0, 1.0]})"), ConfigError);
  CHECK_THROWS_AS(parse_config(R"({"t_list": []})"), ConfigError);
  CHECK_THROWS_AS(parse_config(R"({"replicates": 1})"), ConfigError);
  CHECK_THROWS_AS(parse_config(R"({"L": "tiny"})"), ConfigError);
  CHECK_THROWS_AS(parse_config(R"({"L": 3})"), ConfigError);
  CHECK_THROWS_AS(parse_config(R"({"rho": -0.5})"), ConfigError);
  CHECK_THROWS_AS(parse_config(R"({"rho": 0.5, "lambda": 0.9})"), ConfigError);
  CHECK_THROWS_AS(parse_config(R"({"guard_factor": 0.5})"), ConfigError);
  CHECK_THROWS_AS(parse_config(R"({"model": {"family": "nosuch"}})"),
                  ConfigError);
  CHECK_THROWS_AS(load_config("/nonexistent/path.json"), ConfigError);
}

TEST_CASE("model builder covers every family") {
  ModelConfig m;
  m.family = "asep";
  CHECK(build_model(m).form == RateForm::DensePair);
  m.family = "zrp";
  CHECK(build_model(m).form == RateForm::ZeroRange);
  m.family = "zrp-const";
  CHECK(build_model(m).form == RateForm::ZeroRange);
  m.family = "bricklayers";
  CHECK(build_model(m).form == RateForm::Bricklayer);
  m.family = "pap";
  CHECK(build_model(m).form == RateForm::DensePair);

  m.family = "zrp";
  m.f = "table";
  m.f_table = {0.5, 0.75};
  m.table_tail = "geometric";
  m.increment_ratio = 0.5;
  CHECK(build_model(m).form == RateForm::ZeroRange);
  m.table_tail = "bogus";
  CHECK_THROWS_AS(build_model(m), ConfigError);
  m.table_tail = "constant";
  m.f = "bogus";
  CHECK_THROWS_AS(build_model(m), ConfigError);
}

TEST_CASE("ring size honors the guard and explicit sizes") {
  ExperimentConfig cfg = tiny_zrp(4.0, 10);
  RateSpec spec = build_model(cfg.model);
  int L = ring_size(spec, cfg);
  CHECK(L % 2 == 0);
  CHECK(L >= 8);

  // the guard inequality itself holds at the derived size
  auto [lo, hi] = sim_window(spec.space, cfg.occ_cap);
  double rub = bond_rate_bound(compile_rates(spec, lo, hi));
  double speed = std::abs(char_speed(spec, cfg.rho));
  int max_site = static_cast<int>(std::ceil(speed * 4.0)) + 2;
  CHECK(static_cast<double>(L) >=
        cfg.guard_factor * (rub * 4.0 + static_cast<double>(max_site)));

  // longer horizon needs a larger ring, override speed enlarges it too
  ExperimentConfig longer = cfg;
  longer.t_list = {16.0};
  CHECK(ring_size(spec, longer) > L);
  ExperimentConfig fast = cfg;
  fast.v_override = 5.0;
  CHECK(ring_size(spec, fast) > L);

  cfg.L = 50;
  CHECK(ring_size(spec, cfg) == 50);
}

TEST_CASE("micro lambda defaults to a fraction of rho") {
  ExperimentConfig cfg = tiny_zrp(1.0, 10);
  CHECK(micro_lambda(cfg) == doctest::Approx(0.8).epsilon(1e-12));
  cfg.lambda = 0.3;
  CHECK(micro_lambda(cfg) == 0.3);
}

TEST_CASE("parallel for covers the range once and rethrows") {
  WorkerEnv env("3");
  CHECK(worker_count() == 3);
  std::vector<std::atomic<int>> hits(257);
  parallel_for(257, [&](int i) { hits[static_cast<std::size_t>(i)]++; });
  for (const auto& h : hits) CHECK(h.load() == 1);

  CHECK_THROWS_AS(
      parallel_for(64,
                   [&](int i) {
                     if (i == 13) throw ConfigError("boom");
                   }),
      ConfigError);
}

TEST_CASE("replicate results do not depend on the worker count") {
  ExperimentConfig cfg = tiny_zrp(2.0, 60);
  cfg.t_list = {1.0, 2.0};
  std::vector<std::vector<long long>> q1, q3;
  {
    WorkerEnv env("1");
    q1 = sample_Q(cfg).q;
  }
  {
    WorkerEnv env("3");
    q3 = sample_Q(cfg).q;
  }
  CHECK(q1 == q3);
}

TEST_CASE("moment estimates: t zero vanishes and closed forms match") {
  QSamples qs;
  qs.t_grid = {0.0, 2.0};
  qs.v_rho = 0.75;
  qs.q = {{0, 0, 0, 0}, {2, 1, -1, 2}};
  std::vector<double> orders{1.0, 2.0};
  auto est = estimate_Q_moments(qs, orders);
  REQUIRE(est.size() == 4);
  CHECK(est[0].value == 0.0);
  CHECK(est[1].value == 0.0);

  // floor(0.75 * 2) = 1, |q - 1| = {1, 0, 2, 1}
  CHECK(est[2].m == 1.0);
  CHECK(est[2].value == doctest::Approx(1.0));
  CHECK(est[3].value == doctest::Approx(6.0 / 4.0));
  CHECK(est[2].n == 4);
  CHECK(est[2].std_error > 0.0);

  // negative speeds floor downward
  qs.v_rho = -0.75;
  qs.q = {{0, 0}, {-2, -2}};
  auto neg = estimate_Q_moments(qs, std::vector<double>{1.0});
  CHECK(neg[1].value == 0.0); // floor(-1.5) = -2

  CHECK_THROWS_AS(estimate_Q_moments(qs, std::vector<double>{0.0}),
                  ConfigError);
}

TEST_CASE("scaling fit recovers exact power laws") {
  std::vector<MomentEstimate> pts;
  for (double t : {4.0, 8.0, 16.0, 32.0, 64.0})
    pts.push_back({t, 1.0, 3.0 * std::pow(t, 2.0 / 3.0), 0.01, 100});
  LineFit fit = fit_scaling(pts);
  CHECK(fit.slope == doctest::Approx(2.0 / 3.0).epsilon(1e-9));
  CHECK(std::exp(fit.intercept) == doctest::Approx(3.0).epsilon(1e-9));
  CHECK(fit.slope_ci_lo <= fit.slope);
  CHECK(fit.slope <= fit.slope_ci_hi);

  CHECK(growth_ratio(pts) ==
        doctest::Approx(std::pow(4.0, 2.0 / 3.0)).epsilon(1e-9));

  std::vector<MomentEstimate> few(pts.begin(), pts.begin() + 3);
  CHECK_THROWS_AS(fit_scaling(few), ConfigError);
  std::vector<MomentEstimate> mixed = pts;
  mixed[1].m = 2.0;
  CHECK_THROWS_AS(fit_scaling(mixed), ConfigError);
  std::vector<MomentEstimate> no_pair{{3.0, 1.0, 1.0, 0.1, 10},
                                      {5.0, 1.0, 1.0, 0.1, 10},
                                      {7.0, 1.0, 1.0, 0.1, 10},
                                      {11.0, 1.0, 1.0, 0.1, 10}};
  CHECK_THROWS_AS(growth_ratio(no_pair), ConfigError);
}

TEST_CASE("lln check on synthetic samples") {
  QSamples qs;
  qs.t_grid = {1.0, 4.0, 16.0};
  qs.v_rho = 0.5;
  // Q/t means 1, 0.5625, 0.515625 with shrinking spread
  qs.q = {{0, 1, 1, 2}, {2, 2, 2, 3}, {8, 8, 8, 9}};
  LlnResult r = lln_check(qs);
  REQUIRE(r.rows.size() == 3);
  CHECK(r.rows[0].mean_qt == doctest::Approx(1.0));
  CHECK(r.rows[2].deviation == doctest::Approx(0.015625));
  CHECK(r.envelope_decreasing); // se shrinks by 1/t, deviation shrinks too
  CHECK(r.last_within_4se);

  QSamples flat;
  flat.t_grid = {0.0};
  flat.v_rho = 0.5;
  flat.q = {{0, 0}};
  CHECK_THROWS_AS(lln_check(flat), ConfigError);
}

TEST_CASE("domination test accepts the envelope and rejects heavier tails") {
  double r = std::exp(-1.0);
  std::vector<int> zeros(2000, 0);
  DominationCheck ok = domination_test(zeros, zeros, r, 0.001);
  CHECK(ok.pass);
  CHECK(ok.worst_gap <= 1.0 - (1.0 - r)); // tail at m=0 is exactly 1

  // draw from nu itself: tails r^m, must pass inside the DKW band
  DiscreteDist nu = geometric_bound_nu(r);
  RngStream rng(7, 0);
  std::vector<int> ys(4000), zs(4000);
  for (std::size_t i = 0; i < ys.size(); ++i) {
    ys[i] = nu.sample(rng);
    zs[i] = -nu.sample(rng);
  }
  CHECK(domination_test(ys, zs, r, 0.001).pass);

  // a fat right tail fails: half the mass at m = 6 where r^6 ~ 0.0025
  std::vector<int> fat(2000, 0);
  for (std::size_t i = 0; i < fat.size(); i += 2) fat[i] = 6;
  DominationCheck bad = domination_test(fat, zeros, r, 0.001);
  CHECK_FALSE(bad.pass);
  CHECK(bad.worst_m == 6);
  CHECK(bad.worst_gap > 0.4);

  std::vector<int> few(10, 0);
  CHECK_THROWS_AS(domination_test(few, zeros, r, 0.001), ConfigError);
  CHECK_THROWS_AS(domination_test(zeros, zeros, 1.5, 0.001), ConfigError);
}

TEST_CASE("clt check rejects missing or characteristic speeds") {
  ExperimentConfig cfg;
  cfg.model.family = "asep";
  cfg.rho = 0.5;
  cfg.t_list = {2.0};
  cfg.replicates = 10;
  CHECK_THROWS_AS(clt_check(cfg), ConfigError);
  cfg.v_override = 0.0; // char speed of asep at rho = 1/2 is exactly 0
  CHECK_THROWS_AS(clt_check(cfg), ConfigError);
}

TEST_CASE("csv text is stable and exact") {
  std::vector<ResultRow> rows{
      {"identities", "zrp", 1.0, 20.0, "mean-Q", 3.0625, 0.125, 2000},
      {"flux", "asep", 0.25, 0.0, "H", 0.1875, 0.0, 0}};
  std::string text = csv_text(rows);
  CHECK(text ==
        "experiment,model,rho,t,observable,value,std_error,n\n"
        "identities,zrp,1,20,mean-Q,3.0625,0.125,2000\n"
        "flux,asep,0.25,0,H,0.1875,0,0\n");
  CHECK_THROWS_AS(write_csv("/nonexistent/dir/x.csv", rows), Error);
}

TEST_CASE("identities hold end to end at small scale") {
  ExperimentConfig cfg = tiny_zrp(3.0, 400);
  IdentityResult r = identities_check(cfg);
  CHECK(r.pass_mean);
  // the variance identity needs more replicates for the 5% band, so only
  // require CI overlap here
  double lo_a = r.var_h0 - 3.0 * r.var_h0_se;
  double hi_a = r.var_h0 + 3.0 * r.var_h0_se;
  double lo_b = r.var_via_q - 3.0 * r.var_via_q_se;
  double hi_b = r.var_via_q + 3.0 * r.var_via_q_se;
  CHECK(lo_a <= hi_b);
  CHECK(lo_b <= hi_a);
}

TEST_CASE("micro check runs walkers end to end at small scale") {
  ExperimentConfig cfg = tiny_zrp(2.0, 1200);
  MicroCheckResult r = micro_check(cfg, 0.01, 0.001);
  CHECK(r.trajectories == 1200);
  CHECK(r.sandwich_failures == 0);
  CHECK(r.r == doctest::Approx(std::exp(-1.0)).epsilon(1e-9));
  CHECK(r.dom.pass);
  CHECK(r.ks.pass);
  CHECK(r.events > 0);
}

} // TEST_SUITE
