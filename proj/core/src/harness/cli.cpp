#include "depsim/harness/cli.hpp"

#include "depsim/coupling.hpp"
#include "depsim/errors.hpp"
#include "depsim/flux.hpp"
#include "depsim/harness/config.hpp"
#include "depsim/harness/experiments.hpp"
#include "depsim/measures.hpp"
#include "depsim/microconcavity.hpp"
#include "depsim/oracle.hpp"
#include "depsim/rates.hpp"
#include "depsim/simulator.hpp"
#include "depsim/stats.hpp"

#include "CLI11.hpp"
#include "json.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>

namespace depsim::harness {

namespace {

struct Check {
  std::string name;
  bool pass = false;
  double value = 0.0;
  double threshold = 0.0;
};

// prints the checks, writes CSV / summary JSON when paths are set, and
// returns the exit code (0 all pass, 2 otherwise)
int finish(const ExperimentConfig& cfg, const std::string& experiment,
           const std::vector<Check>& checks,
           const std::vector<ResultRow>& rows, bool csv_to_stdout = false) {
  bool all = true;
  for (const Check& c : checks) all = all && c.pass;
  if (!cfg.csv_path.empty())
    write_csv(cfg.csv_path, rows);
  else if (csv_to_stdout && !rows.empty())
    std::cout << csv_text(rows);
  for (const Check& c : checks)
    std::printf("check %-26s value=%-12.6g threshold=%-12.6g %s\n",
                c.name.c_str(), c.value, c.threshold,
                c.pass ? "pass" : "FAIL");
  if (!cfg.summary_path.empty()) {
    nlohmann::json js;
    js["experiment"] = experiment;
    js["pass"] = all;
    js["checks"] = nlohmann::json::array();
    for (const Check& c : checks)
      js["checks"].push_back({{"name", c.name},
                              {"pass", c.pass},
                              {"value", c.value},
                              {"threshold", c.threshold}});
    std::ofstream out(cfg.summary_path);
    if (!out) throw Error("summary: cannot open '" + cfg.summary_path + "'");
    out << js.dump(2) << "\n";
  }
  std::printf("%s: %s\n", experiment.c_str(), all ? "PASS" : "FAIL");
  return all ? 0 : 2;
}

// shared flags; a --config file loads first, flags given on the command
// line override its fields
struct Shared {
  CLI::App* cmd = nullptr;
  std::string config_path;
  ModelConfig m;
  double rho = 0.0, lambda = 0.0, v = 0.0, guard = 0.0;
  std::vector<double> t;
  std::string L_text;
  int reps = 0, cap = 0;
  std::uint64_t seed = 0;
  std::string csv, summary;

  void attach(CLI::App* c) {
    cmd = c;
    c->add_option("--config", config_path,
                  "JSON experiment config; flags override its fields");
    c->add_option("--model", m.family,
                  "asep | zrp | zrp-const | bricklayers | pap");
    c->add_option("--p", m.p, "right jump coefficient");
    c->add_option("--q", m.q, "left jump coefficient");
    c->add_option("--f", m.f, "rate factor: geom-exp | const | linear | table");
    c->add_option("--beta", m.beta, "factor exponent");
    c->add_option("--f-table", m.f_table, "tabulated factor f(1),f(2),...")
        ->delimiter(',');
    c->add_option("--tail", m.table_tail,
                  "table continuation: constant | geometric");
    c->add_option("--increment-ratio", m.increment_ratio,
                  "geometric tail ratio of a tabulated factor");
    c->add_option("--a", m.a, "pair annihilation weight");
    c->add_option("--c", m.c, "pair creation weight");
    c->add_option("--rho", rho, "mean density");
    c->add_option("--lambda", lambda, "lower density of two-density runs");
    c->add_option("--v", v, "observation speed override");
    c->add_option("--t", t, "time grid, comma separated")->delimiter(',');
    c->add_option("--L", L_text, "ring size, or 'auto' for the guard bound");
    c->add_option("--replicates", reps, "independent trajectories");
    c->add_option("--seed", seed, "master seed override");
    c->add_option("--guard-factor", guard, "wraparound safety factor");
    c->add_option("--occ-cap", cap, "occupancy window half width");
    c->add_option("--csv", csv, "write result rows here");
    c->add_option("--summary", summary, "write the JSON check summary here");
  }

  ExperimentConfig merged() const {
    ExperimentConfig cfg =
        config_path.empty() ? ExperimentConfig{} : load_config(config_path);
    auto has = [&](const char* n) { return cmd->count(n) > 0; };
    if (has("--model")) cfg.model.family = m.family;
    if (has("--p")) cfg.model.p = m.p;
    if (has("--q")) cfg.model.q = m.q;
    if (has("--f")) cfg.model.f = m.f;
    if (has("--beta")) cfg.model.beta = m.beta;
    if (has("--f-table")) cfg.model.f_table = m.f_table;
    if (has("--tail")) cfg.model.table_tail = m.table_tail;
    if (has("--increment-ratio")) cfg.model.increment_ratio = m.increment_ratio;
    if (has("--a")) cfg.model.a = m.a;
    if (has("--c")) cfg.model.c = m.c;
    if (has("--rho")) cfg.rho = rho;
    if (has("--lambda")) cfg.lambda = lambda;
    if (has("--v")) cfg.v_override = v;
    if (has("--t")) cfg.t_list = t;
    if (has("--L")) {
      if (L_text == "auto") {
        cfg.L = 0;
      } else {
        std::size_t used = 0;
        int L = 0;
        try {
          L = std::stoi(L_text, &used);
        } catch (const std::exception&) {
          used = 0;
        }
        if (used != L_text.size())
          throw ConfigError("config: L must be an integer or \"auto\"");
        cfg.L = L;
      }
    }
    if (has("--replicates")) cfg.replicates = reps;
    if (has("--seed")) cfg.master_seed = seed;
    if (has("--guard-factor")) cfg.guard_factor = guard;
    if (has("--occ-cap")) cfg.occ_cap = cap;
    if (has("--csv")) cfg.csv_path = csv;
    if (has("--summary")) cfg.summary_path = summary;
    check_config(cfg);
    return cfg;
  }
};

int unwrap(int site, int L) { return site <= L / 2 ? site : site - L; }

std::vector<double> parse_grid(const std::string& text) {
  double lo = 0.0, hi = 0.0, step = 0.0;
  int used = -1;
  if (std::sscanf(text.c_str(), "%lf:%lf:%lf%n", &lo, &hi, &step, &used) != 3 ||
      used != static_cast<int>(text.size()) || !(step > 0.0) || hi < lo)
    throw ConfigError("flux: --rho-grid must be lo:hi:step with step > 0");
  std::vector<double> out;
  long long n = static_cast<long long>(std::floor((hi - lo) / step + 1e-9));
  for (long long k = 0; k <= n; ++k) out.push_back(lo + static_cast<double>(k) * step);
  return out;
}

int cmd_validate(const Shared& sh, int win_lo, int win_hi) {
  ExperimentConfig cfg = sh.merged();
  RateSpec spec = build_model(cfg.model);
  ValidationReport rep = validate(spec, win_lo, win_hi);
  for (const Violation& v : rep.violations)
    std::printf("violation %s: %s\n", v.condition.c_str(), v.detail.c_str());
  std::vector<ResultRow> rows;
  for (const Violation& v : rep.violations)
    rows.push_back({"validate", cfg.model.family, cfg.rho, 0.0,
                    "violation:" + v.condition, 1.0, 0.0, 0});
  return finish(cfg, "validate",
                {{"structural-conditions", rep.ok(),
                  static_cast<double>(rep.violations.size()), 0.0}},
                rows);
}

int cmd_flux(const Shared& sh, const std::string& grid_text) {
  ExperimentConfig cfg = sh.merged();
  RateSpec spec = build_model(cfg.model);
  std::vector<double> grid =
      grid_text.empty() ? std::vector<double>{cfg.rho} : parse_grid(grid_text);
  std::vector<ResultRow> rows;
  for (double r : grid) {
    FluxEvaluation fe = flux_eval(spec, r);
    rows.push_back({"flux", cfg.model.family, r, 0.0, "H", fe.H,
                    fe.tail_bound, 0});
    rows.push_back({"flux", cfg.model.family, r, 0.0, "V", fe.V, 0.0, 0});
    rows.push_back({"flux", cfg.model.family, r, 0.0, "H2", fe.H2,
                    fe.H2_margin, 0});
  }
  return finish(cfg, "flux",
                {{"evaluations-completed", true,
                  static_cast<double>(grid.size()),
                  static_cast<double>(grid.size())}},
                rows, /*csv_to_stdout=*/true);
}

int cmd_stationarity(const Shared& sh, int ring, double tol) {
  ExperimentConfig cfg = sh.merged();
  RateSpec spec = build_model(cfg.model);
  if (ring < 2 || ring > 16)
    throw ConfigError("stationarity: ring size must be in [2, 16]");
  TiltedMeasure tm = tilted(spec, theta_of_density(spec, cfg.rho));
  double width = static_cast<double>(tm.dist.hi() - tm.dist.lo() + 1);
  if (std::pow(width, ring) > 1e6)
    throw ConfigError("stationarity: state space too large, shrink the ring "
                      "or the occupancy window");
  ChainOptions copt;
  copt.occ_lo = tm.dist.lo();
  copt.occ_hi = tm.dist.hi();
  ExactChain chain = build_chain(spec, ring, copt);
  double res = stationarity_residual(chain, tm.dist);
  std::vector<ResultRow> rows{{"stationarity", cfg.model.family, cfg.rho, 0.0,
                               "generator-residual", res, 0.0,
                               static_cast<long long>(chain.size())}};
  return finish(cfg, "stationarity",
                {{"stationarity-residual", res < tol, res, tol}}, rows);
}

int cmd_identities(const Shared& sh) {
  ExperimentConfig cfg = sh.merged();
  IdentityResult r = identities_check(cfg);
  const std::string& fam = cfg.model.family;
  long long n = r.n;
  std::vector<ResultRow> rows{
      {"identities", fam, cfg.rho, r.t, "mean-Q", r.mean_q, r.mean_q_se, n},
      {"identities", fam, cfg.rho, r.t, "v-rho-t", r.v_rho * r.t, 0.0, 0},
      {"identities", fam, cfg.rho, r.t, "var-h0-direct", r.var_h0, r.var_h0_se,
       n},
      {"identities", fam, cfg.rho, r.t, "var-h0-via-absQ", r.var_via_q,
       r.var_via_q_se, n}};
  double rel = std::abs(r.var_h0 - r.var_via_q) /
               std::max(r.var_h0, r.var_via_q);
  return finish(cfg, "identities",
                {{"mean-displacement", r.pass_mean,
                  std::abs(r.mean_q - r.v_rho * r.t), 4.0 * r.mean_q_se},
                 {"current-variance-match", r.pass_var, rel, 0.05}},
                rows);
}

int cmd_scaling(const Shared& sh, double slope_lo, double slope_hi,
                double growth_min) {
  ExperimentConfig cfg = sh.merged();
  QSamples qs = sample_Q(cfg);
  std::vector<double> orders{1.0, 2.0};
  std::vector<MomentEstimate> all = estimate_Q_moments(qs, orders);
  std::vector<MomentEstimate> m1, m2;
  for (const MomentEstimate& e : all) {
    if (e.m == 1.0 && e.t > 0.0 && e.value > 0.0) m1.push_back(e);
    if (e.m == 2.0 && e.t > 0.0 && e.value > 0.0) m2.push_back(e);
  }
  LineFit fit = fit_scaling(m1);
  double ratio = growth_ratio(m2);
  const std::string& fam = cfg.model.family;
  std::vector<ResultRow> rows;
  for (const MomentEstimate& e : all) {
    char name[32];
    std::snprintf(name, sizeof name, "absQ-moment-%g", e.m);
    rows.push_back({"scaling", fam, cfg.rho, e.t, name, e.value, e.std_error,
                    e.n});
  }
  rows.push_back({"scaling", fam, cfg.rho, 0.0, "slope", fit.slope,
                  (fit.slope_ci_hi - fit.slope_ci_lo) / 2.0,
                  static_cast<long long>(fit.n)});
  rows.push_back({"scaling", fam, cfg.rho, 0.0, "second-moment-4t-ratio",
                  ratio, 0.0, 0});
  return finish(cfg, "scaling",
                {{"slope-above", fit.slope >= slope_lo, fit.slope, slope_lo},
                 {"slope-below", fit.slope <= slope_hi, fit.slope, slope_hi},
                 {"second-moment-growth", ratio > growth_min, ratio,
                  growth_min}},
                rows);
}

int cmd_clt(const Shared& sh, double var_tol, double ks_tol) {
  ExperimentConfig cfg = sh.merged();
  CltResult r = clt_check(cfg);
  const std::string& fam = cfg.model.family;
  std::vector<ResultRow> rows{
      {"clt", fam, cfg.rho, r.t, "var-h-over-t", r.var_h / r.t,
       r.var_se / r.t, r.n},
      {"clt", fam, cfg.rho, r.t, "limit-constant", r.d_const, 0.0, 0},
      {"clt", fam, cfg.rho, r.t, "variance-ratio", r.variance_ratio, 0.0, r.n},
      {"clt", fam, cfg.rho, r.t, "lattice-ks", r.ks_distance, 0.0, r.n}};
  return finish(cfg, "clt",
                {{"variance-ratio", std::abs(r.variance_ratio - 1.0) <= var_tol,
                  std::abs(r.variance_ratio - 1.0), var_tol},
                 {"gaussian-ks", r.ks_distance < ks_tol, r.ks_distance,
                  ks_tol}},
                rows);
}

int cmd_lln(const Shared& sh) {
  ExperimentConfig cfg = sh.merged();
  QSamples qs = sample_Q(cfg);
  LlnResult r = lln_check(qs);
  const std::string& fam = cfg.model.family;
  std::vector<ResultRow> rows;
  for (const LlnRow& row : r.rows)
    rows.push_back({"lln", fam, cfg.rho, row.t, "Q-over-t", row.mean_qt,
                    row.se, cfg.replicates});
  rows.push_back({"lln", fam, cfg.rho, 0.0, "v-rho", r.v_rho, 0.0, 0});
  const LlnRow& first = r.rows.front();
  const LlnRow& last = r.rows.back();
  return finish(cfg, "lln",
                {{"final-speed", r.last_within_4se, last.deviation,
                  4.0 * last.se},
                 {"envelope-decreasing", r.envelope_decreasing,
                  last.deviation + 4.0 * last.se,
                  first.deviation + 4.0 * first.se}},
                rows);
}

int cmd_micro(const Shared& sh, double ks_alpha, double dom_alpha) {
  ExperimentConfig cfg = sh.merged();
  MicroCheckResult r = micro_check(cfg, ks_alpha, dom_alpha);
  const std::string& fam = cfg.model.family;
  double t_end = cfg.t_list.back();
  Estimate qw = mean_estimate(r.q_walker);
  Estimate qd = mean_estimate(r.q_direct);
  std::vector<ResultRow> rows{
      {"microconcavity", fam, cfg.rho, t_end, "sandwich-failures",
       static_cast<double>(r.sandwich_failures), 0.0, r.trajectories},
      {"microconcavity", fam, cfg.rho, t_end, "walker-Q-mean", qw.value,
       qw.std_error, r.trajectories},
      {"microconcavity", fam, cfg.rho, t_end, "direct-Q-mean", qd.value,
       qd.std_error, r.trajectories},
      {"microconcavity", fam, cfg.rho, t_end, "dom-worst-gap", r.dom.worst_gap,
       0.0, r.trajectories},
      {"microconcavity", fam, cfg.rho, t_end, "carrier-ks", r.ks.distance, 0.0,
       r.trajectories}};
  return finish(cfg, "microconcavity",
                {{"sandwich-order", r.sandwich_failures == 0,
                  static_cast<double>(r.sandwich_failures), 0.0},
                 {"geometric-domination", r.dom.pass, r.dom.worst_gap,
                  r.dom.margin},
                 {"carrier-law-ks", r.ks.pass, r.ks.distance, r.ks.threshold}},
                rows);
}

int cmd_dump(const Shared& sh) {
  ExperimentConfig cfg = sh.merged();
  RateSpec spec = build_model(cfg.model);
  int L = ring_size(spec, cfg);
  MicroState m(make_two_density_pair(spec, micro_lambda(cfg), cfg.rho, L,
                                     RngStream(cfg.master_seed, 0)),
               spec, RngStream(cfg.master_seed, 1));
  std::string text = "time,y,z,X_y,X_z\n";
  auto row = [&]() {
    char buf[160];
    std::snprintf(buf, sizeof buf, "%.17g,%d,%d,%d,%d\n", m.time(), m.y(),
                  m.z(), unwrap(m.site_y(), L), unwrap(m.site_z(), L));
    text += buf;
  };
  row();
  int py = m.y(), pz = m.z(), psy = m.site_y(), psz = m.site_z();
  WalkerObserver obs = [&](const MicroState& ms, const CoupledEvent&) {
    if (ms.y() != py || ms.z() != pz || ms.site_y() != psy ||
        ms.site_z() != psz) {
      row();
      py = ms.y();
      pz = ms.z();
      psy = ms.site_y();
      psz = ms.site_z();
    }
  };
  RunOptions opt;
  opt.occ_cap = cfg.occ_cap;
  m.run_to(cfg.t_list.back(), opt, obs);
  row();
  if (cfg.csv_path.empty()) {
    std::cout << text;
  } else {
    std::ofstream out(cfg.csv_path);
    if (!out) throw Error("csv: cannot open '" + cfg.csv_path + "'");
    out << text;
  }
  std::printf("dump-trajectory: PASS\n");
  return 0;
}

} // namespace

int run_cli(const std::vector<std::string>& args) {
  CLI::App app{"deposition process simulator and verification harness"};
  app.require_subcommand(1);

  Shared sh[9];
  int win_lo = -12, win_hi = 12;
  std::string grid_text;
  int ring = 3;
  double tol = 1e-8;
  double slope_lo = 0.55, slope_hi = 0.80, growth_min = 4.5;
  double var_tol = 0.15, ks_tol = 0.02;
  double ks_alpha = 0.01, dom_alpha = 0.001;

  int rc = 0;
  auto* validate_cmd =
      app.add_subcommand("validate", "structural rate conditions");
  sh[0].attach(validate_cmd);
  validate_cmd->add_option("--win-lo", win_lo, "occupancy window low edge");
  validate_cmd->add_option("--win-hi", win_hi, "occupancy window high edge");
  validate_cmd->callback([&] { rc = cmd_validate(sh[0], win_lo, win_hi); });

  auto* flux_cmd =
      app.add_subcommand("flux", "hydrodynamic flux, speed and curvature");
  sh[1].attach(flux_cmd);
  flux_cmd->add_option("--rho-grid", grid_text, "density grid lo:hi:step");
  flux_cmd->callback([&] { rc = cmd_flux(sh[1], grid_text); });

  auto* stat_cmd = app.add_subcommand(
      "stationarity", "exact generator residual of the product measure");
  sh[2].attach(stat_cmd);
  stat_cmd->add_option("--ring", ring, "exact-chain ring size");
  stat_cmd->add_option("--tol", tol, "residual tolerance");
  stat_cmd->callback([&] { rc = cmd_stationarity(sh[2], ring, tol); });

  auto* id_cmd = app.add_subcommand(
      "identities", "mean displacement and current variance identities");
  sh[3].attach(id_cmd);
  id_cmd->callback([&] { rc = cmd_identities(sh[3]); });

  auto* scaling_cmd = app.add_subcommand(
      "scaling", "superdiffusive growth of the displacement moments");
  sh[4].attach(scaling_cmd);
  scaling_cmd->add_option("--slope-lo", slope_lo, "least acceptable slope");
  scaling_cmd->add_option("--slope-hi", slope_hi, "largest acceptable slope");
  scaling_cmd->add_option("--growth-min", growth_min,
                          "least second-moment value(4t)/value(t)");
  scaling_cmd->callback(
      [&] { rc = cmd_scaling(sh[4], slope_lo, slope_hi, growth_min); });

  auto* clt_cmd = app.add_subcommand(
      "clt", "gaussian height fluctuations off the characteristic");
  sh[5].attach(clt_cmd);
  clt_cmd->add_option("--var-tol", var_tol, "relative variance tolerance");
  clt_cmd->add_option("--ks-tol", ks_tol, "lattice KS distance bound");
  clt_cmd->callback([&] { rc = cmd_clt(sh[5], var_tol, ks_tol); });

  auto* lln_cmd =
      app.add_subcommand("lln", "law of large numbers for Q(t)/t");
  sh[6].attach(lln_cmd);
  lln_cmd->callback([&] { rc = cmd_lln(sh[6]); });

  auto* micro_cmd = app.add_subcommand(
      "microconcavity", "label walker invariants and carrier laws");
  sh[7].attach(micro_cmd);
  micro_cmd->add_option("--ks-alpha", ks_alpha, "carrier KS test level");
  micro_cmd->add_option("--dom-alpha", dom_alpha,
                        "domination DKW band level");
  micro_cmd->callback([&] { rc = cmd_micro(sh[7], ks_alpha, dom_alpha); });

  auto* dump_cmd = app.add_subcommand(
      "dump-trajectory", "walker trajectory of one run as CSV");
  sh[8].attach(dump_cmd);
  dump_cmd->callback([&] { rc = cmd_dump(sh[8]); });

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 1;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 1;
  } catch (const GuardError& e) {
    std::cerr << "guard violation: " << e.what() << "\n";
    return 1;
  } catch (const TruncationError& e) {
    std::cerr << "measure convergence failure: " << e.what() << "\n";
    return 1;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return rc;
}

} // namespace depsim::harness
