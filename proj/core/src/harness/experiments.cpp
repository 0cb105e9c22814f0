#include "depsim/harness/experiments.hpp"

#include "depsim/coupling.hpp"
#include "depsim/errors.hpp"
#include "depsim/flux.hpp"
#include "depsim/measures.hpp"
#include "depsim/microconcavity.hpp"
#include "depsim/simulator.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <mutex>
#include <thread>

namespace depsim::harness {

int worker_count() {
  const char* env = std::getenv("DEPSIM_WORKERS");
  if (!env) return 1;
  int n = std::atoi(env);
  if (n < 1) return 1;
  return std::min(n, 64);
}

void parallel_for(int n, const std::function<void(int)>& fn) {
  int workers = std::min(worker_count(), n);
  if (workers <= 1) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  std::exception_ptr first_error;
  std::mutex error_mtx;
  auto body = [&]() {
    for (;;) {
      int i = next.fetch_add(1);
      if (i >= n) return;
      try {
        fn(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mtx);
        if (!first_error) first_error = std::current_exception();
        next.store(n); // drain remaining work
        return;
      }
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(workers));
  for (int w = 0; w < workers; ++w) pool.emplace_back(body);
  for (auto& th : pool) th.join();
  if (first_error) std::rethrow_exception(first_error);
}

namespace {

double rate_bound_of(const RateSpec& spec, int occ_cap) {
  auto [lo, hi] = sim_window(spec.space, occ_cap);
  return bond_rate_bound(compile_rates(spec, lo, hi));
}

// signed position of a ring site relative to origin 0, cut at L/2
int unwrap_site(int site, int L) { return site <= L / 2 ? site : site - L; }

void guard_or_throw(const ExperimentConfig& cfg, const RateSpec& spec, int L,
                    double speed) {
  double t_max = cfg.t_list.back();
  int max_site = static_cast<int>(std::ceil(std::abs(speed) * t_max)) + 2;
  check_wraparound_guard(L, rate_bound_of(spec, cfg.occ_cap), t_max, max_site,
                         cfg.guard_factor);
}

} // namespace

QSamples sample_Q(const ExperimentConfig& cfg) {
  check_config(cfg);
  RateSpec spec = build_model(cfg.model);
  QSamples out;
  out.t_grid = cfg.t_list;
  out.v_rho = char_speed(spec, cfg.rho);
  out.sigma2 = tilted(spec, theta_of_density(spec, cfg.rho)).variance();
  out.L = ring_size(spec, cfg);
  guard_or_throw(cfg, spec, out.L, out.v_rho);

  const int R = cfg.replicates;
  out.q.assign(cfg.t_list.size(), std::vector<long long>(
                                      static_cast<std::size_t>(R), 0));
  RunOptions opt;
  opt.occ_cap = cfg.occ_cap;
  std::vector<std::uint64_t> events(static_cast<std::size_t>(R), 0);

  parallel_for(R, [&](int r) {
    CoupledState s = make_discrepancy_pair(
        spec, cfg.rho, out.L,
        RngStream(cfg.master_seed, static_cast<std::uint64_t>(r)));
    std::vector<long long> qs =
        track_Q(s, spec, cfg.t_list, opt, &events[static_cast<std::size_t>(r)]);
    if (s.labels.cut_crossings() != 0)
      throw GuardError("sample_Q: the discrepancy wound around the ring");
    for (std::size_t ti = 0; ti < qs.size(); ++ti)
      out.q[ti][static_cast<std::size_t>(r)] = qs[ti];
  });
  for (std::uint64_t e : events) out.events += e;
  return out;
}

std::vector<MomentEstimate> estimate_Q_moments(
    const QSamples& qs, std::span<const double> m_list) {
  std::vector<MomentEstimate> out;
  std::vector<double> work;
  for (std::size_t ti = 0; ti < qs.t_grid.size(); ++ti) {
    double t = qs.t_grid[ti];
    long long target = static_cast<long long>(std::floor(qs.v_rho * t));
    for (double m : m_list) {
      if (!(m > 0.0)) throw ConfigError("moments: orders must be positive");
      work.clear();
      for (long long q : qs.q[ti])
        work.push_back(
            std::pow(std::abs(static_cast<double>(q - target)), m));
      Estimate e = mean_estimate(work);
      out.push_back({t, m, e.value, e.std_error, static_cast<int>(e.n)});
    }
  }
  return out;
}

LineFit fit_scaling(std::span<const MomentEstimate> points) {
  if (points.size() < 4)
    throw ConfigError("scaling fit: need at least four points");
  std::vector<double> ts, vals;
  for (const auto& p : points) {
    if (p.m != points[0].m)
      throw ConfigError("scaling fit: mixed moment orders");
    ts.push_back(p.t);
    vals.push_back(p.value);
  }
  return fit_loglog(ts, vals);
}

double growth_ratio(std::span<const MomentEstimate> points) {
  double best_t = -1.0, ratio = 0.0;
  for (const auto& hi : points)
    for (const auto& lo : points) {
      if (lo.m != hi.m) throw ConfigError("growth ratio: mixed orders");
      if (std::abs(hi.t - 4.0 * lo.t) < 1e-9 * hi.t && hi.t > best_t &&
          lo.value > 0.0) {
        best_t = hi.t;
        ratio = hi.value / lo.value;
      }
    }
  if (best_t < 0.0)
    throw ConfigError("growth ratio: no (t, 4t) pair in the grid");
  return ratio;
}

CltResult clt_check(const ExperimentConfig& cfg) {
  check_config(cfg);
  if (!cfg.v_override)
    throw ConfigError("clt: needs an observation speed v");
  RateSpec spec = build_model(cfg.model);
  double v = *cfg.v_override;
  double v_rho = char_speed(spec, cfg.rho);
  double sigma2 = tilted(spec, theta_of_density(spec, cfg.rho)).variance();
  double d_const = sigma2 * std::abs(v_rho - v);
  if (!(d_const > 1e-12))
    throw ConfigError("clt: v equals the characteristic speed, the limit "
                      "constant degenerates");

  CltResult res;
  res.t = cfg.t_list.back();
  res.site = static_cast<int>(std::floor(v * res.t));
  res.d_const = d_const;
  int L = ring_size(spec, cfg);
  guard_or_throw(cfg, spec, L, v);

  double hydro = flux_H(spec, cfg.rho);
  const int R = cfg.replicates;
  std::vector<double> heights(static_cast<std::size_t>(R), 0.0);
  RunOptions opt;
  opt.occ_cap = cfg.occ_cap;
  parallel_for(R, [&](int r) {
    RingState s = init_stationary(
        spec, cfg.rho, L,
        RngStream(cfg.master_seed, static_cast<std::uint64_t>(r)));
    run(s, spec, res.t, {}, opt);
    heights[static_cast<std::size_t>(r)] =
        static_cast<double>(height(s, res.site));
  });

  Estimate var = variance_estimate(heights);
  res.var_h = var.value;
  res.var_se = var.std_error;
  res.variance_ratio = (var.value / res.t) / d_const;
  // exact stationary mean: the column grows at the flux and the frame
  // shift removes rho per site
  double mu = hydro * res.t - cfg.rho * res.site;
  res.ks_distance =
      ks_distance_lattice(heights, mu, std::sqrt(d_const * res.t));
  res.n = R;
  return res;
}

LlnResult lln_check(const QSamples& qs) {
  LlnResult out;
  out.v_rho = qs.v_rho;
  std::vector<double> work;
  for (std::size_t ti = 0; ti < qs.t_grid.size(); ++ti) {
    double t = qs.t_grid[ti];
    if (!(t > 0.0)) continue;
    work.clear();
    for (long long q : qs.q[ti])
      work.push_back(static_cast<double>(q) / t);
    Estimate e = mean_estimate(work);
    out.rows.push_back({t, e.value, e.std_error,
                        std::abs(e.value - qs.v_rho)});
  }
  if (out.rows.empty()) throw ConfigError("lln: no positive times in grid");
  const LlnRow& last = out.rows.back();
  out.last_within_4se = last.deviation < 4.0 * last.se;
  // the deterministic part of the envelope must shrink along the grid and
  // the full envelope must end below its start
  bool se_dec = true;
  for (std::size_t i = 1; i < out.rows.size(); ++i)
    se_dec = se_dec && out.rows[i].se < out.rows[i - 1].se;
  const LlnRow& first = out.rows.front();
  out.envelope_decreasing =
      se_dec && (out.rows.size() < 2 ||
                 last.deviation + 4.0 * last.se <
                     first.deviation + 4.0 * first.se);
  return out;
}

DominationCheck domination_test(std::span<const int> y_samples,
                                std::span<const int> z_samples, double r,
                                double alpha) {
  if (y_samples.size() < 1000 || z_samples.size() < 1000)
    throw ConfigError("domination: need at least 1000 samples");
  if (!(r > 0.0 && r < 1.0))
    throw ConfigError("domination: ratio must lie in (0,1)");
  DominationCheck out;
  out.pass = true;
  out.worst_gap = -1.0;

  auto scan = [&](std::span<const int> s, bool negate) {
    double n = static_cast<double>(s.size());
    double margin = dkw_margin(s.size(), alpha);
    int top = 0;
    for (int v : s) top = std::max(top, negate ? -v : v);
    for (int m = 0; m <= top; ++m) {
      long long c = 0;
      for (int v : s) c += (negate ? -v : v) >= m;
      double tail = static_cast<double>(c) / n;
      double gap = tail - std::pow(r, m);
      if (gap > out.worst_gap) {
        out.worst_gap = gap;
        out.worst_m = negate ? -m : m;
      }
      if (gap > margin) out.pass = false;
    }
    return margin;
  };
  double my = scan(y_samples, false);
  double mz = scan(z_samples, true);
  out.margin = std::max(my, mz);
  return out;
}

IdentityResult identities_check(const ExperimentConfig& cfg) {
  QSamples qs = sample_Q(cfg);
  IdentityResult res;
  res.t = qs.t_grid.back();
  res.v_rho = qs.v_rho;
  res.n = cfg.replicates;
  std::size_t ti = qs.t_grid.size() - 1;

  std::vector<double> qvals, absq;
  for (long long q : qs.q[ti]) {
    qvals.push_back(static_cast<double>(q));
    absq.push_back(std::abs(static_cast<double>(q)));
  }
  Estimate mq = mean_estimate(qvals);
  res.mean_q = mq.value;
  res.mean_q_se = mq.std_error;
  res.pass_mean = std::abs(mq.value - res.v_rho * res.t) < 4.0 * mq.std_error;

  Estimate maq = mean_estimate(absq);
  res.var_via_q = qs.sigma2 * maq.value;
  res.var_via_q_se = qs.sigma2 * maq.std_error;

  // direct current variance from independent stationary runs
  RateSpec spec = build_model(cfg.model);
  const int R = cfg.replicates;
  std::vector<double> h0(static_cast<std::size_t>(R), 0.0);
  RunOptions opt;
  opt.occ_cap = cfg.occ_cap;
  parallel_for(R, [&](int r) {
    RingState s = init_stationary(
        spec, cfg.rho, qs.L,
        RngStream(cfg.master_seed, static_cast<std::uint64_t>(R + r)));
    run(s, spec, res.t, {}, opt);
    h0[static_cast<std::size_t>(r)] = static_cast<double>(s.bond_current[0]);
  });
  Estimate vh = variance_estimate(h0);
  res.var_h0 = vh.value;
  res.var_h0_se = vh.std_error;

  double lo_a = res.var_h0 - 1.96 * res.var_h0_se;
  double hi_a = res.var_h0 + 1.96 * res.var_h0_se;
  double lo_b = res.var_via_q - 1.96 * res.var_via_q_se;
  double hi_b = res.var_via_q + 1.96 * res.var_via_q_se;
  bool overlap = lo_a <= hi_b && lo_b <= hi_a;
  double rel = std::abs(res.var_h0 - res.var_via_q) /
               std::max(res.var_h0, res.var_via_q);
  res.pass_var = overlap && rel < 0.05;
  return res;
}

MicroCheckResult micro_check(const ExperimentConfig& cfg, double ks_alpha,
                             double dom_alpha) {
  check_config(cfg);
  RateSpec spec = build_model(cfg.model);
  IncrementRatioReport rep = check_increment_ratio(spec);
  if (!rep.holds)
    throw ConfigError("micro: rate factor lacks the geometric increment "
                      "property: " + rep.witness);

  MicroCheckResult res;
  res.r = rep.ratio_bound;
  res.L = ring_size(spec, cfg);
  guard_or_throw(cfg, spec, res.L, char_speed(spec, cfg.rho));
  double lambda = micro_lambda(cfg);
  double t_end = cfg.t_list.back();

  const int R = cfg.replicates;
  res.trajectories = R;
  res.y_final.assign(static_cast<std::size_t>(R), 0);
  res.z_final.assign(static_cast<std::size_t>(R), 0);
  res.q_walker.assign(static_cast<std::size_t>(R), 0.0);
  res.q_direct.assign(static_cast<std::size_t>(R), 0.0);
  std::vector<long long> sandwich(static_cast<std::size_t>(R), 0);
  std::vector<std::uint64_t> events(static_cast<std::size_t>(R), 0);
  RunOptions opt;
  opt.occ_cap = cfg.occ_cap;

  parallel_for(R, [&](int r) {
    auto ri = static_cast<std::size_t>(r);
    auto stream = static_cast<std::uint64_t>(r);
    MicroState m(
        make_two_density_pair(spec, lambda, cfg.rho, res.L,
                              RngStream(cfg.master_seed, 3 * stream)),
        spec, RngStream(cfg.master_seed, 3 * stream + 1));
    std::uint64_t ev = 0;
    for (double t : cfg.t_list) {
      ev += m.run_to(t, opt);
      FourView v = four_process_view(m);
      for (int i = 0; i < res.L; ++i) {
        auto iu = static_cast<std::size_t>(i);
        bool ok = v.eta[iu] <= v.eta_plus[iu] && v.eta_plus[iu] <= v.omega[iu] &&
                  v.eta[iu] <= v.omega_minus[iu] &&
                  v.omega_minus[iu] <= v.omega[iu];
        if (!ok) ++sandwich[ri];
      }
    }
    res.y_final[ri] = m.y();
    res.z_final[ri] = m.z();
    res.q_walker[ri] = unwrap_site(m.site_y(), res.L);

    CoupledState direct = make_discrepancy_pair(
        spec, cfg.rho, res.L, RngStream(cfg.master_seed, 3 * stream + 2));
    std::vector<double> grid{t_end};
    res.q_direct[ri] =
        static_cast<double>(track_Q(direct, spec, grid, opt, &ev)[0]);
    events[ri] = ev;
  });

  for (auto e : events) res.events += e;
  for (auto s : sandwich) res.sandwich_failures += s;
  res.dom = domination_test(res.y_final, res.z_final, res.r, dom_alpha);
  res.ks = two_sample_ks(res.q_walker, res.q_direct, ks_alpha);
  return res;
}

std::string csv_text(std::span<const ResultRow> rows) {
  std::string out = "experiment,model,rho,t,observable,value,std_error,n\n";
  char buf[256];
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof buf, "%.17g,%.17g", r.rho, r.t);
    out += r.experiment + "," + r.model + "," + buf + "," + r.observable;
    std::snprintf(buf, sizeof buf, ",%.17g,%.17g,%lld\n", r.value,
                  r.std_error, r.n);
    out += buf;
  }
  return out;
}

void write_csv(const std::string& path, std::span<const ResultRow> rows) {
  std::ofstream out(path);
  if (!out) throw Error("csv: cannot open '" + path + "' for writing");
  out << csv_text(rows);
  if (!out) throw Error("csv: write to '" + path + "' failed");
}

} // namespace depsim::harness
