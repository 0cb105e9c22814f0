#pragma once
// The statistical experiments: displacement moments of the tagged
// discrepancy, scaling fits, off-characteristic CLT, the exact mean and
// variance identities, label-walker checks, and CSV emission.  Replicates
// fan out over a worker pool (DEPSIM_WORKERS); every replicate owns its
// random stream and a result slot, so reported numbers are independent of
// worker count and execution order.

#include "depsim/harness/config.hpp"
#include "depsim/stats.hpp"

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

namespace depsim::harness {

// run fn(i) for i in [0, n) on the worker pool; rethrows the first failure
void parallel_for(int n, const std::function<void(int)>& fn);
int worker_count();

// tagged-discrepancy displacements Q(t) on the config's time grid,
// one trajectory per replicate read at every grid time
struct QSamples {
  std::vector<double> t_grid;
  std::vector<std::vector<long long>> q; // [t index][replicate]
  double v_rho = 0.0;                    // characteristic speed at rho
  double sigma2 = 0.0;                   // Var of the site marginal
  int L = 0;
  std::uint64_t events = 0;
};

QSamples sample_Q(const ExperimentConfig& cfg);

struct MomentEstimate {
  double t = 0.0;
  double m = 1.0;         // moment order
  double value = 0.0;     // mean |Q(t) - floor(v t)|^m
  double std_error = 0.0;
  int n = 0;
};

std::vector<MomentEstimate> estimate_Q_moments(const QSamples& qs,
                                               std::span<const double> m_list);

// least squares of log(value) on log(t); needs >= 4 positive points of a
// single moment order
LineFit fit_scaling(std::span<const MomentEstimate> points);

// value(4t) / value(t) for the largest such pair in the grid; > 4 means
// faster than diffusive
double growth_ratio(std::span<const MomentEstimate> points);

struct CltResult {
  double t = 0.0;
  int site = 0;           // floor(v t), the observed bond
  double d_const = 0.0;   // Var(site marginal) * |v_rho - v|
  double var_h = 0.0, var_se = 0.0;
  double variance_ratio = 0.0; // (var_h / t) / d_const
  double ks_distance = 0.0;    // lattice-corrected, against the normal law
  int n = 0;
};

// stationary-run height law at the off-characteristic bond; throws
// ConfigError when the override speed is missing or characteristic
CltResult clt_check(const ExperimentConfig& cfg);

struct LlnRow {
  double t = 0.0;
  double mean_qt = 0.0; // mean Q(t)/t
  double se = 0.0;
  double deviation = 0.0; // |mean_qt - v_rho|
};

struct LlnResult {
  std::vector<LlnRow> rows;
  double v_rho = 0.0;
  bool last_within_4se = false;
  bool envelope_decreasing = false; // deviation + 4 se shrinks along the grid
};

LlnResult lln_check(const QSamples& qs);

struct DominationCheck {
  bool pass = false;
  double margin = 0.0;    // DKW band width at the requested alpha
  int worst_m = 0;
  double worst_gap = 0.0; // max over m of empirical tail - r^m
};

// empirical tails P(y >= m) and P(-z >= m) against the geometric envelope
// r^m, uniformly over supported levels, with a DKW allowance; needs >= 1000
// samples of each
DominationCheck domination_test(std::span<const int> y_samples,
                                std::span<const int> z_samples, double r,
                                double alpha);

struct IdentityResult {
  double t = 0.0;
  double v_rho = 0.0;
  double mean_q = 0.0, mean_q_se = 0.0;    // against v_rho * t
  double var_h0 = 0.0, var_h0_se = 0.0;    // direct current variance
  double var_via_q = 0.0, var_via_q_se = 0.0; // sigma2 * mean |Q|
  int n = 0;
  bool pass_mean = false; // |mean_q - v t| < 4 se
  bool pass_var = false;  // 95% CIs overlap and within 5% relative
};

// the exact identities tying the tagged displacement to the current:
// E Q(t) = v t, and Var h_0(t) = Var(site marginal) * E|Q(t)|
IdentityResult identities_check(const ExperimentConfig& cfg);

struct MicroCheckResult {
  int trajectories = 0;
  std::uint64_t events = 0;
  long long sandwich_failures = 0; // dressed-process order violations
  double r = 0.0;                  // geometric envelope ratio of the model
  DominationCheck dom;
  TwoSampleKs ks; // walker-carrier displacement vs the direct pair law
  int L = 0;
  std::vector<int> y_final, z_final;
  std::vector<double> q_walker, q_direct;
};

// drives label walkers over two-density backgrounds and checks their
// invariants, geometric bounds, and the carrier's marginal law
MicroCheckResult micro_check(const ExperimentConfig& cfg, double ks_alpha,
                             double dom_alpha);

// results CSV: experiment id, model, rho, t, observable, value, std_error, n
struct ResultRow {
  std::string experiment;
  std::string model;
  double rho = 0.0;
  double t = 0.0;
  std::string observable;
  double value = 0.0;
  double std_error = 0.0;
  long long n = 0;
};

std::string csv_text(std::span<const ResultRow> rows);
void write_csv(const std::string& path, std::span<const ResultRow> rows);

} // namespace depsim::harness
