#pragma once

// Exact small-instance ground truth: the full continuous-time generator on
// a ring with a finite occupancy window, stationarity residuals of product
// measures, transient laws by uniformization, an exact-rational residual
// for the two-state exclusion chain, and brute-force laws of the label
// refresh operations used by the concavity construction.

#include "depsim/measures.hpp"
#include "depsim/rates.hpp"

#include <functional>
#include <optional>
#include <unordered_map>
#include <vector>

namespace depsim {

struct ChainOptions {
  int occ_lo = 0;
  int occ_hi = 1;
  std::optional<int> fixed_total; // restrict to a conserved particle count
};

// Explicit generator of the ring process on occupancy window
// [occ_lo, occ_hi]^L (optionally sliced to a fixed total).  Rows carry the
// diagonal, so each row sums to zero by construction.
struct ExactChain {
  int L = 0;
  int occ_lo = 0, occ_hi = 1;
  bool truncated = false; // window is a proper subset of the state space
  std::optional<int> fixed_total;

  std::vector<long long> codes; // state index -> mixed-radix code
  std::unordered_map<long long, int> index_of; // used when fixed_total set
  std::vector<std::vector<std::pair<int, double>>> rows;

  std::size_t size() const { return codes.size(); }
  int width() const { return occ_hi - occ_lo + 1; }
  void decode(int idx, std::vector<int>& occ) const;
  int state_index(const std::vector<int>& occ) const; // -1 if absent
};

// Throws ConfigError if the (filtered) state space exceeds one million
// states or L < 2.
ExactChain build_chain(const RateSpec& spec, int L, const ChainOptions& opt);

// per-state weights of the product of a single-site pmf
std::vector<double> product_weights(const ExactChain& chain,
                                    const DiscreteDist& site);

// max-norm of weights^T * generator; zero certifies stationarity
double stationarity_residual(const ExactChain& chain,
                             const std::vector<double>& weights);
double stationarity_residual(const ExactChain& chain,
                             const DiscreteDist& site);

// Law at time t from the initial law, by uniformization: the Poisson
// mixture over powers of I + G/Lambda with Lambda = 1.1 * max exit rate.
// The series is summed until its Poisson weights cover 1 - 1e-14.
std::vector<double> transient_law(const ExactChain& chain,
                                  std::vector<double> law0, double t);

// Exact-rational stationarity check for the two-state exclusion ring:
// hop-right probability p_num/p_den, site density rho_num/rho_den.
// True iff the product Bernoulli measure has an exactly zero residual.
bool asep_product_measure_exactly_stationary(long long p_num,
                                             long long p_den,
                                             long long rho_num,
                                             long long rho_den, int L);

// Label refresh operations.  A walker label with geometric prior
// nu(m) = (1-r) r^m (m >= 0) is refreshed when it sits inside the label
// interval [a, b] of a site holding omega - eta = b - a + 1 discrepancies:
//   LowWalker:  move to a with pr (f(omega-1) - f(eta)) / (f(omega) - f(eta)),
//               else to b; to a when the denominator vanishes.
//   HighWalker: mirrored on the negated label, moving to b - 1 with
//               pr (f(omega) - f(eta+1)) / (f(omega) - f(eta)), else to b;
//               to b when the denominator vanishes.
// The report states whether the refreshed law stays stochastically inside
// the geometric envelope (exact enumeration, no sampling).
enum class RefreshRule { LowWalker, HighWalker };

struct RefreshDominanceReport {
  bool dominated = false;
  bool has_witness = false;
  int witness_m = 0; // first CDF crossing on the nu side
  double gap = 0.0;
};

RefreshDominanceReport brute_force_refresh_dominance(
    const std::function<double(int)>& f, int a, int b, int eta, int omega,
    double r, RefreshRule rule);

} // namespace depsim
