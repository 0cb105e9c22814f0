#pragma once

// Product-form stationary marginals for the rate families in rates.hpp,
// parameterized by an exponential tilt theta in (theta_lo, theta_hi):
//   mu^theta(z) = e^{theta z} / (Z(theta) f(z)!)
// where f(z)! multiplies f over 1..z (reciprocal product below 0, f(0)! = 1).
// The density map rho(theta) = E^theta(omega) is smooth and strictly
// increasing, so measures can equally be addressed by density.
//
// Also built here: the seeding marginal mu_hat^rho used to place a single
// discrepancy in a stationary background (coupling.hpp), stochastic
// dominance checks, and the deterministic common-quantile coupler.

#include "depsim/rates.hpp"
#include "depsim/rng.hpp"

#include <functional>
#include <string>
#include <utility>
#include <vector>

namespace depsim {

// A probability mass function on a contiguous integer window.  Immutable;
// sampling draws from an explicit stream and touches no shared state.
class DiscreteDist {
 public:
  DiscreteDist() = default;
  // Renormalizes weights to total mass 1.  Weights must be nonnegative
  // (tiny negative round-off is clamped) with positive total.
  DiscreteDist(int lo, std::vector<double> weights);

  int lo() const { return lo_; }
  int hi() const { return lo_ + static_cast<int>(p_.size()) - 1; }
  double pmf(int z) const;
  double cdf(int z) const; // P(X <= z)
  double mean() const;
  double variance() const;

  // smallest z with cdf(z) > u, for u in [0, 1)
  int quantile(double u) const;
  int sample(RngStream& rng) const { return quantile(rng.uniform()); }

  const std::vector<double>& probs() const { return p_; }

 private:
  int lo_ = 0;
  std::vector<double> p_;
  std::vector<double> cum_;
};

// the same mass function translated by k sites
DiscreteDist shifted(const DiscreteDist& d, int k);

struct TiltedMeasure {
  double theta = 0.0;
  double log_Z = 0.0;
  DiscreteDist dist;            // truncated support, renormalized
  double tail_mass_bound = 0.0; // bound on mass lost to truncation
  double theta_lo = 0.0, theta_hi = 0.0;

  double mean() const { return dist.mean(); }
  double variance() const { return dist.variance(); }
};

// Truncated tilted marginal with excluded tail mass at most tol (exact on
// finite I).  Throws ThetaOutOfRangeError outside the open admissible
// interval and TruncationError if the support cap is hit first.
TiltedMeasure tilted(const RateSpec& spec, double theta, double tol = 1e-12);

double density_of_theta(const TiltedMeasure& m);
double variance(const TiltedMeasure& m);

// Cov(phi(omega), omega) under m; equals d E^theta(phi) / d theta.
double cov_with_omega(const TiltedMeasure& m,
                      const std::function<double(int)>& phi);

// Inverse of the density map, by bracketed bisection plus Newton polish
// (the variance is the exact derivative).  rho must lie strictly between
// the occupancy bounds.
double theta_of_density(const RateSpec& spec, double rho, double tol = 1e-12);

// Marginal for seeding one discrepancy into a density-rho background:
//   mu_hat^rho(y) = Var^rho(omega)^{-1} * sum_{z > y} (z - rho) mu^rho(z).
// Summing the construction over y gives exactly Var/Var = 1 when I is
// bounded below; on doubly infinite I the truncated sum is renormalized
// and the deficit recorded in renorm_mass.
struct SeedMeasure {
  double rho = 0.0;
  int shift = 0; // 0 plain, 1 the +1 translate used in strict couplings
  DiscreteDist dist;
  double renorm_mass = 0.0; // |raw sum / Var - 1| before renormalization
};

SeedMeasure seed_measure(const RateSpec& spec, double rho, double tol = 1e-12);

// CDF comparison: dominated means lower is stochastically below upper,
// i.e. CDF_lower(z) >= CDF_upper(z) everywhere.  witness_z reports the
// first crossing when the check fails.
struct DominanceReport {
  bool dominated = false;
  bool has_witness = false;
  int witness_z = 0;
  double gap = 0.0; // CDF_upper(witness) - CDF_lower(witness) > 0
};

DominanceReport dominance_check(const DiscreteDist& lower,
                                const DiscreteDist& upper);

enum class Strictness { Weak, Strict };

// Common-quantile coupler: one uniform drives both marginals, so samples
// are ordered pathwise.  Weak mode guarantees y <= z given dominance;
// strict mode additionally requires the lower marginal to dominate the
// upper shifted down by one (as when upper is a seed measure translated
// by +1), guaranteeing y < z.  Construction throws DominationError with
// the witnessing CDF crossing if the required ordering fails.
class MonotoneCoupling {
 public:
  MonotoneCoupling(DiscreteDist lower, DiscreteDist upper, Strictness s);

  std::pair<int, int> sample(RngStream& rng) const {
    double u = rng.uniform();
    return {lower_.quantile(u), upper_.quantile(u)};
  }

  const DiscreteDist& lower() const { return lower_; }
  const DiscreteDist& upper() const { return upper_; }
  Strictness strictness() const { return strict_; }

 private:
  DiscreteDist lower_, upper_;
  Strictness strict_;
};

MonotoneCoupling monotone_couple(const DiscreteDist& lower,
                                 const DiscreteDist& upper, Strictness s);

// debug serialization
std::string to_json(const TiltedMeasure& m);
std::string to_json(const SeedMeasure& m);

} // namespace depsim
