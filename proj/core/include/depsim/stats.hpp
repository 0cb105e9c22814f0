#pragma once
// statistics kit shared by the experiment harness and the acceptance runner:
// tail probabilities, goodness-of-fit distances, resampled standard errors

#include <cstddef>
#include <span>
#include <vector>

namespace depsim {

// standard normal CDF
double normal_cdf(double x);

// P(X > x) for chi-square with df degrees of freedom
double chi_square_sf(double x, int df);

struct ChiSquareResult {
  double statistic = 0.0;
  int df = 0;
  double p_value = 0.0;
};

// Pearson statistic of observed counts against expected counts (same length,
// expected strictly positive).  df defaults to cells - 1.
ChiSquareResult chi_square_test(std::span<const double> observed,
                                std::span<const double> expected,
                                int df_override = -1);

struct Estimate {
  double value = 0.0;
  double std_error = 0.0;
  std::size_t n = 0;
};

// sample mean; the jackknife standard error of the mean coincides with the
// classical sd/sqrt(n)
Estimate mean_estimate(std::span<const double> xs);

// unbiased sample variance with a leave-one-out jackknife standard error
Estimate variance_estimate(std::span<const double> xs);

// sup over integers k of |ecdf(k) - Phi((k + 1/2 - mu)/sigma)| for
// integer-valued samples.  The half-step shift compares the lattice law to
// the normal mass up to the midpoint between atoms; the raw KS distance of
// any lattice law to a continuous law is bounded below by half the largest
// atom and would never converge.
double ks_distance_lattice(std::span<const double> samples, double mu,
                           double sigma);

struct TwoSampleKs {
  double distance = 0.0;
  double threshold = 0.0;
  bool pass = false;
};

// classical two-sample KS: threshold c(alpha) * sqrt((n+m)/(n*m)) with
// c(alpha) = sqrt(-log(alpha/2)/2)
TwoSampleKs two_sample_ks(std::vector<double> xs, std::vector<double> ys,
                          double alpha);

// half-width of the uniform empirical-CDF confidence band at level alpha
double dkw_margin(std::size_t n, double alpha);

struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;
  double slope_ci_lo = 0.0; // 95% interval from residual variance
  double slope_ci_hi = 0.0;
  std::size_t n = 0;
};

// ordinary least squares of log(value) on log(t); needs >= 4 points and
// strictly positive inputs
LineFit fit_loglog(std::span<const double> t, std::span<const double> value);

} // namespace depsim
