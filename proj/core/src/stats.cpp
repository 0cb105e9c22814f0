#include "depsim/stats.hpp"

#include "depsim/errors.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>

namespace depsim {

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

namespace {

// regularized lower incomplete gamma by its power series, for x < a + 1
double gamma_p_series(double a, double x) {
  double ap = a;
  double term = 1.0 / a;
  double sum = term;
  for (int it = 0; it < 500; ++it) {
    ap += 1.0;
    term *= x / ap;
    sum += term;
    if (std::abs(term) < std::abs(sum) * 1e-16) break;
  }
  return sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

// regularized upper incomplete gamma by Lentz's continued fraction, x >= a + 1
double gamma_q_cf(double a, double x) {
  double b = x + 1.0 - a;
  double c = 1e300;
  double d = 1.0 / b;
  double h = d;
  for (int i = 1; i <= 500; ++i) {
    double an = -i * (i - a);
    b += 2.0;
    d = an * d + b;
    if (std::abs(d) < 1e-300) d = 1e-300;
    c = b + an / c;
    if (std::abs(c) < 1e-300) c = 1e-300;
    d = 1.0 / d;
    double delta = d * c;
    h *= delta;
    if (std::abs(delta - 1.0) < 1e-16) break;
  }
  return std::exp(-x + a * std::log(x) - std::lgamma(a)) * h;
}

} // namespace

double chi_square_sf(double x, int df) {
  if (df <= 0) throw ConfigError("chi_square_sf: df must be positive");
  if (x <= 0.0) return 1.0;
  double a = 0.5 * df;
  double hx = 0.5 * x;
  if (hx < a + 1.0) return 1.0 - gamma_p_series(a, hx);
  return gamma_q_cf(a, hx);
}

ChiSquareResult chi_square_test(std::span<const double> observed,
                                std::span<const double> expected,
                                int df_override) {
  if (observed.size() != expected.size() || observed.empty())
    throw ConfigError("chi_square_test: mismatched or empty count vectors");
  double stat = 0.0;
  for (std::size_t i = 0; i < observed.size(); ++i) {
    if (!(expected[i] > 0.0))
      throw ConfigError("chi_square_test: expected counts must be positive");
    double d = observed[i] - expected[i];
    stat += d * d / expected[i];
  }
  ChiSquareResult r;
  r.statistic = stat;
  r.df = df_override >= 1 ? df_override : static_cast<int>(observed.size()) - 1;
  if (r.df < 1) throw ConfigError("chi_square_test: needs at least two cells");
  r.p_value = chi_square_sf(stat, r.df);
  return r;
}

Estimate mean_estimate(std::span<const double> xs) {
  if (xs.size() < 2) throw ConfigError("mean_estimate: needs >= 2 values");
  double n = static_cast<double>(xs.size());
  double m = 0.0;
  for (double x : xs) m += x;
  m /= n;
  double ss = 0.0;
  for (double x : xs) ss += (x - m) * (x - m);
  return {m, std::sqrt(ss / (n - 1.0) / n), xs.size()};
}

Estimate variance_estimate(std::span<const double> xs) {
  std::size_t n = xs.size();
  if (n < 3) throw ConfigError("variance_estimate: needs >= 3 values");
  double mean = 0.0;
  for (double x : xs) mean += x;
  mean /= static_cast<double>(n);

  // center once, then leave-one-out by downdating the centered sums; the
  // statistic is shift invariant so this loses no accuracy
  double s1 = 0.0, s2 = 0.0;
  std::vector<double> y(n);
  for (std::size_t i = 0; i < n; ++i) {
    y[i] = xs[i] - mean;
    s1 += y[i];
    s2 += y[i] * y[i];
  }
  double nd = static_cast<double>(n);
  double value = s2 / (nd - 1.0); // s1 == 0 up to rounding

  std::vector<double> loo(n);
  double loo_mean = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double mi = (s1 - y[i]) / (nd - 1.0);
    double ssi = s2 - y[i] * y[i] - (nd - 1.0) * mi * mi;
    loo[i] = ssi / (nd - 2.0);
    loo_mean += loo[i];
  }
  loo_mean /= nd;
  double ss = 0.0;
  for (double v : loo) ss += (v - loo_mean) * (v - loo_mean);
  return {value, std::sqrt((nd - 1.0) / nd * ss), n};
}

double ks_distance_lattice(std::span<const double> samples, double mu,
                           double sigma) {
  if (samples.empty()) throw ConfigError("ks_distance_lattice: no samples");
  if (!(sigma > 0.0)) throw ConfigError("ks_distance_lattice: sigma <= 0");
  std::vector<double> s(samples.begin(), samples.end());
  std::sort(s.begin(), s.end());
  double n = static_cast<double>(s.size());
  auto ref = [&](double k) { return normal_cdf((k + 0.5 - mu) / sigma); };

  // the ecdf is flat between atoms and the reference is monotone, so the sup
  // over all integers is attained at an atom or just below the next one
  double d = ref(s.front() - 1.0); // ecdf still 0 below the first atom
  std::size_t i = 0;
  while (i < s.size()) {
    double k = s[i];
    std::size_t j = i;
    while (j < s.size() && s[j] == k) ++j;
    double ecdf = static_cast<double>(j) / n;
    d = std::max(d, std::abs(ecdf - ref(k)));
    if (j < s.size()) d = std::max(d, std::abs(ecdf - ref(s[j] - 1.0)));
    i = j;
  }
  return d;
}

TwoSampleKs two_sample_ks(std::vector<double> xs, std::vector<double> ys,
                          double alpha) {
  if (xs.empty() || ys.empty())
    throw ConfigError("two_sample_ks: empty sample");
  if (!(alpha > 0.0 && alpha < 1.0))
    throw ConfigError("two_sample_ks: alpha outside (0,1)");
  std::sort(xs.begin(), xs.end());
  std::sort(ys.begin(), ys.end());
  double nx = static_cast<double>(xs.size());
  double ny = static_cast<double>(ys.size());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < xs.size() && j < ys.size()) {
    double v = std::min(xs[i], ys[j]);
    while (i < xs.size() && xs[i] == v) ++i;
    while (j < ys.size() && ys[j] == v) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / nx -
                             static_cast<double>(j) / ny));
  }
  TwoSampleKs r;
  r.distance = d;
  r.threshold = std::sqrt(-std::log(alpha / 2.0) / 2.0) *
                std::sqrt((nx + ny) / (nx * ny));
  r.pass = d <= r.threshold;
  return r;
}

double dkw_margin(std::size_t n, double alpha) {
  if (n == 0) throw ConfigError("dkw_margin: n == 0");
  if (!(alpha > 0.0 && alpha < 1.0))
    throw ConfigError("dkw_margin: alpha outside (0,1)");
  return std::sqrt(std::log(2.0 / alpha) / (2.0 * static_cast<double>(n)));
}

namespace {

// two-sided 97.5% Student-t quantiles for small residual dfs; beyond the
// table the normal quantile is within half a percent
double t_quantile_975(std::size_t df) {
  static const double table[] = {
      12.706, 4.303, 3.182, 2.776, 2.571, 2.447, 2.365, 2.306, 2.262, 2.228,
      2.201,  2.179, 2.160, 2.145, 2.131, 2.120, 2.110, 2.101, 2.093, 2.086,
      2.080,  2.074, 2.069, 2.064, 2.060, 2.056, 2.052, 2.048, 2.045, 2.042};
  if (df == 0) return 12.706;
  if (df <= 30) return table[df - 1];
  return 1.960;
}

} // namespace

LineFit fit_loglog(std::span<const double> t, std::span<const double> value) {
  if (t.size() != value.size() || t.size() < 4)
    throw ConfigError("fit_loglog: needs >= 4 matched points");
  std::size_t n = t.size();
  std::vector<double> lx(n), ly(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (!(t[i] > 0.0) || !(value[i] > 0.0))
      throw ConfigError("fit_loglog: inputs must be positive");
    lx[i] = std::log(t[i]);
    ly[i] = std::log(value[i]);
  }
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += lx[i];
    my += ly[i];
  }
  double nd = static_cast<double>(n);
  mx /= nd;
  my /= nd;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sxx += (lx[i] - mx) * (lx[i] - mx);
    sxy += (lx[i] - mx) * (ly[i] - my);
  }
  if (!(sxx > 0.0)) throw ConfigError("fit_loglog: degenerate t grid");

  LineFit fit;
  fit.n = n;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  double ssr = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double r = ly[i] - fit.intercept - fit.slope * lx[i];
    ssr += r * r;
  }
  double se = std::sqrt(ssr / (nd - 2.0) / sxx);
  double half = t_quantile_975(n - 2) * se;
  fit.slope_ci_lo = fit.slope - half;
  fit.slope_ci_hi = fit.slope + half;
  return fit;
}

} // namespace depsim
