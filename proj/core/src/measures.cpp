#include "depsim/measures.hpp"

#include "depsim/errors.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "json.hpp"

namespace depsim {

namespace {

constexpr int kMaxSupportPerSide = 300000;
// a truncation edge must carry relative weight below this before the
// geometric tail bound is trusted
constexpr double kEdgeWeightStop = 1e-3;

// log(e^a + e^b) without overflow
double lse_add(double a, double b) {
  if (a == -std::numeric_limits<double>::infinity()) return b;
  double hi = std::max(a, b), lo = std::min(a, b);
  return hi + std::log1p(std::exp(lo - hi));
}

double log_f_checked(const RateSpec& spec, int z) {
  double v = spec.f(z);
  if (!(v > 0.0)) {
    std::ostringstream os;
    os << spec.name << ": f(" << z
       << ") <= 0 inside the support; tilted family undefined";
    throw ConfigError(os.str());
  }
  return std::log(v);
}

// log f(z)! by direct walk from 0; used once per measure for the anchor
double log_factorial_f(const RateSpec& spec, int z) {
  double acc = 0.0;
  for (int y = 1; y <= z; ++y) acc += log_f_checked(spec, y);
  for (int y = z + 1; y <= 0; ++y) acc -= log_f_checked(spec, y);
  return acc;
}

} // namespace

DiscreteDist::DiscreteDist(int lo, std::vector<double> weights)
    : lo_(lo), p_(std::move(weights)) {
  if (p_.empty()) throw ConfigError("discrete distribution: empty support");
  double scale = 0.0;
  for (double w : p_) scale = std::max(scale, std::abs(w));
  double total = 0.0;
  for (double& w : p_) {
    if (w < 0.0) {
      if (w < -1e-12 * std::max(1.0, scale)) {
        std::ostringstream os;
        os << "discrete distribution: negative weight " << w;
        throw ConfigError(os.str());
      }
      w = 0.0; // round-off
    }
    total += w;
  }
  if (!(total > 0.0))
    throw ConfigError("discrete distribution: zero total mass");
  cum_.resize(p_.size());
  double acc = 0.0;
  for (std::size_t i = 0; i < p_.size(); ++i) {
    p_[i] /= total;
    acc += p_[i];
    cum_[i] = acc;
  }
  cum_.back() = 1.0;
}

double DiscreteDist::pmf(int z) const {
  if (z < lo_ || z > hi()) return 0.0;
  return p_[static_cast<std::size_t>(z - lo_)];
}

double DiscreteDist::cdf(int z) const {
  if (z < lo_) return 0.0;
  if (z >= hi()) return 1.0;
  return cum_[static_cast<std::size_t>(z - lo_)];
}

double DiscreteDist::mean() const {
  double m = 0.0;
  for (std::size_t i = 0; i < p_.size(); ++i)
    m += p_[i] * (lo_ + static_cast<int>(i));
  return m;
}

double DiscreteDist::variance() const {
  double m = mean(), v = 0.0;
  for (std::size_t i = 0; i < p_.size(); ++i) {
    double d = (lo_ + static_cast<int>(i)) - m;
    v += p_[i] * d * d;
  }
  return v;
}

int DiscreteDist::quantile(double u) const {
  auto it = std::upper_bound(cum_.begin(), cum_.end(), u);
  if (it == cum_.end()) --it; // u >= 1 clamps to the top
  return lo_ + static_cast<int>(it - cum_.begin());
}

DiscreteDist shifted(const DiscreteDist& d, int k) {
  return DiscreteDist(d.lo() + k, d.probs());
}

TiltedMeasure tilted(const RateSpec& spec, double theta, double tol) {
  if (!(tol > 0.0)) throw ConfigError("tilted: tol must be positive");
  if (!(theta > spec.theta_lo && theta < spec.theta_hi)) {
    std::ostringstream os;
    os << spec.name << ": theta=" << theta
       << " outside the admissible open interval (" << spec.theta_lo << ", "
       << spec.theta_hi << "); the state sum diverges";
    throw ThetaOutOfRangeError(os.str());
  }

  const StateSpace& sp = spec.space;
  int anchor = 0;
  if (sp.bounded_below() && anchor < sp.omega_min) anchor = sp.omega_min;
  if (sp.bounded_above() && anchor > sp.omega_max) anchor = sp.omega_max;

  const double log_w_anchor = theta * anchor - log_factorial_f(spec, anchor);
  const double neg_inf = -std::numeric_limits<double>::infinity();

  // weights above the anchor
  std::vector<double> up; // logw(anchor+1), logw(anchor+2), ...
  double lse = log_w_anchor;
  double log_tail_up = neg_inf;
  {
    double lw = log_w_anchor;
    for (int z = anchor;; ++z) {
      if (sp.bounded_above() && z >= sp.omega_max) break;
      double step = theta - log_f_checked(spec, z + 1);
      double r = std::exp(step);
      if (!sp.bounded_above() && r < 1.0 && lw - lse < std::log(kEdgeWeightStop)) {
        // everything past z is bounded by the geometric series with ratio r
        double lt = lw + step - std::log1p(-r);
        if (lt <= std::log(tol) + lse) {
          log_tail_up = lt;
          break;
        }
      }
      if (static_cast<int>(up.size()) >= kMaxSupportPerSide) {
        std::ostringstream os;
        os << spec.name << ": support cap " << kMaxSupportPerSide
           << " reached above before tail mass fell under " << tol
           << " (theta=" << theta << ")";
        throw TruncationError(os.str());
      }
      lw += step;
      up.push_back(lw);
      lse = lse_add(lse, lw);
    }
  }

  // weights below the anchor
  std::vector<double> down; // logw(anchor-1), logw(anchor-2), ...
  double log_tail_down = neg_inf;
  {
    double lw = log_w_anchor;
    for (int z = anchor;; --z) {
      if (sp.bounded_below() && z <= sp.omega_min) break;
      double step = -theta + log_f_checked(spec, z);
      double r = std::exp(step);
      if (!sp.bounded_below() && r < 1.0 && lw - lse < std::log(kEdgeWeightStop)) {
        double lt = lw + step - std::log1p(-r);
        if (lt <= std::log(tol) + lse) {
          log_tail_down = lt;
          break;
        }
      }
      if (static_cast<int>(down.size()) >= kMaxSupportPerSide) {
        std::ostringstream os;
        os << spec.name << ": support cap " << kMaxSupportPerSide
           << " reached below before tail mass fell under " << tol
           << " (theta=" << theta << ")";
        throw TruncationError(os.str());
      }
      lw += step;
      down.push_back(lw);
      lse = lse_add(lse, lw);
    }
  }

  int lo = anchor - static_cast<int>(down.size());
  std::vector<double> weights;
  weights.reserve(down.size() + 1 + up.size());
  for (auto it = down.rbegin(); it != down.rend(); ++it)
    weights.push_back(std::exp(*it - lse));
  weights.push_back(std::exp(log_w_anchor - lse));
  for (double lw : up) weights.push_back(std::exp(lw - lse));

  TiltedMeasure m;
  m.theta = theta;
  m.log_Z = lse;
  m.dist = DiscreteDist(lo, std::move(weights));
  m.tail_mass_bound =
      std::exp(lse_add(log_tail_up, log_tail_down) - lse);
  m.theta_lo = spec.theta_lo;
  m.theta_hi = spec.theta_hi;
  return m;
}

double density_of_theta(const TiltedMeasure& m) { return m.dist.mean(); }

double variance(const TiltedMeasure& m) { return m.dist.variance(); }

double cov_with_omega(const TiltedMeasure& m,
                      const std::function<double(int)>& phi) {
  const DiscreteDist& d = m.dist;
  double e_phi = 0.0, e_w = 0.0, e_phiw = 0.0;
  for (int z = d.lo(); z <= d.hi(); ++z) {
    double p = d.pmf(z), ph = phi(z);
    e_phi += p * ph;
    e_w += p * z;
    e_phiw += p * ph * z;
  }
  return e_phiw - e_phi * e_w;
}

double theta_of_density(const RateSpec& spec, double rho, double tol) {
  const StateSpace& sp = spec.space;
  if ((sp.bounded_below() && !(rho > sp.omega_min)) ||
      (sp.bounded_above() && !(rho < sp.omega_max))) {
    std::ostringstream os;
    os << spec.name << ": density " << rho
       << " not strictly inside the occupancy interval";
    throw ConfigError(os.str());
  }
  const double meas_tol = 1e-14;
  auto mean_at = [&](double th) { return tilted(spec, th, meas_tol).mean(); };

  const double lo_b = spec.theta_lo, hi_b = spec.theta_hi;
  double c;
  if (std::isfinite(lo_b) && std::isfinite(hi_b))
    c = 0.5 * (lo_b + hi_b);
  else if (std::isfinite(hi_b))
    c = hi_b - 1.0;
  else if (std::isfinite(lo_b))
    c = lo_b + 1.0;
  else
    c = 0.0;

  // expanding bracket: halve the distance to a finite endpoint, double the
  // step toward an infinite one
  double a = c, b = c;
  double fa = mean_at(a) - rho, fb = fa;
  double step = 1.0;
  for (int i = 0; fa > 0.0; ++i) {
    if (i > 200) throw ConfigError("theta_of_density: no lower bracket");
    a = std::isfinite(lo_b) ? 0.5 * (a + lo_b) : a - step;
    step *= 2.0;
    fa = mean_at(a) - rho;
  }
  step = 1.0;
  for (int i = 0; fb < 0.0; ++i) {
    if (i > 200) throw ConfigError("theta_of_density: no upper bracket");
    b = std::isfinite(hi_b) ? 0.5 * (b + hi_b) : b + step;
    step *= 2.0;
    fb = mean_at(b) - rho;
  }

  // bisect to a short interval, then Newton with the variance as the exact
  // derivative of the density map
  while (b - a > 1e-2) {
    double mid = 0.5 * (a + b);
    (mean_at(mid) - rho > 0.0 ? b : a) = mid;
  }
  double th = 0.5 * (a + b);
  double best_th = th, best_err = std::numeric_limits<double>::infinity();
  for (int i = 0; i < 100; ++i) {
    TiltedMeasure m = tilted(spec, th, meas_tol);
    double err = m.mean() - rho;
    if (std::abs(err) < std::abs(best_err)) {
      best_err = err;
      best_th = th;
    }
    if (std::abs(err) < tol) return th;
    (err > 0.0 ? b : a) = th;
    double next = th - err / m.variance();
    if (!(next > a && next < b)) next = 0.5 * (a + b);
    if (next == th) break; // at double resolution
    th = next;
  }
  if (std::abs(best_err) < 1e-9) return best_th;
  std::ostringstream os;
  os << spec.name << ": theta_of_density stalled at |density error| = "
     << std::abs(best_err);
  throw ConfigError(os.str());
}

SeedMeasure seed_measure(const RateSpec& spec, double rho, double tol) {
  double th = theta_of_density(spec, rho);
  TiltedMeasure m = tilted(spec, th, std::min(tol, 1e-13));
  const DiscreteDist& d = m.dist;
  const int lo = d.lo(), hi = d.hi();
  const int n = hi - lo + 1;

  // hat(y) = sum_{z>y} (z - rho) pmf(z).  The total over all z vanishes, so
  // below rho the equivalent head form sum_{z<=y} (rho - z) pmf(z) is used:
  // both are sums of positive terms, keeping hat nonnegative under round-off.
  std::vector<double> hat(static_cast<std::size_t>(n), 0.0);
  double suffix = 0.0;
  for (int y = hi - 1; y >= lo && y >= static_cast<int>(std::floor(rho));
       --y) {
    suffix += (y + 1 - rho) * d.pmf(y + 1);
    hat[static_cast<std::size_t>(y - lo)] = suffix;
  }
  double prefix = 0.0;
  for (int y = lo; y <= hi && y < static_cast<int>(std::floor(rho)); ++y) {
    prefix += (rho - y) * d.pmf(y);
    hat[static_cast<std::size_t>(y - lo)] = prefix;
  }

  double raw_sum = 0.0;
  for (double h : hat) raw_sum += h;
  double var = d.variance();

  SeedMeasure s;
  s.rho = rho;
  s.shift = 0;
  s.renorm_mass = std::abs(raw_sum / var - 1.0);
  s.dist = DiscreteDist(lo, std::move(hat));
  return s;
}

DominanceReport dominance_check(const DiscreteDist& lower,
                                const DiscreteDist& upper) {
  DominanceReport rep;
  rep.dominated = true;
  int lo = std::min(lower.lo(), upper.lo());
  int hi = std::max(lower.hi(), upper.hi());
  for (int z = lo; z < hi; ++z) {
    double cl = lower.cdf(z), cu = upper.cdf(z);
    if (cl < cu - 1e-12) {
      rep.dominated = false;
      rep.has_witness = true;
      rep.witness_z = z;
      rep.gap = cu - cl;
      return rep;
    }
  }
  return rep;
}

MonotoneCoupling::MonotoneCoupling(DiscreteDist lower, DiscreteDist upper,
                                   Strictness s)
    : lower_(std::move(lower)), upper_(std::move(upper)), strict_(s) {
  // weak: lower must sit stochastically below upper; strict: below even
  // after pulling upper down one step, so shared quantiles satisfy y < z
  DominanceReport rep =
      s == Strictness::Weak
          ? dominance_check(lower_, upper_)
          : dominance_check(lower_, shifted(upper_, -1));
  if (!rep.dominated) {
    std::ostringstream os;
    os << "monotone coupling: ordering fails at z=" << rep.witness_z
       << " (CDF gap " << rep.gap << ")"
       << (s == Strictness::Strict ? " in strict mode" : "");
    throw DominationError(os.str());
  }
}

MonotoneCoupling monotone_couple(const DiscreteDist& lower,
                                 const DiscreteDist& upper, Strictness s) {
  return MonotoneCoupling(lower, upper, s);
}

std::string to_json(const TiltedMeasure& m) {
  nlohmann::json j;
  j["theta"] = m.theta;
  j["log_Z"] = m.log_Z;
  j["support"] = {m.dist.lo(), m.dist.hi()};
  j["pmf"] = m.dist.probs();
  j["tail_mass_bound"] = m.tail_mass_bound;
  return j.dump();
}

std::string to_json(const SeedMeasure& m) {
  nlohmann::json j;
  j["rho"] = m.rho;
  j["shift"] = m.shift;
  j["support"] = {m.dist.lo(), m.dist.hi()};
  j["pmf"] = m.dist.probs();
  j["renorm_mass"] = m.renorm_mass;
  return j.dump();
}

} // namespace depsim
