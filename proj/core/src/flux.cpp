#include "depsim/flux.hpp"

#include "depsim/errors.hpp"
#include "depsim/measures.hpp"

#include <cmath>
#include <functional>
#include <sstream>

namespace depsim {

namespace {

// Sum of pmf(y) pmf(z) g(y, z) over the truncated support square.  On
// unbounded sides the outermost two perimeter rings estimate the excluded
// remainder by a geometric extrapolation; if the rings grow the series is
// treated as divergent.
double two_site_expectation(const RateSpec& spec, const DiscreteDist& d,
                            const std::function<double(int, int)>& g,
                            double tol) {
  const int lo = d.lo(), hi = d.hi();
  double total = 0.0, total_abs = 0.0;
  for (int y = lo; y <= hi; ++y) {
    double py = d.pmf(y);
    if (py == 0.0) continue;
    for (int z = lo; z <= hi; ++z) {
      double w = py * d.pmf(z);
      if (w == 0.0) continue;
      double v = g(y, z);
      total += w * v;
      total_abs += std::abs(w * v);
    }
  }

  auto ring_abs = [&](int s_lo, int s_hi, bool top) {
    // cells whose largest (top) or smallest (bottom) coordinate equals the
    // given edge value
    double acc = 0.0;
    int edge = top ? s_hi : s_lo;
    for (int y = lo; y <= hi; ++y)
      for (int z = lo; z <= hi; ++z) {
        int m = top ? std::max(y, z) : std::min(y, z);
        if (m != edge) continue;
        acc += d.pmf(y) * d.pmf(z) * std::abs(g(y, z));
      }
    return acc;
  };

  double excluded = 0.0;
  auto guard_side = [&](bool top) {
    double p1 = ring_abs(lo, hi, top);
    double p2 = top ? ring_abs(lo, hi - 1, top) : ring_abs(lo + 1, hi, top);
    if (p1 == 0.0) return;
    if (p2 <= p1) {
      std::ostringstream os;
      os << spec.name << ": two-site series shows no decay at the "
         << (top ? "upper" : "lower") << " truncation edge (" << p2 << " -> "
         << p1 << ")";
      throw TruncationError(os.str());
    }
    double r = p1 / p2;
    excluded += p1 * r / (1.0 - r);
  };
  if (!spec.space.bounded_above()) guard_side(true);
  if (!spec.space.bounded_below()) guard_side(false);

  if (excluded > tol * std::max(1.0, total_abs)) {
    std::ostringstream os;
    os << spec.name << ": two-site truncation error bound " << excluded
       << " exceeds tol " << tol;
    throw TruncationError(os.str());
  }
  return total;
}

// Rates may grow with occupancy, so the marginal tail must undershoot tol
// by a wide factor; when the guarded sum still cannot certify tol the
// support is refined before giving up.  Genuinely divergent series fail at
// every refinement (their edge rings grow) and the last error propagates.
double guarded_expectation(const RateSpec& spec, double theta,
                           const std::function<double(int, int)>& g,
                           double tol) {
  double meas_tol = std::min(tol * 1e-4, 1e-14);
  for (int attempt = 0;; ++attempt) {
    DiscreteDist d = tilted(spec, theta, meas_tol).dist;
    try {
      return two_site_expectation(spec, d, g, tol);
    } catch (const TruncationError&) {
      if (attempt >= 2) throw;
      meas_tol *= 1e-4;
    }
  }
}

} // namespace

double flux_H(const RateSpec& spec, double rho, double tol) {
  double th = theta_of_density(spec, rho);
  return guarded_expectation(
      spec, th, [&](int y, int z) { return spec.p(y, z) - spec.q(y, z); },
      tol);
}

double char_speed(const RateSpec& spec, double rho, double tol) {
  double th = theta_of_density(spec, rho);
  auto net = [&](int y, int z) { return spec.p(y, z) - spec.q(y, z); };
  double h = guarded_expectation(spec, th, net, tol);
  double weighted = guarded_expectation(
      spec, th, [&](int y, int z) { return net(y, z) * (y + z); }, tol);
  DiscreteDist d = tilted(spec, th, 1e-14).dist;
  double mean = d.mean();
  double var = d.variance();
  // d/dtheta of a two-site expectation is its covariance with w0 + w1;
  // divide by drho/dtheta = Var to change variables to the density
  return (weighted - h * 2.0 * mean) / var;
}

CurvatureEstimate flux_H2(const RateSpec& spec, double rho, double tol) {
  const StateSpace& sp = spec.space;
  double h = std::max(1e-4, 1e-3 * std::abs(rho));
  if (sp.bounded_below())
    h = std::min(h, 0.45 * (rho - sp.omega_min));
  if (sp.bounded_above())
    h = std::min(h, 0.45 * (sp.omega_max - rho));
  if (!(h > 1e-7)) {
    std::ostringstream os;
    os << spec.name << ": density " << rho
       << " too close to an occupancy bound for a curvature stencil";
    throw ConfigError(os.str());
  }
  auto d1 = [&](double step) {
    return (char_speed(spec, rho + step, tol) -
            char_speed(spec, rho - step, tol)) /
           (2.0 * step);
  };
  double coarse = d1(h);
  double fine = d1(0.5 * h);
  CurvatureEstimate est;
  est.value = (4.0 * fine - coarse) / 3.0;
  est.margin = std::abs(fine - coarse);
  est.step = h;
  return est;
}

double rankine_hugoniot(const RateSpec& spec, double lambda, double rho,
                        double tol) {
  if (!(std::abs(rho - lambda) > 1e-12))
    throw ConfigError("rankine_hugoniot: densities must differ");
  return (flux_H(spec, rho, tol) - flux_H(spec, lambda, tol)) /
         (rho - lambda);
}

FluxEvaluation flux_eval(const RateSpec& spec, double rho, double tol) {
  FluxEvaluation ev;
  ev.rho = rho;
  ev.H = flux_H(spec, rho, tol);
  ev.V = char_speed(spec, rho, tol);
  CurvatureEstimate c = flux_H2(spec, rho, tol);
  ev.H2 = c.value;
  ev.H2_margin = c.margin;
  ev.tail_bound = tol;
  return ev;
}

} // namespace depsim
