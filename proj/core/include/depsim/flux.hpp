#pragma once

// Hydrodynamic quantities of a rate family at density rho, all computed
// from two-site expectations under the product of tilted marginals:
//   H(rho)  = E[p(w0, w1) - q(w0, w1)]   (net column growth rate)
//   V(rho)  = H'(rho), evaluated analytically as
//             Cov(p - q, w0 + w1) / Var(w)   (tilt-derivative identity)
//   H''(rho) by Richardson-extrapolated central differences of V.
// Truncated series carry a geometric-tail divergence guard.

#include "depsim/rates.hpp"

namespace depsim {

struct CurvatureEstimate {
  double value = 0.0;
  double margin = 0.0; // disagreement between the two Richardson steps
  double step = 0.0;   // base step used
};

struct FluxEvaluation {
  double rho = 0.0;
  double H = 0.0;
  double V = 0.0;
  double H2 = 0.0;
  double H2_margin = 0.0;
  double tail_bound = 0.0; // truncation error bound carried by H
};

// Expected net deposition rate across a bond. Throws TruncationError when
// the truncated two-site series cannot be bounded within tol.
double flux_H(const RateSpec& spec, double rho, double tol = 1e-12);

// dH/drho through the covariance identity; no numeric differentiation.
double char_speed(const RateSpec& spec, double rho, double tol = 1e-12);

// d2H/drho2 from char_speed at steps h and h/2. Throws ConfigError when
// rho is too close to an occupancy bound to place the stencil.
CurvatureEstimate flux_H2(const RateSpec& spec, double rho,
                          double tol = 1e-12);

// shock speed (H(rho) - H(lambda)) / (rho - lambda)
double rankine_hugoniot(const RateSpec& spec, double lambda, double rho,
                        double tol = 1e-12);

FluxEvaluation flux_eval(const RateSpec& spec, double rho,
                         double tol = 1e-12);

} // namespace depsim
