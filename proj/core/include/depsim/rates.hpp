#pragma once

// Jump-rate specifications for attractive deposition processes on a ring.
// A configuration assigns an occupancy omega_i from the integer interval I
// to every site. Two moves act across each oriented bond (i, i+1):
//   deposition: (omega_i, omega_{i+1}) -> (omega_i - 1, omega_{i+1} + 1)
//               at rate p(omega_i, omega_{i+1}), raising the height h_i by 1;
//   removal:    the reverse move at rate q(omega_i, omega_{i+1}).
//
// Admissible rate families satisfy, on I:
//   * boundary vanishing: moves never leave I;
//   * attractivity: p is nondecreasing in its first and nonincreasing in its
//     second argument, q the other way around;
//   * cycle balance: sum of p+q over any oriented 3-cycle of occupancy values
//     equals the sum over the reversed cycle;
//   * factorization: p(y,z) = s_p(y, z+1) f(y), q(y,z) = s_q(y+1, z) f(z)
//     with s_p, s_q symmetric and f nondecreasing, f(omega_min) = 0 when
//     omega_min is finite.
// These guarantee a family of product-form stationary measures (measures.hpp).

#include <functional>
#include <limits>
#include <string>
#include <variant>
#include <vector>

namespace depsim {

struct StateSpace {
  static constexpr int kNegInf = std::numeric_limits<int>::min();
  static constexpr int kPosInf = std::numeric_limits<int>::max();

  int omega_min = 0;
  int omega_max = 1;

  bool bounded_below() const { return omega_min != kNegInf; }
  bool bounded_above() const { return omega_max != kPosInf; }
  bool contains(long long z) const {
    return (!bounded_below() || z >= omega_min) &&
           (!bounded_above() || z <= omega_max);
  }
  // [max(omega_min, lo), min(omega_max, hi)]
  std::pair<int, int> window(int lo, int hi) const {
    if (bounded_below() && lo < omega_min) lo = omega_min;
    if (bounded_above() && hi > omega_max) hi = omega_max;
    return {lo, hi};
  }
};

enum class Asymmetry { POnly, QOnly, Both };

// Single-site rate factor f for zero-range style models, as data:
// either a named closed form or a table for z >= 1 with a tail rule.
struct GeomExpF {
  double beta = 1.0; // f(z) = 1 - exp(-beta z)
};
struct ConstF {}; // f(z) = 1{z >= 1}
struct LinearF {}; // f(z) = z
struct TableF {
  std::vector<double> values; // f(1), ..., f(K); f(0) = 0 implied
  enum class Tail { ConstantAfter, GeometricIncrement } tail =
      Tail::ConstantAfter;
  double increment_ratio = 0.5; // next increment = ratio * previous one
};
using FSpec = std::variant<GeomExpF, ConstF, LinearF, TableF>;

// Structural form of the full bond rates, used to pick the compiled
// table layout: DensePair tabulates p, q over finite I x I; ZeroRange has
// p(y,z) = p_coef f(y), q(y,z) = q_coef f(z); Bricklayer has
// p(y,z) = p_coef (f(y) + f(-z)), q(y,z) = q_coef (f(-y) + f(z)).
enum class RateForm { DensePair, ZeroRange, Bricklayer };

struct RateSpec {
  std::string name;
  StateSpace space;

  std::function<double(int)> f;
  std::function<double(int, int)> s_p, s_q;
  std::function<double(int, int)> p, q;

  RateForm form = RateForm::DensePair;
  double p_coef = 1.0, q_coef = 0.0; // ZeroRange / Bricklayer forms

  Asymmetry asymmetry = Asymmetry::Both;

  // sup over I x I of p + q; +inf means simulation needs an occupancy cap
  double rate_upper_bound = std::numeric_limits<double>::infinity();

  // open interval of admissible tilting parameters:
  //   theta_hi = lim log f(z) as z -> +inf when I is unbounded above,
  //   theta_lo = lim log f(-z) when unbounded below; infinite otherwise
  double theta_lo = -std::numeric_limits<double>::infinity();
  double theta_hi = std::numeric_limits<double>::infinity();
};

// Builtin model families ------------------------------------------------

// exclusion: omega in {0,1}, particle hops right at rate p_rate onto an
// empty site, left at rate 1 - p_rate
RateSpec make_asep(double p_rate);

// zero range: omega in {0,1,...}, a particle leaves site i rightward at
// rate p_rate * f(omega_i), leftward at rate q_rate * f(omega_i)
RateSpec make_zrp(const FSpec& f, double p_rate = 1.0, double q_rate = 0.0);
RateSpec make_zrp_const(double p_rate = 1.0, double q_rate = 0.0);

// bricklayers: omega ranges over all integers; a brick lands on column i
// at rate p_rate * (f(omega_i) + f(-omega_{i+1})) and is removed at rate
// q_rate * (f(-omega_i) + f(omega_{i+1})), where f(z) * f(1-z) = 1.
// Exponential form f(z) = exp(beta (z - 1/2)).
RateSpec make_bricklayers_exp(double beta, double p_rate = 1.0,
                              double q_rate = 0.0);
// Table form: f(1..K) given (positive, nondecreasing, f(1) >= 1), extended
// geometrically by f(z+1) = growth * f(z) beyond the table and by
// reflection below 1.
RateSpec make_bricklayers_table(std::vector<double> f_pos, double growth,
                                double p_rate = 1.0, double q_rate = 0.0);

// particle-antiparticle exclusion: omega in {-1,0,1}; pair creation rate
// c, annihilation rate a with c <= a/2, right bias p_rate (left 1-p_rate)
RateSpec make_pap_exclusion(double a, double c, double p_rate);

// Admissibility checks ---------------------------------------------------

struct Violation {
  std::string condition; // boundary-vanishing | positivity | attractivity |
                         // cycle-balance | factorization | f-shape
  std::string detail;    // witness arguments plus both sides
};

struct ValidationReport {
  std::vector<Violation> violations;
  bool ok() const { return violations.empty(); }
};

// Checks all structural rate conditions on the occupancy window
// [max(omega_min, win_lo), min(omega_max, win_hi)].
ValidationReport validate(const RateSpec& spec, int win_lo = -12,
                          int win_hi = 12);

// Geometric-increment property of f needed by the label-walker
// construction: f(0) = 0 < f(1), f nondecreasing and concave, and
// (f(z+1) - f(z)) / (f(z) - f(z-1)) <= ratio_bound < 1 wherever the
// denominator is positive.
struct IncrementRatioReport {
  bool holds = false;
  double ratio_bound = 0.0; // max observed ratio; any r in [ratio_bound, 1)
                            // works as a geometric tail bound
  std::string witness;      // first violation, empty when holds
};
IncrementRatioReport check_increment_ratio(const RateSpec& spec,
                                           int z_hi = 48);

// Compiled table-backed rates --------------------------------------------
// The simulators are templated on these small functors so the event loop
// reads rates from flat arrays.

struct DensePairRates {
  int lo = 0, width = 0;
  std::vector<double> p_tab, q_tab; // [(y-lo)*width + (z-lo)]
  double bond_rate_bound = 0.0;
  double prate(int y, int z) const { return p_tab[(y - lo) * width + (z - lo)]; }
  double qrate(int y, int z) const { return q_tab[(y - lo) * width + (z - lo)]; }
};

struct ZeroRangeRates {
  std::vector<double> f_tab; // indexed by occupancy from 0
  double p_coef = 1.0, q_coef = 0.0;
  double bond_rate_bound = 0.0;
  double prate(int y, int) const { return p_coef * f_tab[y]; }
  double qrate(int, int z) const { return q_coef * f_tab[z]; }
};

struct BricklayerRates {
  int lo = 0;
  std::vector<double> f_tab, g_tab; // f(z), f(-z) for z - lo in [0, width)
  double p_coef = 1.0, q_coef = 0.0;
  double bond_rate_bound = 0.0;
  double prate(int y, int z) const {
    return p_coef * (f_tab[y - lo] + g_tab[z - lo]);
  }
  double qrate(int y, int z) const {
    return q_coef * (g_tab[y - lo] + f_tab[z - lo]);
  }
};

using CompiledRates =
    std::variant<DensePairRates, ZeroRangeRates, BricklayerRates>;

// occ_lo/occ_hi: occupancy values the simulation may visit (inclusive).
CompiledRates compile_rates(const RateSpec& spec, int occ_lo, int occ_hi);

double bond_rate_bound(const CompiledRates& rates);

} // namespace depsim
