#include "depsim/rates.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "depsim/errors.hpp"

namespace depsim {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

Asymmetry classify(double p_rate, double q_rate) {
  if (q_rate == 0.0) return Asymmetry::POnly;
  if (p_rate == 0.0) return Asymmetry::QOnly;
  return Asymmetry::Both;
}

std::string fspec_name(const FSpec& f) {
  struct V {
    std::string operator()(const GeomExpF& g) const {
      std::ostringstream os;
      os << "geom-exp(beta=" << g.beta << ")";
      return os.str();
    }
    std::string operator()(const ConstF&) const { return "const"; }
    std::string operator()(const LinearF&) const { return "linear"; }
    std::string operator()(const TableF& t) const {
      std::ostringstream os;
      os << "table(" << t.values.size() << " values, "
         << (t.tail == TableF::Tail::ConstantAfter ? "constant-after"
                                                   : "geometric-increment")
         << ")";
      return os.str();
    }
  };
  return std::visit(V{}, f);
}

std::function<double(int)> fspec_function(const FSpec& f) {
  struct V {
    std::function<double(int)> operator()(const GeomExpF& g) const {
      double beta = g.beta;
      return [beta](int z) { return z <= 0 ? 0.0 : 1.0 - std::exp(-beta * z); };
    }
    std::function<double(int)> operator()(const ConstF&) const {
      return [](int z) { return z >= 1 ? 1.0 : 0.0; };
    }
    std::function<double(int)> operator()(const LinearF&) const {
      return [](int z) { return z <= 0 ? 0.0 : static_cast<double>(z); };
    }
    std::function<double(int)> operator()(const TableF& t) const {
      if (t.values.empty()) throw ConfigError("rate table: empty f table");
      for (std::size_t i = 0; i < t.values.size(); ++i) {
        if (t.values[i] <= 0.0)
          throw ConfigError("rate table: f values must be positive");
        if (i > 0 && t.values[i] < t.values[i - 1])
          throw ConfigError("rate table: f values must be nondecreasing");
      }
      if (t.tail == TableF::Tail::GeometricIncrement &&
          t.increment_ratio <= 0.0)
        throw ConfigError("rate table: increment ratio must be positive");
      std::vector<double> vals = t.values;
      auto tail = t.tail;
      double r = t.increment_ratio;
      return [vals, tail, r](int z) -> double {
        if (z <= 0) return 0.0;
        int K = static_cast<int>(vals.size());
        if (z <= K) return vals[z - 1];
        if (tail == TableF::Tail::ConstantAfter) return vals[K - 1];
        double last = vals[K - 1];
        double delta = K >= 2 ? vals[K - 1] - vals[K - 2] : vals[0];
        int m = z - K;
        // increments continue as delta * r, delta * r^2, ...
        double gain = (r == 1.0) ? delta * m
                                 : delta * r * (1.0 - std::pow(r, m)) / (1.0 - r);
        return last + gain;
      };
    }
  };
  return std::visit(V{}, f);
}

double fspec_limit(const FSpec& f) {
  struct V {
    double operator()(const GeomExpF&) const { return 1.0; }
    double operator()(const ConstF&) const { return 1.0; }
    double operator()(const LinearF&) const { return kInf; }
    double operator()(const TableF& t) const {
      if (t.tail == TableF::Tail::ConstantAfter) return t.values.back();
      double r = t.increment_ratio;
      if (r >= 1.0) return kInf;
      std::size_t K = t.values.size();
      double delta = K >= 2 ? t.values[K - 1] - t.values[K - 2] : t.values[0];
      return t.values.back() + delta * r / (1.0 - r);
    }
  };
  return std::visit(V{}, f);
}

} // namespace

RateSpec make_asep(double p_rate) {
  if (p_rate < 0.0 || p_rate > 1.0)
    throw ConfigError("asep: p must lie in [0, 1]");
  double q_rate = 1.0 - p_rate;
  RateSpec s;
  {
    std::ostringstream os;
    os << "asep(p=" << p_rate << ")";
    s.name = os.str();
  }
  s.space = StateSpace{0, 1};
  s.f = [](int z) { return z == 1 ? 1.0 : 0.0; };
  s.s_p = [p_rate](int y, int z) {
    return (y == 1 && z == 1) ? p_rate : 0.0;
  };
  s.s_q = [q_rate](int y, int z) {
    return (y == 1 && z == 1) ? q_rate : 0.0;
  };
  s.p = [p_rate](int y, int z) { return (y == 1 && z == 0) ? p_rate : 0.0; };
  s.q = [q_rate](int y, int z) { return (y == 0 && z == 1) ? q_rate : 0.0; };
  s.form = RateForm::DensePair;
  s.asymmetry = classify(p_rate, q_rate);
  s.rate_upper_bound = std::max(p_rate, q_rate);
  return s;
}

RateSpec make_zrp(const FSpec& fs, double p_rate, double q_rate) {
  if (p_rate < 0.0 || q_rate < 0.0)
    throw ConfigError("zrp: rates must be nonnegative");
  if (p_rate + q_rate <= 0.0) throw ConfigError("zrp: p + q must be positive");
  RateSpec s;
  {
    std::ostringstream os;
    os << "zrp[" << fspec_name(fs) << "](p=" << p_rate << ",q=" << q_rate
       << ")";
    s.name = os.str();
  }
  s.space = StateSpace{0, StateSpace::kPosInf};
  auto f = fspec_function(fs);
  s.f = f;
  s.s_p = [p_rate](int, int) { return p_rate; };
  s.s_q = [q_rate](int, int) { return q_rate; };
  s.p = [p_rate, f](int y, int) { return p_rate * f(y); };
  s.q = [q_rate, f](int, int z) { return q_rate * f(z); };
  s.form = RateForm::ZeroRange;
  s.p_coef = p_rate;
  s.q_coef = q_rate;
  s.asymmetry = classify(p_rate, q_rate);
  double fsup = fspec_limit(fs);
  s.rate_upper_bound = (p_rate + q_rate) * fsup;
  s.theta_hi = std::log(fsup); // +inf stays +inf
  s.theta_lo = -kInf;
  return s;
}

RateSpec make_zrp_const(double p_rate, double q_rate) {
  RateSpec s = make_zrp(ConstF{}, p_rate, q_rate);
  std::ostringstream os;
  os << "zrp-const(p=" << p_rate << ",q=" << q_rate << ")";
  s.name = os.str();
  return s;
}

namespace {

RateSpec make_bricklayers_from_f(std::function<double(int)> fpos,
                                 double f_limit, const std::string& fname,
                                 double p_rate, double q_rate) {
  // extend by reflection: f(z) = 1 / f(1 - z) for z <= 0
  auto f = [fpos](int z) -> double {
    return z >= 1 ? fpos(z) : 1.0 / fpos(1 - z);
  };
  RateSpec s;
  {
    std::ostringstream os;
    os << "bricklayers[" << fname << "](p=" << p_rate << ",q=" << q_rate
       << ")";
    s.name = os.str();
  }
  s.space = StateSpace{StateSpace::kNegInf, StateSpace::kPosInf};
  s.f = f;
  s.s_p = [f, p_rate](int y, int z) {
    return p_rate + p_rate / (f(y) * f(z));
  };
  s.s_q = [f, q_rate](int y, int z) {
    return q_rate + q_rate / (f(y) * f(z));
  };
  s.p = [f, p_rate](int y, int z) { return p_rate * (f(y) + f(-z)); };
  s.q = [f, q_rate](int y, int z) { return q_rate * (f(-y) + f(z)); };
  s.form = RateForm::Bricklayer;
  s.p_coef = p_rate;
  s.q_coef = q_rate;
  s.asymmetry = classify(p_rate, q_rate);
  s.rate_upper_bound = kInf; // simulation requires an occupancy cap
  s.theta_hi = std::log(f_limit);
  s.theta_lo = -s.theta_hi;
  return s;
}

} // namespace

RateSpec make_bricklayers_exp(double beta, double p_rate, double q_rate) {
  if (beta <= 0.0) throw ConfigError("bricklayers: beta must be positive");
  std::ostringstream os;
  os << "exp(beta=" << beta << ")";
  return make_bricklayers_from_f(
      [beta](int z) { return std::exp(beta * (z - 0.5)); }, kInf, os.str(),
      p_rate, q_rate);
}

RateSpec make_bricklayers_table(std::vector<double> f_pos, double growth,
                                double p_rate, double q_rate) {
  if (f_pos.empty()) throw ConfigError("bricklayers: empty f table");
  if (f_pos.front() < 1.0)
    throw ConfigError("bricklayers: f(1) must be >= 1 so that f(0) <= f(1)");
  for (std::size_t i = 1; i < f_pos.size(); ++i)
    if (f_pos[i] < f_pos[i - 1])
      throw ConfigError("bricklayers: f table must be nondecreasing");
  if (growth < 1.0) throw ConfigError("bricklayers: growth must be >= 1");
  double f_limit = growth > 1.0 ? kInf : f_pos.back();
  if (f_limit <= 1.0 && growth == 1.0)
    throw ConfigError(
        "bricklayers: constant f <= 1 leaves no admissible tilting range");
  std::ostringstream os;
  os << "table(" << f_pos.size() << " values, growth=" << growth << ")";
  auto fpos = [vals = std::move(f_pos), growth](int z) -> double {
    int K = static_cast<int>(vals.size());
    if (z <= K) return vals[z - 1];
    return vals[K - 1] * std::pow(growth, z - K);
  };
  return make_bricklayers_from_f(fpos, f_limit, os.str(), p_rate, q_rate);
}

RateSpec make_pap_exclusion(double a, double c, double p_rate) {
  if (a <= 0.0 || c <= 0.0) throw ConfigError("pap: a and c must be positive");
  if (c > a / 2.0) throw ConfigError("pap: requires c <= a/2");
  if (p_rate < 0.0 || p_rate > 1.0)
    throw ConfigError("pap: p must lie in [0, 1]");
  double q_rate = 1.0 - p_rate;
  RateSpec s;
  {
    std::ostringstream os;
    os << "pap-exclusion(a=" << a << ",c=" << c << ",p=" << p_rate << ")";
    s.name = os.str();
  }
  s.space = StateSpace{-1, 1};
  s.f = [a, c](int z) { return z == 1 ? a : (z == 0 ? c : 0.0); };
  auto s_factor = [a, c](int y, int z, double rate) -> double {
    if (y > 1 || z > 1 || y < 0 || z < 0) return 0.0;
    if (y != z) return rate;             // (0,1) and (1,0)
    if (y == 0) return rate * a / (2 * c);
    return rate / 2;                     // (1,1)
  };
  s.s_p = [s_factor, p_rate](int y, int z) { return s_factor(y, z, p_rate); };
  s.s_q = [s_factor, q_rate](int y, int z) { return s_factor(y, z, q_rate); };
  auto f = s.f;
  auto sp = s.s_p;
  auto sq = s.s_q;
  s.p = [sp, f](int y, int z) { return sp(y, z + 1) * f(y); };
  s.q = [sq, f](int y, int z) { return sq(y + 1, z) * f(z); };
  s.form = RateForm::DensePair;
  s.asymmetry = classify(p_rate, q_rate);
  double bound = 0.0;
  for (int y = -1; y <= 1; ++y)
    for (int z = -1; z <= 1; ++z) bound = std::max(bound, s.p(y, z) + s.q(y, z));
  s.rate_upper_bound = bound;
  return s;
}

// ----------------------------------------------------------------------
// validation

namespace {

bool close(double x, double y) {
  double scale = std::max({1.0, std::abs(x), std::abs(y)});
  return std::abs(x - y) <= 1e-9 * scale;
}

struct Reporter {
  std::vector<Violation>& out;
  static constexpr std::size_t kMax = 32;
  bool truncated = false;
  template <class... Args>
  void add(const char* condition, Args&&... args) {
    if (out.size() >= kMax) {
      if (!truncated) {
        out.push_back({"...", "further violations suppressed"});
        truncated = true;
      }
      return;
    }
    std::ostringstream os;
    (os << ... << args);
    out.push_back({condition, os.str()});
  }
};

} // namespace

ValidationReport validate(const RateSpec& spec, int win_lo, int win_hi) {
  auto [lo, hi] = spec.space.window(win_lo, win_hi);
  if (lo > hi) throw ConfigError("validate: empty occupancy window");
  ValidationReport rep;
  Reporter r{rep.violations};

  const auto& sp = spec.space;
  // f shape
  if (sp.bounded_below()) {
    if (lo == sp.omega_min && spec.f(lo) != 0.0)
      r.add("f-shape", "f(omega_min)=f(", lo, ")=", spec.f(lo), ", want 0");
  }
  for (int z = lo; z <= hi; ++z) {
    bool is_min = sp.bounded_below() && z == sp.omega_min;
    if (!is_min && spec.f(z) <= 0.0)
      r.add("f-shape", "f(", z, ")=", spec.f(z), " not positive");
    if (z > lo && spec.f(z) < spec.f(z - 1) - 1e-12)
      r.add("f-shape", "f decreasing between ", z - 1, " and ", z);
  }

  // boundary vanishing
  if (sp.bounded_below() && lo == sp.omega_min) {
    for (int z = lo; z <= hi; ++z) {
      if (spec.p(sp.omega_min, z) != 0.0)
        r.add("boundary-vanishing", "p(omega_min,", z,
              ")=", spec.p(sp.omega_min, z));
      if (spec.q(z, sp.omega_min) != 0.0)
        r.add("boundary-vanishing", "q(", z,
              ",omega_min)=", spec.q(z, sp.omega_min));
    }
  }
  if (sp.bounded_above() && hi == sp.omega_max) {
    for (int z = lo; z <= hi; ++z) {
      if (spec.p(z, sp.omega_max) != 0.0)
        r.add("boundary-vanishing", "p(", z,
              ",omega_max)=", spec.p(z, sp.omega_max));
      if (spec.q(sp.omega_max, z) != 0.0)
        r.add("boundary-vanishing", "q(omega_max,", z,
              ")=", spec.q(sp.omega_max, z));
    }
  }

  // positivity off the vanishing set, unless the rate is identically zero
  auto interior_p = [&](int y, int z) {
    return !(sp.bounded_below() && y == sp.omega_min) &&
           !(sp.bounded_above() && z == sp.omega_max);
  };
  auto interior_q = [&](int y, int z) {
    return !(sp.bounded_above() && y == sp.omega_max) &&
           !(sp.bounded_below() && z == sp.omega_min);
  };
  double pmax = 0.0, qmax = 0.0;
  for (int y = lo; y <= hi; ++y)
    for (int z = lo; z <= hi; ++z) {
      pmax = std::max(pmax, spec.p(y, z));
      qmax = std::max(qmax, spec.q(y, z));
    }
  for (int y = lo; y <= hi; ++y)
    for (int z = lo; z <= hi; ++z) {
      if (pmax > 0.0 && interior_p(y, z) && spec.p(y, z) <= 0.0)
        r.add("positivity", "p(", y, ",", z, ")=0 off the vanishing set");
      if (qmax > 0.0 && interior_q(y, z) && spec.q(y, z) <= 0.0)
        r.add("positivity", "q(", y, ",", z, ")=0 off the vanishing set");
    }

  // attractivity
  for (int y = lo; y <= hi; ++y)
    for (int z = lo; z + 1 <= hi; ++z) {
      if (spec.p(z + 1, y) < spec.p(z, y) - 1e-12)
        r.add("attractivity", "p(", z + 1, ",", y, ") < p(", z, ",", y, ")");
      if (spec.p(y, z + 1) > spec.p(y, z) + 1e-12)
        r.add("attractivity", "p(", y, ",", z + 1, ") > p(", y, ",", z, ")");
      if (spec.q(z + 1, y) > spec.q(z, y) + 1e-12)
        r.add("attractivity", "q(", z + 1, ",", y, ") > q(", z, ",", y, ")");
      if (spec.q(y, z + 1) < spec.q(y, z) - 1e-12)
        r.add("attractivity", "q(", y, ",", z + 1, ") < q(", y, ",", z, ")");
    }

  // oriented three-cycle balance of p + q
  auto g = [&](int y, int z) { return spec.p(y, z) + spec.q(y, z); };
  for (int x = lo; x <= hi; ++x)
    for (int y = lo; y <= hi; ++y)
      for (int z = lo; z <= hi; ++z) {
        double fwd = g(x, y) + g(y, z) + g(z, x);
        double bwd = g(x, z) + g(z, y) + g(y, x);
        if (!close(fwd, bwd)) {
          r.add("cycle-balance", "triple (", x, ",", y, ",", z, "): ", fwd,
                " vs ", bwd);
          if (rep.violations.size() > Reporter::kMax) return rep;
        }
      }

  // factorization through s_p, s_q and f, plus symmetry of s_p, s_q
  for (int y = lo; y <= hi; ++y)
    for (int z = lo; z <= hi; ++z) {
      double sp1 = (sp.bounded_above() && z + 1 > sp.omega_max)
                       ? 0.0
                       : spec.s_p(y, z + 1);
      if (!close(spec.p(y, z), sp1 * spec.f(y)))
        r.add("factorization", "p(", y, ",", z, ")=", spec.p(y, z),
              " != s_p(y,z+1) f(y)=", sp1 * spec.f(y));
      double sq1 = (sp.bounded_above() && y + 1 > sp.omega_max)
                       ? 0.0
                       : spec.s_q(y + 1, z);
      if (!close(spec.q(y, z), sq1 * spec.f(z)))
        r.add("factorization", "q(", y, ",", z, ")=", spec.q(y, z),
              " != s_q(y+1,z) f(z)=", sq1 * spec.f(z));
      if (!close(spec.s_p(y, z), spec.s_p(z, y)))
        r.add("factorization", "s_p(", y, ",", z, ") not symmetric");
      if (!close(spec.s_q(y, z), spec.s_q(z, y)))
        r.add("factorization", "s_q(", y, ",", z, ") not symmetric");
    }

  return rep;
}

IncrementRatioReport check_increment_ratio(const RateSpec& spec, int z_hi) {
  IncrementRatioReport rep;
  std::ostringstream w;
  if (!spec.space.bounded_below() || spec.space.omega_min != 0) {
    rep.witness = "requires omega_min = 0";
    return rep;
  }
  if (spec.f(0) != 0.0) {
    rep.witness = "f(0) != 0";
    return rep;
  }
  if (spec.f(1) <= 0.0) {
    rep.witness = "f(1) <= 0";
    return rep;
  }
  double prev_inc = spec.f(1);
  double max_ratio = 0.0;
  for (int z = 1; z < z_hi; ++z) {
    double inc = spec.f(z + 1) - spec.f(z);
    // increments are reconstructed by subtraction, so below ~1e-4 of f the
    // cancellation noise dominates any ratio; stop at the first such step
    // (concavity means everything beyond is smaller still).  exact zeros are
    // a plateau, not noise, so those keep scanning.
    double resolution = 1e-4 * std::max(1.0, std::abs(spec.f(z + 1)));
    if (inc > 0.0 && inc < resolution) break;
    if (inc < -1e-12) {
      w << "f decreasing at z=" << z + 1;
      rep.witness = w.str();
      return rep;
    }
    if (inc > prev_inc + 1e-12) {
      w << "increments grow at z=" << z + 1 << " (" << prev_inc << " -> "
        << inc << ")";
      rep.witness = w.str();
      return rep;
    }
    if (prev_inc > 0.0) {
      double ratio = inc / prev_inc;
      max_ratio = std::max(max_ratio, ratio);
      if (ratio >= 1.0 - 1e-15 && inc > 1e-300) {
        // ratio pinned at 1: increments do not decay geometrically
        if (ratio >= 1.0) {
          w << "increment ratio " << ratio << " at z=" << z + 1;
          rep.witness = w.str();
          return rep;
        }
      }
    } else if (inc > 0.0) {
      w << "increment reappears after vanishing at z=" << z + 1;
      rep.witness = w.str();
      return rep;
    }
    prev_inc = inc;
  }
  rep.ratio_bound = max_ratio;
  rep.holds = max_ratio < 1.0;
  if (!rep.holds) rep.witness = "no ratio bound below 1";
  return rep;
}

// ----------------------------------------------------------------------
// compiled tables

CompiledRates compile_rates(const RateSpec& spec, int occ_lo, int occ_hi) {
  if (occ_lo > occ_hi) throw ConfigError("compile_rates: empty window");
  switch (spec.form) {
    case RateForm::DensePair: {
      if (!spec.space.bounded_below() || !spec.space.bounded_above())
        throw ConfigError("compile_rates: dense form needs finite I");
      DensePairRates t;
      t.lo = spec.space.omega_min;
      t.width = spec.space.omega_max - spec.space.omega_min + 1;
      t.p_tab.resize(t.width * t.width);
      t.q_tab.resize(t.width * t.width);
      for (int y = spec.space.omega_min; y <= spec.space.omega_max; ++y)
        for (int z = spec.space.omega_min; z <= spec.space.omega_max; ++z) {
          t.p_tab[(y - t.lo) * t.width + (z - t.lo)] = spec.p(y, z);
          t.q_tab[(y - t.lo) * t.width + (z - t.lo)] = spec.q(y, z);
          t.bond_rate_bound =
              std::max(t.bond_rate_bound, spec.p(y, z) + spec.q(y, z));
        }
      return t;
    }
    case RateForm::ZeroRange: {
      if (occ_lo < 0) throw ConfigError("compile_rates: negative occupancy");
      ZeroRangeRates t;
      t.f_tab.resize(occ_hi + 1);
      for (int z = 0; z <= occ_hi; ++z) t.f_tab[z] = spec.f(z);
      t.p_coef = spec.p_coef;
      t.q_coef = spec.q_coef;
      t.bond_rate_bound = (t.p_coef + t.q_coef) * t.f_tab[occ_hi];
      return t;
    }
    case RateForm::Bricklayer: {
      BricklayerRates t;
      t.lo = occ_lo;
      int width = occ_hi - occ_lo + 1;
      t.f_tab.resize(width);
      t.g_tab.resize(width);
      for (int z = occ_lo; z <= occ_hi; ++z) {
        t.f_tab[z - occ_lo] = spec.f(z);
        t.g_tab[z - occ_lo] = spec.f(-z);
      }
      t.p_coef = spec.p_coef;
      t.q_coef = spec.q_coef;
      for (int y = occ_lo; y <= occ_hi; ++y)
        for (int z = occ_lo; z <= occ_hi; ++z)
          t.bond_rate_bound =
              std::max(t.bond_rate_bound, t.prate(y, z) + t.qrate(y, z));
      return t;
    }
  }
  throw ConfigError("compile_rates: unknown rate form");
}

double bond_rate_bound(const CompiledRates& rates) {
  return std::visit([](const auto& t) { return t.bond_rate_bound; }, rates);
}

} // namespace depsim
