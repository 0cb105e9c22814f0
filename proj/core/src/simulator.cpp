#include "depsim/simulator.hpp"

#include "depsim/measures.hpp"

#include <cstdlib>
#include <variant>

namespace depsim {

std::pair<int, int> sim_window(const StateSpace& space, int occ_cap) {
  if (occ_cap < 1) throw ConfigError("sim_window: occ_cap must be >= 1");
  int lo = space.bounded_below() ? space.omega_min : -occ_cap;
  int hi = space.bounded_above() ? space.omega_max : occ_cap;
  if (lo >= hi) throw ConfigError("sim_window: degenerate occupancy window");
  return {lo, hi};
}

void check_wraparound_guard(int L, double rate_bound, double elapsed,
                            double max_abs_site, double guard_factor) {
  if (!(rate_bound >= 0.0) || !(elapsed >= 0.0) || !(max_abs_site >= 0.0))
    throw ConfigError("wraparound guard: negative or NaN inputs");
  double need = guard_factor * (rate_bound * elapsed + max_abs_site);
  if (!(static_cast<double>(L) >= need))
    throw GuardError("ring too small for the horizon: L = " +
                     std::to_string(L) + " < " + std::to_string(need));
}

RingState make_state(const RateSpec& spec, std::vector<int> occ,
                     RngStream rng) {
  if (occ.size() < 2) throw ConfigError("make_state: need at least 2 sites");
  for (int v : occ)
    if (!spec.space.contains(v))
      throw ConfigError("make_state: occupancy outside I");
  RingState s;
  s.L = static_cast<int>(occ.size());
  s.occ = std::move(occ);
  s.bond_current.assign(static_cast<std::size_t>(s.L), 0);
  s.time = 0.0;
  s.rng = rng;
  return s;
}

RingState init_stationary(const RateSpec& spec, double rho, int L,
                          RngStream rng) {
  if (L < 4) throw ConfigError("init_stationary: L must be >= 4");
  TiltedMeasure m = tilted(spec, theta_of_density(spec, rho));
  std::vector<int> occ(static_cast<std::size_t>(L));
  for (int& v : occ) v = m.dist.sample(rng);
  return make_state(spec, std::move(occ), rng);
}

long long height(const RingState& s, int i) {
  if (2 * std::abs(i) >= s.L)
    throw GuardError("height: site outside the safe window");
  long long h = s.bond_current[0];
  if (i > 0)
    for (int j = 1; j <= i; ++j) h -= s.occ[static_cast<std::size_t>(j)];
  else
    for (int j = i + 1; j <= 0; ++j)
      h += s.occ[static_cast<std::size_t>((j % s.L + s.L) % s.L)];
  return h;
}

std::uint64_t run(RingState& s, const RateSpec& spec, double t_end,
                  std::span<const Observer> observers, const RunOptions& opt) {
  auto [lo, hi] = sim_window(spec.space, opt.occ_cap);
  CompiledRates rates = compile_rates(spec, lo, hi);
  return std::visit(
      [&](const auto& r) {
        if (observers.empty())
          return run_ring(s, r, lo, hi, t_end, opt,
                          [](const RingState&, const Event&) {});
        return run_ring(s, r, lo, hi, t_end, opt,
                        [&](const RingState& st, const Event& e) {
                          for (const auto& ob : observers) ob(st, e);
                        });
      },
      rates);
}

} // namespace depsim
