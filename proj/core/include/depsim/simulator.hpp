#pragma once
// exact continuous-time simulation of a single deposition process on a ring
// of L sites.  Gillespie direct method: one clock per oriented bond, kept in
// a binary sum tree, so every event costs O(log L) plus a handful of rate
// table reads.

#include "depsim/errors.hpp"
#include "depsim/rates.hpp"
#include "depsim/rng.hpp"
#include "depsim/sum_tree.hpp"

#include <cmath>
#include <cstdint>
#include <functional>
#include <span>
#include <utility>
#include <vector>

namespace depsim {

struct Event {
  double time = 0.0;
  int bond = 0;      // acts on sites (bond, bond+1 mod L)
  int direction = 0; // +1 deposition, -1 removal
};

struct RingState {
  int L = 0;
  std::vector<int> occ;
  // net right transfers across bond i: +1 per deposition, -1 per removal;
  // h_0(t) equals bond_current[0] with the h_0(0) = 0 normalization
  std::vector<long long> bond_current;
  double time = 0.0;
  RngStream rng;
};

struct RunOptions {
  // occupancy window the run may visit.  Unbounded sides of I are cut at
  // +-occ_cap; a move that would leave the window aborts the run (its
  // stationary probability is far below 1e-12 for admissible tilts).
  int occ_cap = 60;
  std::uint64_t max_events = UINT64_MAX; // early stop, used by tests
  std::uint64_t rebuild_every = 1u << 22; // periodic clock-tree refresh
};

// occupancy window actually simulated: I clipped to +-occ_cap
std::pair<int, int> sim_window(const StateSpace& space, int occ_cap);

// Require L >= guard_factor * (rate_bound * elapsed + furthest read site).
// Information spreads at most rate_bound sites per unit time in one event,
// so with the default factor 6 the two arcs of the ring cannot conspire to
// influence a windowed observable.  Throws GuardError.
void check_wraparound_guard(int L, double rate_bound, double elapsed,
                            double max_abs_site, double guard_factor = 6.0);

// explicit initial configuration (validated against I); currents zero
RingState make_state(const RateSpec& spec, std::vector<int> occ,
                     RngStream rng);

// occupancies i.i.d. from the stationary single-site marginal at density rho
RingState init_stationary(const RateSpec& spec, double rho, int L,
                          RngStream rng);

// Column height at lattice site i relative to bond 0, |i| < L/2.  Heights
// are the state: occupancies are their negative gradients, and bond 0's
// cumulative current anchors h_0.
long long height(const RingState& s, int i);

// Core event loop, templated on a compiled rate table (rates.hpp) covering
// [occ_lo, occ_hi] and an on_event callback invoked after each applied
// event.  Returns the number of events applied.  On a normal return the
// state time equals t_end; an early max_events stop leaves it at the last
// event time.
template <class Rates, class OnEvent>
std::uint64_t run_ring(RingState& s, const Rates& rates, int occ_lo,
                       int occ_hi, double t_end, const RunOptions& opt,
                       OnEvent&& on_event) {
  if (!(t_end >= s.time)) throw ConfigError("run: t_end is before state time");
  const int L = s.L;
  for (int v : s.occ)
    if (v < occ_lo || v > occ_hi)
      throw ConfigError("run: initial occupancy outside the rate window");

  SumTree tree(static_cast<std::size_t>(L));
  auto bond_total = [&](int b) {
    int y = s.occ[static_cast<std::size_t>(b)];
    int z = s.occ[static_cast<std::size_t>(b + 1 == L ? 0 : b + 1)];
    return rates.prate(y, z) + rates.qrate(y, z);
  };
  for (int b = 0; b < L; ++b)
    tree.set(static_cast<std::size_t>(b), bond_total(b));

  std::uint64_t events = 0, since_rebuild = 0;
  while (events < opt.max_events) {
    double total = tree.total();
    if (!(total > 0.0)) { // absorbing configuration: only time passes
      s.time = t_end;
      return events;
    }
    double dt = s.rng.exponential(total);
    if (s.time + dt > t_end) {
      s.time = t_end; // memoryless: the discarded jump is beyond the horizon
      return events;
    }
    s.time += dt;

    std::size_t b = tree.sample(s.rng.uniform() * total);
    int nb = static_cast<int>(b) + 1 == L ? 0 : static_cast<int>(b) + 1;
    int y = s.occ[b];
    int z = s.occ[static_cast<std::size_t>(nb)];
    int dir =
        s.rng.uniform() * tree.value(b) < rates.prate(y, z) ? +1 : -1;
    if (dir > 0) {
      if (y - 1 < occ_lo || z + 1 > occ_hi)
        throw GuardError("run: occupancy cap breached (raise occ_cap)");
      s.occ[b] = y - 1;
      s.occ[static_cast<std::size_t>(nb)] = z + 1;
      s.bond_current[b] += 1;
    } else {
      if (y + 1 > occ_hi || z - 1 < occ_lo)
        throw GuardError("run: occupancy cap breached (raise occ_cap)");
      s.occ[b] = y + 1;
      s.occ[static_cast<std::size_t>(nb)] = z - 1;
      s.bond_current[b] -= 1;
    }

    // the event touched sites b and nb; exactly three bond rates can change
    int pb = b == 0 ? L - 1 : static_cast<int>(b) - 1;
    tree.set(b, bond_total(static_cast<int>(b)));
    tree.set(static_cast<std::size_t>(pb), bond_total(pb));
    tree.set(static_cast<std::size_t>(nb), bond_total(nb));

    ++events;
    if (++since_rebuild >= opt.rebuild_every) {
      tree.rebuild();
      since_rebuild = 0;
    }
    on_event(std::as_const(s), Event{s.time, static_cast<int>(b), dir});
  }
  return events;
}

// type-erased front end: compiles the spec's rate tables over the simulated
// window and dispatches to run_ring
using Observer = std::function<void(const RingState&, const Event&)>;
std::uint64_t run(RingState& s, const RateSpec& spec, double t_end,
                  std::span<const Observer> observers = {},
                  const RunOptions& opt = {});

} // namespace depsim
