#pragma once
// Basic coupling of up to four deposition processes sharing one ring and one
// event clock.  Per bond and move type the clock runs at the maximum rate
// over the processes, and a single uniform fires exactly the processes whose
// own rate exceeds it; marginally each process sees its own generator, and
// the joint motion shares jumps as much as possible.  For one designated
// ordered pair the upper-minus-lower discrepancies carry ordered labels.

#include "depsim/errors.hpp"
#include "depsim/rates.hpp"
#include "depsim/rng.hpp"
#include "depsim/simulator.hpp"
#include "depsim/sum_tree.hpp"

#include <climits>
#include <cstdint>
#include <functional>
#include <span>
#include <unordered_map>
#include <utility>
#include <vector>

namespace depsim {

// Discrepancy labels, nondecreasing from left to right along the ring cut
// open at the antipode of the origin site.  Each site holds a contiguous
// interval of consecutive integers, so a move across a bond shifts one
// interval endpoint: the highest label of the source site moves on a right
// jump, the lowest on a left jump, and the global ordering is preserved.
// A label crossing the cut is renumbered to the free end of the label axis,
// which keeps every interval consistent but changes that label's identity;
// callers tracking individual labels must keep them away from the cut and
// can watch cut_crossings().
class DiscrepancyLabels {
 public:
  DiscrepancyLabels() = default;

  // d[i] = discrepancy multiplicity at site i; the origin must hold at
  // least one, and its lowest label becomes 0
  void init(std::span<const int> d, int origin);

  bool empty() const { return total_ == 0; }
  int total() const { return total_; }
  int min_label() const { return min_label_; }
  int max_label() const { return max_label_; }
  int count_at(int site) const { return count_[static_cast<std::size_t>(site)]; }
  int lowest_at(int site) const;
  int highest_at(int site) const;
  bool has_label(int label) const;
  int site_of(int label) const;
  int cut_site() const { return cut_; }
  long long cut_crossings() const { return cut_crossings_; }

  // a discrepancy moved across the bond (right: site bond -> bond+1);
  // returns the moved label, after any cut renumbering
  int move_right(int bond);
  int move_left(int bond);

 private:
  int L_ = 0, cut_ = 0, total_ = 0;
  int min_label_ = 0, max_label_ = -1;
  long long cut_crossings_ = 0;
  std::vector<int> count_, first_;
  std::unordered_map<int, int> site_of_;
};

struct CoupledEvent {
  static constexpr int kNoLabel = INT_MIN;
  double time = 0.0;
  int bond = 0;
  int direction = 0;          // +1 deposition, -1 removal
  unsigned fired = 0;         // bit k set: process k transferred a unit
  int moved_label = kNoLabel; // pair discrepancy that moved, if any
  int label_step = 0;         // +1 moved right, -1 moved left
};

struct CoupledState {
  int n = 0;
  int L = 0;
  std::vector<std::vector<int>> configs;
  std::vector<std::vector<long long>> bond_currents;
  double time = 0.0;
  RngStream rng;

  int lower_idx = -1, upper_idx = -1; // designated ordered pair when >= 0
  DiscrepancyLabels labels;
  bool has_pair() const { return lower_idx >= 0; }
};

// plain coupling, no designated pair, no label tracking
CoupledState couple(const RateSpec& spec,
                    std::vector<std::vector<int>> configs, RngStream rng);

// coupling with a designated sitewise-ordered pair; discrepancy labels are
// initialized from the difference with label 0 at the origin site
CoupledState couple_ordered(const RateSpec& spec,
                            std::vector<std::vector<int>> configs,
                            int lower_idx, int upper_idx, int origin,
                            RngStream rng);

// the single-discrepancy stationary pair: one shared i.i.d. stationary
// background, the lower process drawing site 0 from the seed law and the
// upper process holding one extra unit there
CoupledState make_discrepancy_pair(const RateSpec& spec, double rho, int L,
                                   RngStream rng);

// two-density pair: sitewise monotone coupling of the stationary laws at
// densities lambda[i] <= rho[i], strict at site 0 (one guaranteed
// discrepancy, label 0)
CoupledState make_two_density_pair(const RateSpec& spec,
                                   std::span<const double> lambda,
                                   std::span<const double> rho, int L,
                                   RngStream rng);
CoupledState make_two_density_pair(const RateSpec& spec, double lambda,
                                   double rho, int L, RngStream rng);

// per-process column height, as simulator height()
long long coupled_height(const CoupledState& s, int k, int i);

// sitewise order of two member configurations
bool ordered(const CoupledState& s, int lower, int upper);

// core coupled event loop; same options semantics as run_ring
template <class Rates, class OnEvent>
std::uint64_t run_coupled_ring(CoupledState& s, const Rates& rates,
                               int occ_lo, int occ_hi, double t_end,
                               const RunOptions& opt, OnEvent&& on_event) {
  if (!(t_end >= s.time)) throw ConfigError("run: t_end is before state time");
  const int L = s.L;
  const int n = s.n;
  for (const auto& cfg : s.configs)
    for (int v : cfg)
      if (v < occ_lo || v > occ_hi)
        throw ConfigError("run: occupancy outside the rate window");

  SumTree tree(2 * static_cast<std::size_t>(L));
  auto move_max = [&](int b, bool dep) {
    int nb = b + 1 == L ? 0 : b + 1;
    double m = 0.0;
    for (int k = 0; k < n; ++k) {
      int y = s.configs[static_cast<std::size_t>(k)][static_cast<std::size_t>(b)];
      int z = s.configs[static_cast<std::size_t>(k)][static_cast<std::size_t>(nb)];
      m = std::max(m, dep ? rates.prate(y, z) : rates.qrate(y, z));
    }
    return m;
  };
  auto set_bond = [&](int b) {
    tree.set(2 * static_cast<std::size_t>(b), move_max(b, true));
    tree.set(2 * static_cast<std::size_t>(b) + 1, move_max(b, false));
  };
  for (int b = 0; b < L; ++b) set_bond(b);

  std::uint64_t events = 0, since_rebuild = 0;
  while (events < opt.max_events) {
    double total = tree.total();
    if (!(total > 0.0)) {
      s.time = t_end;
      return events;
    }
    double dt = s.rng.exponential(total);
    if (s.time + dt > t_end) {
      s.time = t_end;
      return events;
    }
    s.time += dt;

    std::size_t leaf = tree.sample(s.rng.uniform() * total);
    int b = static_cast<int>(leaf / 2);
    bool dep = (leaf % 2) == 0;
    int nb = b + 1 == L ? 0 : b + 1;

    double r[4];
    double rmax = 0.0;
    for (int k = 0; k < n; ++k) {
      int y = s.configs[static_cast<std::size_t>(k)][static_cast<std::size_t>(b)];
      int z = s.configs[static_cast<std::size_t>(k)][static_cast<std::size_t>(nb)];
      r[k] = dep ? rates.prate(y, z) : rates.qrate(y, z);
      rmax = std::max(rmax, r[k]);
    }
    double x = s.rng.uniform() * rmax; // fire the suffix set above x
    unsigned fired = 0;
    for (int k = 0; k < n; ++k)
      if (r[k] > x) fired |= 1u << k;

    int dy = dep ? -1 : +1; // occupancy change at site b; nb gets -dy
    for (int k = 0; k < n; ++k) {
      if (!(fired & (1u << k))) continue;
      auto& cfg = s.configs[static_cast<std::size_t>(k)];
      int y = cfg[static_cast<std::size_t>(b)] + dy;
      int z = cfg[static_cast<std::size_t>(nb)] - dy;
      if (y < occ_lo || y > occ_hi || z < occ_lo || z > occ_hi)
        throw GuardError("run: occupancy cap breached (raise occ_cap)");
      cfg[static_cast<std::size_t>(b)] = y;
      cfg[static_cast<std::size_t>(nb)] = z;
      s.bond_currents[static_cast<std::size_t>(k)][static_cast<std::size_t>(b)] +=
          dep ? 1 : -1;
    }

    CoupledEvent ev{s.time, b, dep ? +1 : -1, fired, CoupledEvent::kNoLabel, 0};
    if (s.has_pair()) {
      bool lo_fired = (fired >> s.lower_idx) & 1u;
      bool up_fired = (fired >> s.upper_idx) & 1u;
      if (lo_fired != up_fired) {
        // exactly one member moved a unit, so one discrepancy changed sides
        bool disc_right = dep ? up_fired : lo_fired;
        ev.moved_label =
            disc_right ? s.labels.move_right(b) : s.labels.move_left(b);
        ev.label_step = disc_right ? +1 : -1;
      }
      const auto& lo_cfg = s.configs[static_cast<std::size_t>(s.lower_idx)];
      const auto& up_cfg = s.configs[static_cast<std::size_t>(s.upper_idx)];
      if (lo_cfg[static_cast<std::size_t>(b)] > up_cfg[static_cast<std::size_t>(b)] ||
          lo_cfg[static_cast<std::size_t>(nb)] > up_cfg[static_cast<std::size_t>(nb)])
        throw Error("coupled run: sitewise order of the pair broke");
    }

    set_bond(b);
    set_bond(b == 0 ? L - 1 : b - 1);
    set_bond(nb);

    ++events;
    if (++since_rebuild >= opt.rebuild_every) {
      tree.rebuild();
      since_rebuild = 0;
    }
    on_event(std::as_const(s), ev);
  }
  return events;
}

using CoupledObserver =
    std::function<void(const CoupledState&, const CoupledEvent&)>;
std::uint64_t run_coupled(CoupledState& s, const RateSpec& spec, double t_end,
                          std::span<const CoupledObserver> observers = {},
                          const RunOptions& opt = {});

// Evolve the pair to each grid time (nondecreasing, starting at or after the
// state time) and record the unwrapped displacement of the unique
// discrepancy.  Requires a designated pair with exactly one label.  If
// events_out is given the applied event count is added to it.
std::vector<long long> track_Q(CoupledState& s, const RateSpec& spec,
                               std::span<const double> grid,
                               const RunOptions& opt = {},
                               std::uint64_t* events_out = nullptr);

} // namespace depsim
