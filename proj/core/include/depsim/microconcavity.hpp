#pragma once
// Label walkers riding the ordered discrepancies of a coupled pair of
// totally asymmetric zero range processes with concave nondecreasing f.
// The walkers y <= z are label-valued; after every background event that
// changes an occupancy at a walker's site the walker redraws its value
// from the endpoints of its site's label interval, jointly when the two
// walkers share a site.  The carriers X_y and X_z then behave as the
// second class particles of the single-discrepancy pairs (w - d_{X_y}, w)
// and (e, e + d_{X_z}) respectively, while staying ordered pathwise.

#include "depsim/coupling.hpp"
#include "depsim/measures.hpp"
#include "depsim/rates.hpp"

#include <cstdint>
#include <functional>
#include <utility>
#include <vector>

namespace depsim {

// Single-step refresh laws.  All take post-event occupancies at the
// walker's site (omega > eta there, since a label is present) and the
// label interval endpoints a <= b; u is one uniform on [0,1).  A zero
// denominator f(omega) = f(eta) degenerates to the deterministic value
// written in each contract.

// new y: a with pr (f(omega-1) - f(eta)) / (f(omega) - f(eta)), else b;
// a when the denominator vanishes
int refresh_y(const std::function<double(int)>& f, int omega, int eta,
              int a, int b, double u);

// new z: b-1 with pr (f(omega) - f(eta+1)) / (f(omega) - f(eta)), else b;
// b when the denominator vanishes (the b-1 branch has zero probability
// when omega = eta + 1, so b-1 is never produced out of range)
int refresh_z(const std::function<double(int)>& f, int omega, int eta,
              int a, int b, double u);

// joint redraw used when both walkers land in one interval, splitting one
// uniform over (a, b-1), (a, b), (b, b) in this order; the middle weight
// is nonnegative exactly when f is concave on [eta, omega], and a negative
// value throws.  Marginals agree with refresh_y and refresh_z.
std::pair<int, int> refresh_joint(const std::function<double(int)>& f,
                                  int omega, int eta, int a, int b, double u);

// the geometric label bound: nu(m) = (1-r) r^m for m >= 0, truncated once
// the tail drops below tol; tails obey nu{>= m} = r^m
DiscreteDist geometric_bound_nu(double r, double tol = 1e-15);

class MicroState;
using WalkerObserver =
    std::function<void(const MicroState&, const CoupledEvent&)>;

// Drives the walkers over a coupled background.  The background must be a
// designated ordered pair carrying label 0 (both walkers start there) of
// a totally asymmetric zero range model.  Walker refreshes draw from their
// own stream, so the background trajectory for a given seed is the same
// with or without walkers on top.
class MicroState {
 public:
  MicroState(CoupledState background, const RateSpec& spec,
             RngStream refresh_rng);

  const CoupledState& background() const { return bg_; }
  double time() const { return bg_.time; }
  int y() const { return y_; }
  int z() const { return z_; }
  int site_y() const { return sy_; } // carrier X_y
  int site_z() const { return sz_; } // carrier X_z

  // advance the background to t_end, refreshing walkers along the way;
  // obs (if set) fires after each event once the walkers are updated
  std::uint64_t run_to(double t_end, const RunOptions& opt = {},
                       const WalkerObserver& obs = {});

 private:
  void on_background_event(const CoupledState& st, const CoupledEvent& e);

  CoupledState bg_;
  RateSpec spec_;
  RngStream refresh_;
  int y_ = 0, z_ = 0;
  int sy_ = 0, sz_ = 0;
};

// the four sandwiched processes induced by the walkers:
// eta <= eta_plus <= omega and eta <= omega_minus <= omega sitewise
struct FourView {
  std::vector<int> eta, eta_plus, omega_minus, omega;
  int q_site = 0;     // X_y, the discrepancy of (omega_minus, omega)
  int q_eta_site = 0; // X_z, the discrepancy of (eta, eta_plus)
};

FourView four_process_view(const MicroState& m);

} // namespace depsim
