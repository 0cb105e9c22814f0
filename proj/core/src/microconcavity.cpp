#include "depsim/microconcavity.hpp"

#include "depsim/errors.hpp"

#include <cmath>

namespace depsim {

namespace {

double refresh_den(const std::function<double(int)>& f, int omega, int eta,
                   int a, int b) {
  if (omega <= eta) throw Error("refresh: site holds no discrepancy");
  if (a > b) throw Error("refresh: empty label interval");
  if (b - a + 1 != omega - eta)
    throw Error("refresh: interval size disagrees with the occupancies");
  return f(omega) - f(eta);
}

// every branch weight is a probability exactly when f is nondecreasing
// (and, for the joint split, concave); a violation means a bad rate factor
double checked_prob(double p) {
  if (p < -1e-12 || p > 1.0 + 1e-12)
    throw Error("refresh: branch probability outside [0,1], the rate factor "
                "is not nondecreasing");
  return p;
}

} // namespace

int refresh_y(const std::function<double(int)>& f, int omega, int eta,
              int a, int b, double u) {
  double den = refresh_den(f, omega, eta, a, b);
  if (den <= 0.0) return a;
  double pa = checked_prob((f(omega - 1) - f(eta)) / den);
  return u < pa ? a : b;
}

int refresh_z(const std::function<double(int)>& f, int omega, int eta,
              int a, int b, double u) {
  double den = refresh_den(f, omega, eta, a, b);
  if (den <= 0.0) return b;
  // zero when omega = eta + 1
  double plow = checked_prob((f(omega) - f(eta + 1)) / den);
  return u < plow ? b - 1 : b;
}

std::pair<int, int> refresh_joint(const std::function<double(int)>& f,
                                  int omega, int eta, int a, int b,
                                  double u) {
  double den = refresh_den(f, omega, eta, a, b);
  if (den <= 0.0) return {a, b};
  double p1 = checked_prob((f(omega) - f(eta + 1)) / den);
  double p3 = checked_prob((f(omega) - f(omega - 1)) / den);
  double p2 = 1.0 - p1 - p3; // = (f(eta+1)-f(eta) - (f(omega)-f(omega-1)))/den
  if (p2 < -1e-12)
    throw Error("joint refresh: negative middle weight, f is not concave");
  if (u < p1) return {a, b - 1};
  if (u < p1 + p2) return {a, b};
  return {b, b};
}

DiscreteDist geometric_bound_nu(double r, double tol) {
  if (!(r > 0.0 && r < 1.0))
    throw ConfigError("geometric bound: ratio must lie in (0,1)");
  if (!(tol > 0.0 && tol < 1.0))
    throw ConfigError("geometric bound: bad truncation tolerance");
  int hi = static_cast<int>(std::ceil(std::log(tol) / std::log(r)));
  if (hi < 1) hi = 1;
  std::vector<double> w(static_cast<std::size_t>(hi) + 1);
  double mass = 1.0 - r;
  for (int m = 0; m <= hi; ++m) {
    w[static_cast<std::size_t>(m)] = mass;
    mass *= r;
  }
  return DiscreteDist(0, std::move(w));
}

MicroState::MicroState(CoupledState background, const RateSpec& spec,
                       RngStream refresh_rng)
    : bg_(std::move(background)), spec_(spec), refresh_(refresh_rng) {
  if (spec_.form != RateForm::ZeroRange || spec_.q_coef != 0.0)
    throw ConfigError("micro: needs a totally asymmetric zero range model");
  if (!bg_.has_pair())
    throw ConfigError("micro: background must carry a designated pair");
  if (!bg_.labels.has_label(0))
    throw ConfigError("micro: background pair must hold label 0");
  sy_ = sz_ = bg_.labels.site_of(0);
}

std::uint64_t MicroState::run_to(double t_end, const RunOptions& opt,
                                 const WalkerObserver& obs) {
  auto [lo, hi] = sim_window(spec_.space, opt.occ_cap);
  CompiledRates rates = compile_rates(spec_, lo, hi);
  return std::visit(
      [&](const auto& r) {
        return run_coupled_ring(
            bg_, r, lo, hi, t_end, opt,
            [&](const CoupledState& st, const CoupledEvent& e) {
              on_background_event(st, e);
              if (obs) obs(*this, e);
            });
      },
      rates);
}

void MicroState::on_background_event(const CoupledState& st,
                                     const CoupledEvent& e) {
  const DiscrepancyLabels& lab = st.labels;
  // labels change identity only when renumbered at the cut
  if (!lab.has_label(y_) || !lab.has_label(z_))
    throw GuardError("micro: a walker crossed the ring cut, enlarge the ring");
  const int b = e.bond, nb = b + 1 == st.L ? 0 : b + 1;
  const bool touched_y = sy_ == b || sy_ == nb;
  const bool touched_z = sz_ == b || sz_ == nb;
  // the carrier rides when its own label was the one that moved
  if (e.moved_label == y_) sy_ = lab.site_of(y_);
  if (e.moved_label == z_) sz_ = lab.site_of(z_);
  if (!touched_y && !touched_z) return;

  const auto& eta = st.configs[static_cast<std::size_t>(st.lower_idx)];
  const auto& omg = st.configs[static_cast<std::size_t>(st.upper_idx)];
  if (sy_ == sz_) {
    int lo = lab.lowest_at(sy_), hi = lab.highest_at(sy_);
    auto [ny, nz] =
        refresh_joint(spec_.f, omg[static_cast<std::size_t>(sy_)],
                      eta[static_cast<std::size_t>(sy_)], lo, hi,
                      refresh_.uniform());
    y_ = ny;
    z_ = nz;
  } else {
    if (touched_y)
      y_ = refresh_y(spec_.f, omg[static_cast<std::size_t>(sy_)],
                     eta[static_cast<std::size_t>(sy_)], lab.lowest_at(sy_),
                     lab.highest_at(sy_), refresh_.uniform());
    if (touched_z)
      z_ = refresh_z(spec_.f, omg[static_cast<std::size_t>(sz_)],
                     eta[static_cast<std::size_t>(sz_)], lab.lowest_at(sz_),
                     lab.highest_at(sz_), refresh_.uniform());
  }
  if (y_ > z_) throw Error("micro: walker order broke");
}

FourView four_process_view(const MicroState& m) {
  const CoupledState& s = m.background();
  FourView v;
  v.eta = s.configs[static_cast<std::size_t>(s.lower_idx)];
  v.omega = s.configs[static_cast<std::size_t>(s.upper_idx)];
  v.eta_plus = v.eta;
  v.omega_minus = v.omega;
  v.q_site = m.site_y();
  v.q_eta_site = m.site_z();
  v.eta_plus[static_cast<std::size_t>(v.q_eta_site)] += 1;
  v.omega_minus[static_cast<std::size_t>(v.q_site)] -= 1;
  return v;
}

} // namespace depsim
