#include "depsim/coupling.hpp"

#include "depsim/measures.hpp"

#include <map>
#include <utility>

namespace depsim {

void DiscrepancyLabels::init(std::span<const int> d, int origin) {
  const int L = static_cast<int>(d.size());
  if (L < 2) throw ConfigError("labels: need at least two sites");
  if (origin < 0 || origin >= L) throw ConfigError("labels: origin off ring");
  if (d[static_cast<std::size_t>(origin)] <= 0)
    throw ConfigError("labels: origin site holds no discrepancy");

  L_ = L;
  cut_ = (origin + L / 2) % L;
  count_.assign(static_cast<std::size_t>(L), 0);
  first_.assign(static_cast<std::size_t>(L), 0);
  site_of_.clear();
  cut_crossings_ = 0;

  // number left to right starting just right of the cut, then shift so the
  // lowest label at the origin is 0
  int next = 0, origin_first = 0;
  for (int step = 1; step <= L; ++step) {
    int s = (cut_ + step) % L;
    int m = d[static_cast<std::size_t>(s)];
    if (m < 0) throw ConfigError("labels: negative multiplicity");
    if (s == origin) origin_first = next;
    count_[static_cast<std::size_t>(s)] = m;
    first_[static_cast<std::size_t>(s)] = next;
    next += m;
  }
  total_ = next;
  for (int s = 0; s < L; ++s) first_[static_cast<std::size_t>(s)] -= origin_first;
  min_label_ = -origin_first;
  max_label_ = total_ - 1 - origin_first;
  for (int s = 0; s < L; ++s)
    for (int j = 0; j < count_[static_cast<std::size_t>(s)]; ++j)
      site_of_[first_[static_cast<std::size_t>(s)] + j] = s;
}

int DiscrepancyLabels::lowest_at(int site) const {
  if (count_[static_cast<std::size_t>(site)] == 0)
    throw Error("labels: site is empty");
  return first_[static_cast<std::size_t>(site)];
}

int DiscrepancyLabels::highest_at(int site) const {
  if (count_[static_cast<std::size_t>(site)] == 0)
    throw Error("labels: site is empty");
  return first_[static_cast<std::size_t>(site)] +
         count_[static_cast<std::size_t>(site)] - 1;
}

bool DiscrepancyLabels::has_label(int label) const {
  return site_of_.count(label) != 0;
}

int DiscrepancyLabels::site_of(int label) const {
  auto it = site_of_.find(label);
  if (it == site_of_.end()) throw Error("labels: no such label");
  return it->second;
}

int DiscrepancyLabels::move_right(int bond) {
  const int b = bond, nb = b + 1 == L_ ? 0 : b + 1;
  if (count_[static_cast<std::size_t>(b)] <= 0)
    throw Error("labels: move from an empty site");
  int label = first_[static_cast<std::size_t>(b)] +
              count_[static_cast<std::size_t>(b)] - 1;
  --count_[static_cast<std::size_t>(b)];
  site_of_.erase(label);
  int placed = label;
  if (b == cut_) {
    // wrapping from the right end of the axis to the left end
    if (label != max_label_) throw Error("labels: interval broke at the cut");
    placed = --min_label_;
    --max_label_;
    ++cut_crossings_;
  }
  if (count_[static_cast<std::size_t>(nb)] > 0 &&
      first_[static_cast<std::size_t>(nb)] != placed + 1)
    throw Error("labels: destination interval not adjacent");
  first_[static_cast<std::size_t>(nb)] = placed;
  ++count_[static_cast<std::size_t>(nb)];
  site_of_[placed] = nb;
  return placed;
}

int DiscrepancyLabels::move_left(int bond) {
  const int b = bond, nb = b + 1 == L_ ? 0 : b + 1;
  if (count_[static_cast<std::size_t>(nb)] <= 0)
    throw Error("labels: move from an empty site");
  int label = first_[static_cast<std::size_t>(nb)];
  --count_[static_cast<std::size_t>(nb)];
  ++first_[static_cast<std::size_t>(nb)];
  site_of_.erase(label);
  int placed = label;
  if (b == cut_) {
    if (label != min_label_) throw Error("labels: interval broke at the cut");
    placed = ++max_label_;
    ++min_label_;
    ++cut_crossings_;
  }
  if (count_[static_cast<std::size_t>(b)] > 0) {
    if (first_[static_cast<std::size_t>(b)] +
            count_[static_cast<std::size_t>(b)] != placed)
      throw Error("labels: destination interval not adjacent");
  } else {
    first_[static_cast<std::size_t>(b)] = placed;
  }
  ++count_[static_cast<std::size_t>(b)];
  site_of_[placed] = b;
  return placed;
}

namespace {

CoupledState make_coupled(const RateSpec& spec,
                          std::vector<std::vector<int>> configs,
                          RngStream rng) {
  const std::size_t n = configs.size();
  if (n < 2 || n > 4)
    throw ConfigError("couple: between two and four processes");
  const std::size_t L = configs[0].size();
  if (L < 2) throw ConfigError("couple: need at least two sites");
  for (const auto& cfg : configs) {
    if (cfg.size() != L) throw ConfigError("couple: ring sizes differ");
    for (int v : cfg)
      if (v < spec.space.omega_min || v > spec.space.omega_max)
        throw ConfigError("couple: occupancy outside the state space");
  }
  CoupledState s;
  s.n = static_cast<int>(n);
  s.L = static_cast<int>(L);
  s.configs = std::move(configs);
  s.bond_currents.assign(n, std::vector<long long>(L, 0));
  s.rng = rng;
  return s;
}

} // namespace

CoupledState couple(const RateSpec& spec,
                    std::vector<std::vector<int>> configs, RngStream rng) {
  return make_coupled(spec, std::move(configs), rng);
}

CoupledState couple_ordered(const RateSpec& spec,
                            std::vector<std::vector<int>> configs,
                            int lower_idx, int upper_idx, int origin,
                            RngStream rng) {
  CoupledState s = make_coupled(spec, std::move(configs), rng);
  if (lower_idx < 0 || lower_idx >= s.n || upper_idx < 0 || upper_idx >= s.n ||
      lower_idx == upper_idx)
    throw ConfigError("couple: bad pair indices");
  std::vector<int> d(static_cast<std::size_t>(s.L));
  const auto& lo = s.configs[static_cast<std::size_t>(lower_idx)];
  const auto& up = s.configs[static_cast<std::size_t>(upper_idx)];
  for (int i = 0; i < s.L; ++i) {
    d[static_cast<std::size_t>(i)] = up[static_cast<std::size_t>(i)] -
                                     lo[static_cast<std::size_t>(i)];
    if (d[static_cast<std::size_t>(i)] < 0)
      throw ConfigError("couple: pair is not sitewise ordered");
  }
  s.lower_idx = lower_idx;
  s.upper_idx = upper_idx;
  s.labels.init(d, origin);
  return s;
}

CoupledState make_discrepancy_pair(const RateSpec& spec, double rho, int L,
                                   RngStream rng) {
  if (L < 4) throw ConfigError("discrepancy pair: ring too small");
  TiltedMeasure m = tilted(spec, theta_of_density(spec, rho));
  SeedMeasure seed = seed_measure(spec, rho);
  std::vector<int> lower(static_cast<std::size_t>(L)),
      upper(static_cast<std::size_t>(L));
  for (int i = 1; i < L; ++i) {
    int v = m.dist.sample(rng);
    lower[static_cast<std::size_t>(i)] = v;
    upper[static_cast<std::size_t>(i)] = v;
  }
  int s0 = seed.dist.sample(rng);
  lower[0] = s0;
  upper[0] = s0 + 1;
  return couple_ordered(spec, {std::move(lower), std::move(upper)}, 0, 1, 0,
                        rng);
}

CoupledState make_two_density_pair(const RateSpec& spec,
                                   std::span<const double> lambda,
                                   std::span<const double> rho, int L,
                                   RngStream rng) {
  if (L < 4) throw ConfigError("two-density pair: ring too small");
  if (static_cast<int>(lambda.size()) != L ||
      static_cast<int>(rho.size()) != L)
    throw ConfigError("two-density pair: density profiles must cover the ring");
  for (int i = 0; i < L; ++i)
    if (!(lambda[static_cast<std::size_t>(i)] <=
          rho[static_cast<std::size_t>(i)]))
      throw ConfigError("two-density pair: lower density exceeds upper");

  std::vector<int> lower(static_cast<std::size_t>(L)),
      upper(static_cast<std::size_t>(L));
  std::map<std::pair<double, double>, MonotoneCoupling> cache;
  for (int i = 1; i < L; ++i) {
    std::pair<double, double> key{lambda[static_cast<std::size_t>(i)],
                                  rho[static_cast<std::size_t>(i)]};
    auto it = cache.find(key);
    if (it == cache.end()) {
      TiltedMeasure ml = tilted(spec, theta_of_density(spec, key.first));
      TiltedMeasure mr = tilted(spec, theta_of_density(spec, key.second));
      it = cache
               .emplace(key, monotone_couple(ml.dist, mr.dist,
                                             Strictness::Weak))
               .first;
    }
    auto [y, z] = it->second.sample(rng);
    lower[static_cast<std::size_t>(i)] = y;
    upper[static_cast<std::size_t>(i)] = z;
  }
  // origin: lower seed coupled with the +1 translate of the upper seed,
  // so the pair is strictly split there and label 0 exists
  SeedMeasure sl = seed_measure(spec, lambda[0]);
  SeedMeasure sr = seed_measure(spec, rho[0]);
  MonotoneCoupling strict =
      monotone_couple(sl.dist, shifted(sr.dist, 1), Strictness::Strict);
  auto [y0, z0] = strict.sample(rng);
  lower[0] = y0;
  upper[0] = z0;
  return couple_ordered(spec, {std::move(lower), std::move(upper)}, 0, 1, 0,
                        rng);
}

CoupledState make_two_density_pair(const RateSpec& spec, double lambda,
                                   double rho, int L, RngStream rng) {
  std::vector<double> lam(static_cast<std::size_t>(L), lambda);
  std::vector<double> rh(static_cast<std::size_t>(L), rho);
  return make_two_density_pair(spec, lam, rh, L, rng);
}

long long coupled_height(const CoupledState& s, int k, int i) {
  if (k < 0 || k >= s.n) throw ConfigError("height: no such process");
  const int L = s.L;
  if (std::abs(i) * 2 >= L)
    throw ConfigError("height: site beyond half the ring");
  const auto& occ = s.configs[static_cast<std::size_t>(k)];
  long long h = s.bond_currents[static_cast<std::size_t>(k)][0];
  if (i > 0)
    for (int j = 1; j <= i; ++j) h -= occ[static_cast<std::size_t>(j)];
  else
    for (int j = i + 1; j <= 0; ++j)
      h += occ[static_cast<std::size_t>((j % L + L) % L)];
  return h;
}

bool ordered(const CoupledState& s, int lower, int upper) {
  if (lower < 0 || lower >= s.n || upper < 0 || upper >= s.n)
    throw ConfigError("ordered: no such process");
  const auto& lo = s.configs[static_cast<std::size_t>(lower)];
  const auto& up = s.configs[static_cast<std::size_t>(upper)];
  for (int i = 0; i < s.L; ++i)
    if (lo[static_cast<std::size_t>(i)] > up[static_cast<std::size_t>(i)])
      return false;
  return true;
}

std::uint64_t run_coupled(CoupledState& s, const RateSpec& spec, double t_end,
                          std::span<const CoupledObserver> observers,
                          const RunOptions& opt) {
  auto [lo, hi] = sim_window(spec.space, opt.occ_cap);
  CompiledRates rates = compile_rates(spec, lo, hi);
  return std::visit(
      [&](const auto& r) {
        if (observers.empty())
          return run_coupled_ring(s, r, lo, hi, t_end, opt,
                                  [](const CoupledState&, const CoupledEvent&) {});
        return run_coupled_ring(s, r, lo, hi, t_end, opt,
                                [&](const CoupledState& st,
                                    const CoupledEvent& e) {
                                  for (const auto& ob : observers) ob(st, e);
                                });
      },
      rates);
}

std::vector<long long> track_Q(CoupledState& s, const RateSpec& spec,
                               std::span<const double> grid,
                               const RunOptions& opt,
                               std::uint64_t* events_out) {
  if (!s.has_pair() || s.labels.total() != 1)
    throw ConfigError("track_Q: need a designated pair with one discrepancy");
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (grid[i] < s.time)
      throw ConfigError("track_Q: grid time before state time");
    if (i > 0 && grid[i] < grid[i - 1])
      throw ConfigError("track_Q: grid must be nondecreasing");
  }
  auto [lo, hi] = sim_window(spec.space, opt.occ_cap);
  CompiledRates rates = compile_rates(spec, lo, hi);

  std::vector<long long> out;
  out.reserve(grid.size());
  long long q = 0;
  std::uint64_t events = 0;
  std::visit(
      [&](const auto& r) {
        auto on_event = [&](const CoupledState&, const CoupledEvent& e) {
          if (e.moved_label != CoupledEvent::kNoLabel) q += e.label_step;
        };
        for (double t : grid) {
          events += run_coupled_ring(s, r, lo, hi, t, opt, on_event);
          out.push_back(q);
        }
      },
      rates);
  if (events_out) *events_out += events;
  return out;
}

} // namespace depsim
