#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace depsim {

inline std::uint64_t splitmix64(std::uint64_t& state) {
  state += 0x9e3779b97f4a7c15ull;
  std::uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

// Replicate-indexed random stream. Streams are derived from
// (master_seed, stream_index) so replicate r always sees the same draws
// no matter which worker runs it or in which order.
class RngStream {
 public:
  RngStream() : RngStream(0, 0) {}
  RngStream(std::uint64_t master_seed, std::uint64_t stream_index) {
    std::uint64_t s = master_seed;
    (void)splitmix64(s);
    s ^= 0x6a09e667f3bcc909ull + stream_index * 0x9e3779b97f4a7c15ull;
    std::seed_seq seq{static_cast<std::uint32_t>(splitmix64(s)),
                      static_cast<std::uint32_t>(splitmix64(s)),
                      static_cast<std::uint32_t>(splitmix64(s)),
                      static_cast<std::uint32_t>(splitmix64(s)),
                      static_cast<std::uint32_t>(splitmix64(s)),
                      static_cast<std::uint32_t>(splitmix64(s))};
    eng_.seed(seq);
  }

  std::uint64_t raw() { return eng_(); }

  // uniform on [0, 1) with 53-bit resolution; never returns 1.0
  double uniform() { return (eng_() >> 11) * 0x1.0p-53; }

  // exponential with given rate; finite because uniform() < 1
  double exponential(double rate) { return -std::log1p(-uniform()) / rate; }

  // uniform integer in [0, n)
  std::uint64_t below(std::uint64_t n) {
    // multiply-shift; bias is < 2^-64 * n, irrelevant for n << 2^32
    return static_cast<std::uint64_t>(
        (static_cast<unsigned __int128>(eng_()) * n) >> 64);
  }

  bool bernoulli(double prob) { return uniform() < prob; }

 private:
  std::mt19937_64 eng_;
};

} // namespace depsim
