#pragma once

#include <cstdint>
#include <functional>
#include <initializer_list>
#include <limits>

namespace arp {

// xoshiro256++ seeded through splitmix64. A stream is identified by the master
// seed plus a short tuple of indices (path, replicate, stage ...), so every
// path owns its noise regardless of how work is split between threads.
class Rng {
 public:
  using result_type = std::uint64_t;

  explicit Rng(std::uint64_t seed = 0) { reseed(seed); }
  Rng(std::uint64_t seed, std::initializer_list<std::uint64_t> stream);

  void reseed(std::uint64_t seed);

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }
  result_type operator()();

  double uniform();  // in [0, 1)
  std::uint64_t below(std::uint64_t n);  // uniform integer in [0, n)

 private:
  std::uint64_t s_[4];
};

// Standard normal draws (ziggurat via Boost.Random).
class NormalSource {
 public:
  explicit NormalSource(Rng rng);
  double operator()();
  Rng& engine() { return rng_; }

 private:
  Rng rng_;
};

std::uint64_t splitmix64(std::uint64_t& state);

// Runs body(begin, end) over [0, n) split into contiguous chunks, one per worker.
void parallel_for(std::size_t n, unsigned threads,
                  const std::function<void(std::size_t, std::size_t)>& body);

unsigned resolve_threads(unsigned requested);

}  // namespace arp
