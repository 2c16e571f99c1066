#pragma once

#include <cmath>
#include <cstdint>

namespace bbmtraps {

/**
 * Seeded counter-style PRNG stream (xoshiro256++ core, splitmix64 seeding).
 *
 * Every stochastic routine in the library takes an explicit RngStream, and
 * ensembles derive one independent stream per run from (seed, run index),
 * so results are reproducible bit-for-bit regardless of thread count.
 */
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed, std::uint64_t stream = 0) {
    // splitmix64 chain over (seed, stream) fills the state; never all-zero.
    std::uint64_t x = seed + 0x9E3779B97F4A7C15ULL * (stream + 1);
    for (auto& w : state_) w = splitmix64(x);
  }

  std::uint64_t next_u64() {
    const std::uint64_t result = rotl(state_[0] + state_[3], 23) + state_[0];
    const std::uint64_t t = state_[1] << 17;
    state_[2] ^= state_[0];
    state_[3] ^= state_[1];
    state_[1] ^= state_[2];
    state_[0] ^= state_[3];
    state_[2] ^= t;
    state_[3] = rotl(state_[3], 45);
    return result;
  }

  /// Uniform double in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  /// Uniform double in (0, 1]; safe as a log() argument.
  double uniform_pos() { return 1.0 - uniform(); }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  bool bernoulli(double p) { return uniform() < p; }

  double exponential(double rate) { return -std::log(uniform_pos()) / rate; }

  /// Standard normal via Marsaglia polar; second variate cached.
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u, v, s;
    do {
      u = 2.0 * uniform() - 1.0;
      v = 2.0 * uniform() - 1.0;
      s = u * u + v * v;
    } while (s >= 1.0 || s == 0.0);
    const double c = std::sqrt(-2.0 * std::log(s) / s);
    spare_ = v * c;
    has_spare_ = true;
    return u * c;
  }

  double normal(double mean, double stddev) { return mean + stddev * normal(); }

  /**
   * Poisson(mean) by Knuth's product method. Means above the chunk size are
   * split into exact independent Poisson summands to avoid exp() underflow.
   */
  long poisson(double mean) {
    long n = 0;
    while (mean > 256.0) {
      n += poisson_knuth(256.0);
      mean -= 256.0;
    }
    return n + poisson_knuth(mean);
  }

 private:
  static std::uint64_t splitmix64(std::uint64_t& x) {
    std::uint64_t z = (x += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  static std::uint64_t rotl(std::uint64_t x, int k) {
    return (x << k) | (x >> (64 - k));
  }

  long poisson_knuth(double mean) {
    if (mean <= 0.0) return 0;
    const double floor = std::exp(-mean);
    long k = 0;
    double prod = uniform_pos();
    while (prod > floor) {
      ++k;
      prod *= uniform_pos();
    }
    return k;
  }

  std::uint64_t state_[4];
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace bbmtraps
