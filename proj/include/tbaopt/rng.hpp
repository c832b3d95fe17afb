#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <string_view>

namespace tbaopt {

inline constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline constexpr std::uint64_t fnv1a64(std::string_view s) noexcept {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

// Maps a user-facing integer seed (0, 1, 2, ...) plus a label such as
// "hybrid/crashy_branin" to a 64-bit master seed.
inline constexpr std::uint64_t master_seed(std::uint64_t seed,
                                           std::string_view label) noexcept {
  return splitmix64(splitmix64(seed) ^ fnv1a64(label));
}

// Portable random stream. The engine is std::mt19937_64, whose output
// sequence is fixed by the standard; all derived draws are implemented here
// rather than through <random> distributions, which are
// implementation-defined.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0) : engine_(seed) {}

  // Independent named sub-stream. Draws on one stream never perturb another.
  static Rng substream(std::uint64_t master, std::string_view name) {
    return Rng(splitmix64(master ^ fnv1a64(name)));
  }

  std::uint64_t next_u64() { return engine_(); }

  // Uniform in [0, 1) with 53 bits of precision.
  double uniform() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Uniform integer in [0, n). Rejection sampling, no modulo bias.
  std::uint64_t below(std::uint64_t n) {
    if (n <= 1) return 0;
    const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % n);
    std::uint64_t x;
    do {
      x = next_u64();
    } while (x >= limit);
    return x % n;
  }

  std::int64_t uniform_int(std::int64_t lo, std::int64_t hi) {
    return lo + static_cast<std::int64_t>(
                    below(static_cast<std::uint64_t>(hi - lo) + 1));
  }

  bool bernoulli(double p) { return uniform() < p; }

  // Box-Muller; the second variate is discarded to keep the stream
  // stateless beyond the engine.
  double normal(double mean = 0.0, double stddev = 1.0) {
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    return mean + stddev * r * std::cos(2.0 * M_PI * u2);
  }

  // Number of trials until first success, support {1, 2, ...}.
  std::int64_t geometric(double mean) {
    if (mean <= 1.0) return 1;
    const double p = 1.0 / mean;
    double u = uniform();
    while (u <= 0.0) u = uniform();
    return 1 + static_cast<std::int64_t>(std::floor(std::log(u) / std::log1p(-p)));
  }

 private:
  std::mt19937_64 engine_;
};

// The four independent streams a run draws from.
struct RngStreams {
  Rng sampling;
  Rng acceptance;
  Rng proposal;
  Rng tpe;

  static RngStreams from_master(std::uint64_t master) {
    return {Rng::substream(master, "sampling"),
            Rng::substream(master, "acceptance"),
            Rng::substream(master, "proposal"),
            Rng::substream(master, "tpe-candidates")};
  }
};

}  // namespace tbaopt
