#pragma once

#include <cstdint>
#include <random>

namespace rmader {

// splitmix64, used to expand one master seed into independent stream seeds.
inline std::uint64_t splitmix64(std::uint64_t& state) {
  state += 0x9e3779b97f4a7c15ULL;
  std::uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Deterministic RNG wrapper. Distribution helpers are hand-rolled so results
/// depend only on the mt19937_64 stream, not on the standard library build.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : eng_(seed) {}

  /// Independent child stream: same (seed, stream) always gives the same Rng.
  static Rng stream(std::uint64_t master, std::uint64_t stream_id) {
    std::uint64_t s = master ^ (0x6a09e667f3bcc909ULL + stream_id * 0x9e3779b97f4a7c15ULL);
    std::uint64_t a = splitmix64(s);
    std::uint64_t b = splitmix64(s);
    return Rng(a ^ (b << 1));
  }

  double uniform01() {
    return static_cast<double>(eng_() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  /// Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n) {
    // modulo bias is irrelevant for the scenario-layout use cases here
    return n == 0 ? 0 : eng_() % n;
  }

 private:
  std::mt19937_64 eng_;
};

}  // namespace rmader
