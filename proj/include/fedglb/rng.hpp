#pragma once

#include <cmath>
#include <cstdint>

namespace fedglb {

// Counter-based random streams. One master seed expands into independent
// substreams keyed by (purpose, t, i); the k-th draw of a substream is a pure
// function of (seed, purpose, t, i, k), so replaying any part of a simulation
// in any order reproduces the same values bit for bit.
namespace rng {

enum class Purpose : std::uint64_t {
  theta_star = 1,
  arm_set = 2,
  reward = 3,
  dataset_draw = 4,
  test = 900,
};

// splitmix64 finalizer
inline std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

class Stream {
 public:
  Stream(std::uint64_t seed, Purpose purpose, std::uint64_t t, std::uint64_t i)
      : key_(derive_key(seed, static_cast<std::uint64_t>(purpose), t, i)) {}

  std::uint64_t next_u64() { return mix64(key_ + 0x9e3779b97f4a7c15ULL * ++counter_); }

  // uniform in [0, 1)
  double next_uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  // uniform in (0, 1]; safe to feed into log()
  double next_uniform_pos() { return (static_cast<double>(next_u64() >> 11) + 1.0) * 0x1.0p-53; }

  double next_uniform(double lo, double hi) { return lo + (hi - lo) * next_uniform(); }

  // Box-Muller; consumes two draws per pair, caches the spare.
  double next_gaussian() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    const double u1 = next_uniform_pos();
    const double u2 = next_uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 6.283185307179586476925286766559 * u2;
    spare_ = r * std::sin(a);
    has_spare_ = true;
    return r * std::cos(a);
  }

  bool next_bernoulli(double p) { return next_uniform() < p; }

  // unbiased-enough index draw via multiply-shift; deterministic across platforms
  std::uint64_t next_index(std::uint64_t n) {
    return static_cast<std::uint64_t>(
        (static_cast<unsigned __int128>(next_u64()) * n) >> 64);
  }

 private:
  static std::uint64_t derive_key(std::uint64_t seed, std::uint64_t purpose,
                                  std::uint64_t t, std::uint64_t i) {
    std::uint64_t k = mix64(seed);
    k = mix64(k ^ purpose);
    k = mix64(k ^ t);
    k = mix64(k ^ i);
    return k;
  }

  std::uint64_t key_;
  std::uint64_t counter_ = 0;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace rng

// FNV-1a, used for arm-set and corpus checksums.
inline std::uint64_t fnv1a_init() { return 0xcbf29ce484222325ULL; }

inline void fnv1a_add(std::uint64_t& h, const void* data, std::size_t n) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (std::size_t k = 0; k < n; ++k) {
    h ^= p[k];
    h *= 0x100000001b3ULL;
  }
}

inline void fnv1a_add_double(std::uint64_t& h, double v) { fnv1a_add(h, &v, sizeof(v)); }

}  // namespace fedglb
