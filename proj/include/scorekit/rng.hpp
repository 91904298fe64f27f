#pragma once

// Counter-based splittable random numbers: every draw is a pure function of
// (seed, stream, step, slot), so parallel consumers produce identical results
// regardless of scheduling and without shared state.

#include <cmath>
#include <cstdint>

namespace scorekit::rng {

inline std::uint64_t splitmix64(std::uint64_t z) {
  z += 0x9E3779B97F4A7C15ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

inline std::uint64_t key(std::uint64_t seed, std::uint64_t stream, std::uint64_t step,
                         std::uint64_t slot) {
  std::uint64_t h = splitmix64(seed);
  h = splitmix64(h ^ (stream * 0xA24BAED4963EE407ULL));
  h = splitmix64(h ^ (step * 0x9FB21C651E98DF25ULL));
  h = splitmix64(h ^ slot);
  return h;
}

// Uniform in (0, 1], using the top 53 bits.
inline double uniform(std::uint64_t bits) {
  return (static_cast<double>(bits >> 11) + 1.0) * 0x1.0p-53;
}

// Standard normal pair via Box-Muller from two counter draws.
inline void normal_pair(std::uint64_t seed, std::uint64_t stream, std::uint64_t step,
                        std::uint64_t slot, double& z0, double& z1) {
  const double u1 = uniform(key(seed, stream, step, 2 * slot));
  const double u2 = uniform(key(seed, stream, step, 2 * slot + 1));
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double a = 6.283185307179586476925286766559 * u2;
  z0 = r * std::cos(a);
  z1 = r * std::sin(a);
}

inline double normal(std::uint64_t seed, std::uint64_t stream, std::uint64_t step,
                     std::uint64_t slot) {
  double z0, z1;
  normal_pair(seed, stream, step, slot, z0, z1);
  return z0;
}

// Stateful convenience stream on top of the counter primitives.
class NormalStream {
 public:
  NormalStream(std::uint64_t seed, std::uint64_t stream) : seed_(seed), stream_(stream) {}

  double next() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double z0;
    normal_pair(seed_, stream_, 0, counter_++, z0, spare_);
    have_spare_ = true;
    return z0;
  }

  double next_uniform(double lo, double hi) {
    const double u = uniform(key(seed_, stream_, 1, counter_++));
    return lo + (hi - lo) * u;
  }

 private:
  std::uint64_t seed_, stream_;
  std::uint64_t counter_ = 0;
  double spare_ = 0.0;
  bool have_spare_ = false;
};

}  // namespace scorekit::rng
