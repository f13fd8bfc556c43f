#pragma once

// Counter-based deterministic RNG. A stream is identified by (seed, stream);
// the value at counter i is the SplitMix64 finalizer applied to
// key + (i+1) * GAMMA, where key mixes seed and stream. Datasets and audit
// trials are bit-reproducible across platforms and scheduling because every
// consumer derives its own stream and draws a pure function of the counter.
//
// SplitMix64 constants from Steele, Lea & Flood, "Fast splittable
// pseudorandom number generators" (the java.util.SplittableRandom mixer).

#include <cmath>
#include <cstdint>
#include <vector>

namespace sop {

namespace detail {
inline constexpr std::uint64_t kGamma = 0x9E3779B97F4A7C15ULL;

inline std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}
}  // namespace detail

class CounterRng {
 public:
  explicit CounterRng(std::uint64_t seed, std::uint64_t stream = 0)
      : key_(detail::mix64(seed + detail::kGamma * detail::mix64(stream + 1))) {}

  // Derives an independent stream, e.g. (master_seed, trial_index).
  static CounterRng derive(std::uint64_t master_seed, std::uint64_t stream) {
    return CounterRng(master_seed, stream);
  }

  std::uint64_t next_u64() {
    ++counter_;
    return detail::mix64(key_ + counter_ * detail::kGamma);
  }

  // Uniform in [0, 1), 53 bits of precision.
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  // Uniform integer in [0, n), unbiased via rejection.
  int uniform_int(int n) {
    const std::uint64_t un = static_cast<std::uint64_t>(n);
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % un;
    std::uint64_t x;
    do {
      x = next_u64();
    } while (x >= limit);
    return static_cast<int>(x % un);
  }

  // Standard normal via Box-Muller; caches the second value.
  double gaussian() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 6.283185307179586476925286766559 * u2;
    spare_ = r * std::sin(theta);
    has_spare_ = true;
    return r * std::cos(theta);
  }

  std::vector<double> gaussian_vector(int dim, double scale = 1.0) {
    std::vector<double> v(dim);
    for (int i = 0; i < dim; ++i) v[i] = scale * gaussian();
    return v;
  }

  // Uniform on the sphere of the given radius.
  std::vector<double> sphere(int dim, double radius = 1.0) {
    for (;;) {
      std::vector<double> v = gaussian_vector(dim);
      double n2 = 0.0;
      for (double x : v) n2 += x * x;
      if (n2 > 0.0) {
        const double s = radius / std::sqrt(n2);
        for (double& x : v) x *= s;
        return v;
      }
    }
  }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace sop
