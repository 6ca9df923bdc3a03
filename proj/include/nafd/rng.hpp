#pragma once

#include <complex>
#include <cmath>
#include <cstdint>
#include <random>

namespace nafd {

// Stateless 64-bit mixer (splitmix64 finalizer). Used both to expand seeds
// and to derive independent sub-stream seeds from (master, tag, index...)
// tuples so that parallel workers get reproducible, order-independent draws.
inline std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t a,
                                 std::uint64_t b = 0, std::uint64_t c = 0) {
  std::uint64_t s = mix64(master);
  s = mix64(s ^ (a + 0x9e3779b97f4a7c15ULL));
  s = mix64(s ^ (b + 0x7f4a7c159e3779b9ULL));
  s = mix64(s ^ (c + 0x6c62272e07bb0142ULL));
  return s;
}

// Deterministic random stream. std::mt19937_64 is fully specified by the
// standard; the uniform/normal transforms are written out here because the
// stdlib distribution objects are implementation-defined and would break
// bit-reproducibility across toolchains.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(mix64(seed)) {}

  std::uint64_t next_u64() { return gen_(); }

  // Uniform on [0, 1) with 53-bit resolution.
  double uniform() {
    return static_cast<double>(gen_() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Standard normal via Box-Muller; second value of each pair is cached.
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u1 = 1.0 - uniform();  // (0, 1], keeps log() finite
    double u2 = uniform();
    double r = std::sqrt(-2.0 * std::log(u1));
    double t = 6.283185307179586476925286766559 * u2;
    spare_ = r * std::sin(t);
    has_spare_ = true;
    return r * std::cos(t);
  }

  double normal(double mean, double stddev) { return mean + stddev * normal(); }

  // Circularly-symmetric complex normal with total variance `var`.
  std::complex<double> cnormal(double var) {
    double s = std::sqrt(0.5 * var);
    double re = normal();
    double im = normal();
    return {s * re, s * im};
  }

 private:
  std::mt19937_64 gen_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace nafd
