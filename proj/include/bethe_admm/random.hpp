#ifndef BETHE_ADMM_RANDOM_HPP
#define BETHE_ADMM_RANDOM_HPP

#include <cstdint>

namespace bethe {

/// SplitMix64. Small, fast and fully specified, so generated instances are
/// identical across compilers and standard libraries (the <random>
/// distributions are not).
class Rng {
public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  /// Independent stream keyed by (seed, tag, id). Used to give every node
  /// and edge its own draws.
  static Rng stream(std::uint64_t seed, std::uint64_t tag, std::uint64_t id)
  {
    Rng r(seed);
    const std::uint64_t a = r.next();
    Rng s(a ^ mix(tag + 0x632be59bd9b4e019ULL));
    const std::uint64_t b = s.next();
    return Rng(b ^ mix(id + 0x9e3779b97f4a7c15ULL));
  }

  std::uint64_t next()
  {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
    return mix(z);
  }

  /// Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Uniform integer in [0, n). Rejection sampling, no modulo bias.
  std::uint64_t below(std::uint64_t n)
  {
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    std::uint64_t x;
    do
      x = next();
    while (x >= limit);
    return x % n;
  }

private:
  static std::uint64_t mix(std::uint64_t z)
  {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  std::uint64_t state_;
};

} // namespace bethe

#endif
