#pragma once

#include <cmath>
#include <cstdint>
#include <string_view>
#include <vector>

namespace aprl {

// Deterministic splittable PRNG built on the splitmix64 finalizer.
//
// Every random decision in the library flows from one seed through named
// splits, e.g. rng.split("tree", t) hands tree t its own stream. Combined
// with disjoint output slots this makes parallel kernels bit-identical to
// their serial counterparts regardless of thread count or iteration order.
// Sampling avoids std::uniform_*_distribution on purpose: those are
// implementation-defined and would tie results to a particular stdlib.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(mix(seed ^ kGolden)) {}

  // Derives an independent stream identified by (label, index); does not
  // advance this generator.
  Rng split(std::string_view label, std::uint64_t index = 0) const {
    Rng child(0);
    child.state_ = mix(state_ ^ mix(fnv1a(label) + kGolden * (index + 1)));
    return child;
  }

  std::uint64_t next_u64() {
    state_ += kGolden;
    return mix(state_);
  }

  // Uniform in [0, 1), 53-bit resolution.
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  // Uniform integer in [0, n); n must be positive. Rejection sampling keeps
  // the draw exactly unbiased.
  std::uint64_t below(std::uint64_t n) {
    std::uint64_t threshold = (0 - n) % n;  // 2^64 mod n
    for (;;) {
      std::uint64_t r = next_u64();
      if (r >= threshold) return r % n;
    }
  }

  // Uniform integer on the inclusive range [lo, hi].
  long long uniform_int(long long lo, long long hi) {
    return lo + static_cast<long long>(below(static_cast<std::uint64_t>(hi - lo) + 1));
  }

  // Standard normal via Box-Muller; the second value of each pair is
  // discarded so one call consumes a fixed amount of stream.
  double normal() {
    double u1 = (static_cast<double>(next_u64() >> 11) + 1.0) * 0x1.0p-53;  // (0, 1]
    double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(kTwoPi * u2);
  }

 private:
  static constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ull;
  static constexpr double kTwoPi = 6.28318530717958647692;

  static std::uint64_t mix(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }

  static std::uint64_t fnv1a(std::string_view s) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (char c : s) {
      h ^= static_cast<unsigned char>(c);
      h *= 0x100000001b3ull;
    }
    return h;
  }

  std::uint64_t state_;
};

// Fisher-Yates shuffle driven by the portable generator.
template <class T>
void shuffle(std::vector<T>& v, Rng& rng) {
  for (std::size_t i = v.size(); i > 1; --i) {
    std::size_t j = static_cast<std::size_t>(rng.below(i));
    std::swap(v[i - 1], v[j]);
  }
}

}  // namespace aprl
