#ifndef MSPR_RNG_HPP
#define MSPR_RNG_HPP

#include <cmath>
#include <cstdint>
#include <random>

namespace mspr {

/// Derives an independent substream seed from a master seed and a stream id
/// (SplitMix64 finalizer over the combined state). Streams with distinct ids
/// are statistically independent, so trials, bootstrap replicates and
/// permutation draws can run in any order and still reproduce bit-identical
/// results.
inline std::uint64_t substream_seed(std::uint64_t master, std::uint64_t stream) noexcept {
  std::uint64_t z = master + 0x9e3779b97f4a7c15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

inline std::uint64_t substream_seed(std::uint64_t master, std::uint64_t a,
                                    std::uint64_t b) noexcept {
  return substream_seed(substream_seed(master, a), b);
}

/// Random stream with the handful of draws the library needs. Uniform and
/// exponential variates are generated from explicit 53-bit uniforms so the
/// byte streams are identical across platforms; Poisson delegates to the
/// standard library (used only in value sampling, not in the event loop).
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  /// Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  /// Exponential waiting time with the given rate (> 0).
  double exponential(double rate) { return -std::log1p(-uniform()) / rate; }

  long poisson(double mean) {
    std::poisson_distribution<long> dist(mean);
    return dist(engine_);
  }

  /// Uniform index in {0, ..., n-1}.
  std::size_t uniform_index(std::size_t n) {
    return static_cast<std::size_t>((static_cast<unsigned __int128>(engine_()) * n) >> 64);
  }

  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
};

}  // namespace mspr

#endif  // MSPR_RNG_HPP
