#pragma once

#include <array>
#include <cstdint>
#include <initializer_list>
#include <limits>

namespace gpnn {

/// Stream identifiers used when deriving keyed random streams.
enum class StreamTag : std::uint64_t {
  kTrainCovariates = 1,
  kTestCovariates = 2,
  kTrainNoise = 3,
  kTestNoise = 4,
  kLocalLatent = 5,
  kBlockPartition = 6,
  kDatasetSplit = 7,
  kGeneric = 8,
};

/// SplitMix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Hashes an ordered tuple of integers into a single 64-bit key.
constexpr std::uint64_t stream_key(std::initializer_list<std::uint64_t> parts) noexcept {
  std::uint64_t h = 0x6a09e667f3bcc909ULL;
  for (std::uint64_t p : parts) h = mix64(h ^ mix64(p));
  return h;
}

/// xoshiro256** generator seeded from a 64-bit key.  Streams are derived by
/// hashing (master seed, tag, indices...) so that the value of any stream is a
/// pure function of its key and independent of evaluation order.
class RandomStream {
 public:
  using result_type = std::uint64_t;

  explicit RandomStream(std::uint64_t key) noexcept {
    std::uint64_t s = key;
    for (auto& word : state_) {
      s += 0x9e3779b97f4a7c15ULL;
      word = mix64(s);
    }
  }

  RandomStream(std::uint64_t master_seed, StreamTag tag, std::initializer_list<std::uint64_t> indices) noexcept
      : RandomStream(derive(master_seed, tag, indices)) {}

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

  result_type operator()() noexcept {
    const std::uint64_t result = rotl(state_[1] * 5, 7) * 9;
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
  double uniform() noexcept { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

  static std::uint64_t derive(std::uint64_t master_seed, StreamTag tag,
                              std::initializer_list<std::uint64_t> indices) noexcept {
    std::uint64_t h = stream_key({master_seed, static_cast<std::uint64_t>(tag)});
    for (std::uint64_t i : indices) h = mix64(h ^ mix64(i + 0x632be59bd9b4e019ULL));
    return h;
  }

 private:
  static constexpr std::uint64_t rotl(std::uint64_t x, int k) noexcept { return (x << k) | (x >> (64 - k)); }
  std::array<std::uint64_t, 4> state_{};
};

}  // namespace gpnn
