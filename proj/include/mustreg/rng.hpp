#ifndef MUSTREG_RNG_HPP
#define MUSTREG_RNG_HPP

#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <random>
#include <vector>

namespace mustreg {

/// What a random stream is used for; part of the stream key so that
/// unrelated draws never share state.
enum class RngPurpose : std::uint64_t {
  kFineSample = 1,
  kVerifySample = 2,
  kNestedSample = 3,
  kInitialPoint = 4,
  kBatch = 5,
  kSplit = 6,
  kSynthetic = 7,
  kRecursion = 8,
};

/// Deterministic 64-bit key mixing (splitmix64 finalizer).
std::uint64_t mix_key(std::uint64_t key, std::uint64_t tag);

/// A key identifying a node in the tree of derived streams.
class RngKey {
 public:
  explicit RngKey(std::uint64_t seed) : key_(mix_key(0x6d75737472656721ULL, seed)) {}

  RngKey child(std::initializer_list<std::uint64_t> tags) const {
    RngKey k = *this;
    for (auto t : tags) k.key_ = mix_key(k.key_, t);
    return k;
  }

  RngKey child(RngPurpose purpose, std::uint64_t level, std::uint64_t iteration) const {
    return child({static_cast<std::uint64_t>(purpose), level, iteration});
  }

  std::mt19937_64 engine() const { return std::mt19937_64(key_); }
  std::uint64_t value() const { return key_; }

 private:
  std::uint64_t key_;
};

/// `count` distinct values drawn uniformly from [0, population), sorted.
std::vector<std::size_t> sample_without_replacement(std::size_t population, std::size_t count,
                                                    std::mt19937_64& rng);

}  // namespace mustreg

#endif  // MUSTREG_RNG_HPP
