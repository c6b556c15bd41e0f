#include "mustreg/rng.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>

namespace mustreg {

std::uint64_t mix_key(std::uint64_t key, std::uint64_t tag) {
  std::uint64_t z = key + 0x9e3779b97f4a7c15ULL * (tag + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

std::vector<std::size_t> sample_without_replacement(std::size_t population, std::size_t count,
                                                    std::mt19937_64& rng) {
  if (count > population) throw std::invalid_argument("sample larger than population");
  std::vector<std::size_t> out;
  out.reserve(count);
  if (count * 8 < population) {
    // Floyd's algorithm: O(count log count) regardless of population size.
    for (std::size_t j = population - count; j < population; ++j) {
      std::uniform_int_distribution<std::size_t> dist(0, j);
      const std::size_t t = dist(rng);
      auto pos = std::lower_bound(out.begin(), out.end(), t);
      if (pos != out.end() && *pos == t) {
        out.insert(std::lower_bound(out.begin(), out.end(), j), j);
      } else {
        out.insert(pos, t);
      }
    }
    return out;
  }
  // Selection sampling; output comes out sorted.
  std::vector<std::size_t> all(population);
  std::iota(all.begin(), all.end(), std::size_t{0});
  std::sample(all.begin(), all.end(), std::back_inserter(out), count, rng);
  return out;
}

}  // namespace mustreg
