#ifndef FILTRA_RNG_HPP
#define FILTRA_RNG_HPP

#include <cstdint>

namespace filtra {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

// Counter-based uniforms: the draw for (stream, trial, level) is a pure
// function of the seed, so trials can run in any order on any thread.
class CounterRng {
 public:
  explicit CounterRng(std::uint64_t seed) : seed_(splitmix64(seed)) {}

  std::uint64_t bits(std::uint64_t stream, std::uint64_t trial, std::int64_t level) const {
    std::uint64_t h = splitmix64(seed_ ^ splitmix64(stream + 0x632be59bd9b4e019ull));
    h = splitmix64(h ^ trial);
    return splitmix64(h ^ static_cast<std::uint64_t>(level));
  }

  /// Uniform on the open interval (0, 1).
  double uniform(std::uint64_t stream, std::uint64_t trial, std::int64_t level) const {
    return (static_cast<double>(bits(stream, trial, level) >> 11) + 0.5) * 0x1.0p-53;
  }

  std::uint64_t seed() const { return seed_; }

 private:
  std::uint64_t seed_;
};

}  // namespace filtra

#endif  // FILTRA_RNG_HPP
