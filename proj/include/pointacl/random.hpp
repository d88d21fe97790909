#ifndef POINTACL_RANDOM_HPP
#define POINTACL_RANDOM_HPP

#include <cstdint>
#include <initializer_list>

namespace pointacl {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

/// Independent stream seed for (seed, tag...). Streams for different tags do not overlap in practice.
inline std::uint64_t derive_seed(std::uint64_t seed, std::initializer_list<std::uint64_t> tags) {
  std::uint64_t s = splitmix64(seed);
  for (auto t : tags) s = splitmix64(s ^ splitmix64(t + 0x632be59bd9b4e019ull));
  return s;
}

}  // namespace pointacl

#endif  // POINTACL_RANDOM_HPP
