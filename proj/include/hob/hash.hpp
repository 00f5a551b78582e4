#ifndef HOB_HASH_HPP
#define HOB_HASH_HPP

#include <cstdint>
#include <string_view>

namespace hob {

inline std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t h = 14695981039346656037ull) {
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

// Seed for the random stream of item `index` under `seed`; streams are
// independent of evaluation order.
inline std::uint64_t stream_seed(std::uint64_t seed, std::uint64_t index, std::uint64_t tag = 0) {
  return splitmix64(splitmix64(seed ^ splitmix64(tag)) + index);
}

}  // namespace hob

#endif  // HOB_HASH_HPP
