#ifndef QPULSE_RNG_HPP
#define QPULSE_RNG_HPP

#include <cstdint>
#include <random>

namespace qpulse {

/// splitmix64 finalizer; used to derive independent stream seeds from a
/// master seed plus structured indices (sweep point, run, role).
inline std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t a, std::uint64_t b = 0,
                                 std::uint64_t c = 0) {
  std::uint64_t s = mix64(master);
  s = mix64(s ^ mix64(a + 0x100000001b3ull));
  s = mix64(s ^ mix64(b + 0xcbf29ce484222325ull));
  s = mix64(s ^ mix64(c + 0x2545f4914f6cdd1dull));
  return s;
}

using Rng = std::mt19937_64;

}  // namespace qpulse

#endif
