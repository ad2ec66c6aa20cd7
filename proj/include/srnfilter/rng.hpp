#pragma once

#include <cstdint>
#include <random>

namespace srnfilter {

using Engine = std::mt19937_64;

/// SplitMix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Seed of stream `stream` under `master`; distinct (master, stream) pairs give
/// decorrelated seeds, so per-run/per-particle engines do not depend on how
/// work is split across threads.
constexpr std::uint64_t stream_seed(std::uint64_t master, std::uint64_t stream,
                                    std::uint64_t substream = 0) noexcept {
  return mix64(mix64(mix64(master) ^ stream) ^ (substream * 0xd1342543de82ef95ULL));
}

inline Engine make_engine(std::uint64_t master, std::uint64_t stream,
                          std::uint64_t substream = 0) {
  return Engine(stream_seed(master, stream, substream));
}

/// Uniform double in (0, 1).
inline double uniform_open(Engine& rng) {
  constexpr double scale = 1.0 / 9007199254740992.0;  // 2^-53
  double u;
  do {
    u = static_cast<double>(rng() >> 11) * scale;
  } while (u == 0.0);
  return u;
}

}  // namespace srnfilter
