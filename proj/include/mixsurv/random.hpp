#pragma once

#include <cstdint>
#include <random>

namespace mixsurv {

// Independent substreams carved out of one (seed, stream_id) pair.
enum class Substream : std::uint64_t {
  primary = 0,
  lifetime = 1,
  censoring = 2,
  kiefer = 3,
  limit = 4,
};

/// Reproducible source of randomness. Identical (seed, stream_id, substream)
/// triples give bit-identical engines; distinct triples are decorrelated by
/// a splitmix64 mixing chain before seeding.
struct RandomStream {
  std::uint64_t seed = 0;
  std::uint64_t stream_id = 0;

  std::mt19937_64 engine(Substream substream = Substream::primary) const;
};

std::uint64_t splitmix64(std::uint64_t x) noexcept;

}  // namespace mixsurv
