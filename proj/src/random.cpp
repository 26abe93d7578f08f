#include "mixsurv/random.hpp"

#include <array>

namespace mixsurv {

std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

std::mt19937_64 RandomStream::engine(Substream substream) const {
  std::uint64_t state = splitmix64(seed);
  state = splitmix64(state ^ splitmix64(stream_id + 0x632BE59BD9B4E019ULL));
  state = splitmix64(state ^ splitmix64(static_cast<std::uint64_t>(substream) + 0x8CB92BA72F3D8DD7ULL));
  std::array<std::uint32_t, 8> words{};
  for (std::size_t i = 0; i < words.size(); i += 2) {
    state = splitmix64(state);
    words[i] = static_cast<std::uint32_t>(state);
    words[i + 1] = static_cast<std::uint32_t>(state >> 32);
  }
  std::seed_seq seq(words.begin(), words.end());
  return std::mt19937_64(seq);
}

}  // namespace mixsurv
