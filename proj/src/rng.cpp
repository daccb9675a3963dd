#include "subnewton/rng.hpp"

#include <cmath>
#include <numbers>

namespace subnewton {

namespace {
constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;
}

std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

CounterRng::result_type CounterRng::at(std::uint64_t counter) const {
  return mix64(key_ + (counter + 1) * kGolden);
}

double CounterRng::uniform01() {
  return static_cast<double>((*this)() >> 11) * 0x1.0p-53;
}

std::uint64_t CounterRng::uniform_index(std::uint64_t bound) {
  if (bound <= 1) return 0;
  __uint128_t m = static_cast<__uint128_t>((*this)()) * bound;
  auto low = static_cast<std::uint64_t>(m);
  if (low < bound) {
    const std::uint64_t threshold = (0 - bound) % bound;
    while (low < threshold) {
      m = static_cast<__uint128_t>((*this)()) * bound;
      low = static_cast<std::uint64_t>(m);
    }
  }
  return static_cast<std::uint64_t>(m >> 64);
}

double CounterRng::normal() {
  // 1 - u keeps the log argument in (0, 1].
  const double u1 = 1.0 - uniform01();
  const double u2 = uniform01();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

std::uint64_t derive_stream_key(std::uint64_t master_seed, std::uint64_t iteration,
                                StreamPurpose purpose) {
  const std::uint64_t a = mix64(master_seed ^ (static_cast<std::uint64_t>(purpose) * kGolden));
  return mix64(a + (iteration + 1) * 0xD1B54A32D192ED03ULL);
}

}  // namespace subnewton
