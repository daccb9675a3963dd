#pragma once

#include <cstdint>
#include <limits>

namespace subnewton {

/// Counter-based generator: the n-th output is a pure function of (key, n),
/// computed with the SplitMix64 finalizer. Streams are split by deriving new
/// keys, never by sharing a mutable state across purposes.
class CounterRng {
 public:
  using result_type = std::uint64_t;

  explicit CounterRng(std::uint64_t key) : key_(key) {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()() { return at(counter_++); }

  /// Output at an absolute counter position; does not advance.
  result_type at(std::uint64_t counter) const;

  std::uint64_t key() const { return key_; }
  std::uint64_t counter() const { return counter_; }

  /// Uniform on [0, 1) with 53 random bits.
  double uniform01();
  /// Uniform on {0, ..., bound - 1}; unbiased (Lemire's multiply-and-reject).
  std::uint64_t uniform_index(std::uint64_t bound);
  /// Standard normal via Box-Muller (one variate per call, no caching).
  double normal();

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

std::uint64_t mix64(std::uint64_t z);

/// Sampling purposes; each gets an independent stream per iteration.
enum class StreamPurpose : std::uint64_t {
  Hessian = 1,
  Gradient = 2,
  Pilot = 3,
  Shared = 4,
  Trial = 5,
  Data = 6,
  Start = 7,
};

/// Key for the stream used at (iteration, purpose) under a master seed.
std::uint64_t derive_stream_key(std::uint64_t master_seed, std::uint64_t iteration,
                                StreamPurpose purpose);

}  // namespace subnewton
