#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <limits>

namespace chaowalk {

// Philox4x32-10 block cipher (Salmon et al., Random123). Pure function of
// (counter, key); used as the core of a counter-based stream generator.
inline std::array<std::uint32_t, 4> philox4x32_10(std::array<std::uint32_t, 4> ctr,
                                                  std::array<std::uint32_t, 2> key) {
  constexpr std::uint32_t kM0 = 0xD2511F53u;
  constexpr std::uint32_t kM1 = 0xCD9E8D57u;
  constexpr std::uint32_t kW0 = 0x9E3779B9u;
  constexpr std::uint32_t kW1 = 0xBB67AE85u;
  for (int round = 0; round < 10; ++round) {
    if (round > 0) {
      key[0] += kW0;
      key[1] += kW1;
    }
    const std::uint64_t p0 = std::uint64_t{kM0} * ctr[0];
    const std::uint64_t p1 = std::uint64_t{kM1} * ctr[2];
    ctr = {static_cast<std::uint32_t>(p1 >> 32) ^ ctr[1] ^ key[0], static_cast<std::uint32_t>(p1),
           static_cast<std::uint32_t>(p0 >> 32) ^ ctr[3] ^ key[1], static_cast<std::uint32_t>(p0)};
  }
  return ctr;
}

// Reserved stream ids. Environment generation and walk sampling never share
// a stream; per-sample streams are derived as base + sample index.
namespace streams {
inline constexpr std::uint64_t kEnvironment = 0;
inline constexpr std::uint64_t kWalkSampleBase = std::uint64_t{1} << 32;
inline constexpr std::uint64_t kMapSampleBase = std::uint64_t{2} << 32;
}  // namespace streams

// Counter-based, splittable generator keyed by (seed, stream). Two instances
// with distinct keys produce independent streams; any instance can be
// recreated from its key and position. Satisfies UniformRandomBitGenerator.
class StreamRng {
 public:
  using result_type = std::uint64_t;

  StreamRng(std::uint64_t seed, std::uint64_t stream) : seed_(seed), stream_(stream) {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()() {
    if (buffered_ == 0) refill();
    return block_[--buffered_];
  }

  // Uniform double in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

  // Uniform double in (0, 1].
  double uniform_open_closed() { return 1.0 - uniform(); }

  bool bernoulli(double p) { return uniform() < p; }

  // Geometric on {1, 2, ...} with success probability p, by inversion:
  // P(T > m) = (1-p)^m, so T = ceil(log U / log(1-p)) for U in (0,1].
  std::uint64_t geometric(double p) {
    if (p >= 1.0) return 1;
    const double u = uniform_open_closed();
    const double t = std::ceil(std::log(u) / std::log1p(-p));
    if (!(t >= 1.0)) return 1;
    if (t >= 0x1.0p63) return std::uint64_t{1} << 63;
    return static_cast<std::uint64_t>(t);
  }

  std::uint64_t seed() const noexcept { return seed_; }
  std::uint64_t stream() const noexcept { return stream_; }

 private:
  void refill() {
    const std::array<std::uint32_t, 4> ctr = {
        static_cast<std::uint32_t>(counter_), static_cast<std::uint32_t>(counter_ >> 32),
        static_cast<std::uint32_t>(stream_), static_cast<std::uint32_t>(stream_ >> 32)};
    const std::array<std::uint32_t, 2> key = {static_cast<std::uint32_t>(seed_),
                                              static_cast<std::uint32_t>(seed_ >> 32)};
    const auto out = philox4x32_10(ctr, key);
    ++counter_;
    // Stored in reverse so that operator() pops the low pair first.
    block_[1] = (std::uint64_t{out[1]} << 32) | out[0];
    block_[0] = (std::uint64_t{out[3]} << 32) | out[2];
    buffered_ = 2;
  }

  std::uint64_t seed_;
  std::uint64_t stream_;
  std::uint64_t counter_ = 0;
  std::array<std::uint64_t, 2> block_{};
  int buffered_ = 0;
};

}  // namespace chaowalk
