#pragma once

#include <array>
#include <cstdint>
#include <limits>

namespace pnd {

// Philox4x32-10 counter-based generator. A block of four 32-bit words is a
// pure function of (counter, key), so any draw can be reproduced from its
// coordinates without replaying the sequence.
struct Philox4x32 {
  using Counter = std::array<std::uint32_t, 4>;
  using Key = std::array<std::uint32_t, 2>;

  static Counter block(Counter ctr, Key key);
};

// Independent random streams are addressed by (seed, domain, index). Every
// simulated gate, noise block or oracle batch gets its own stream, which makes
// serial and parallel kernels produce bit-identical results.
enum class Domain : std::uint32_t {
  kGate = 1,
  kReadout = 2,
  kTraceNoise = 3,
  kOracle = 4,
  kSampling = 5,
};

class Stream {
 public:
  Stream(std::uint64_t seed, Domain domain, std::uint64_t index);

  // Satisfies std::uniform_random_bit_generator.
  using result_type = std::uint32_t;
  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }
  result_type operator()();

  // Uniform on [0, 1) with 53 random bits.
  double uniform();
  // Uniform on (0, 1].
  double uniform_pos() { return 1.0 - uniform(); }
  // Standard normal via Box-Muller; the second variate of each pair is cached.
  double normal();
  bool bernoulli(double p);

 private:
  void refill();

  Philox4x32::Key key_;
  Philox4x32::Counter ctr_;
  Philox4x32::Counter buf_{};
  int pos_ = 4;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

// Mixes a user seed with a tag so companion runs use unrelated streams.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t tag);

}  // namespace pnd
