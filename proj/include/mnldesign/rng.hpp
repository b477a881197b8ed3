#pragma once

#include "mnldesign/common.hpp"

#include <array>
#include <cstdint>

namespace mnld {

/// Philox4x32 with 10 rounds (Salmon et al. counter-based generator).
std::array<uint32_t, 4> philox4x32_10(std::array<uint32_t, 4> counter, std::array<uint32_t, 2> key);

/// Inverse of the standard normal CDF (Wichura's AS241, double precision).
double normal_quantile(double p);

/// Named, independent substreams of one seed. Each stream is a separate
/// counter sequence, so draws on one never shift another.
enum class Stream : uint32_t {
  FeedbackA = 1,
  FeedbackB = 2,
  DesignSampling = 3,
  InitDesign = 4,
  InstanceGen = 5,
  Test = 100,
};

/// Sequential reader over a Philox stream. Counter layout is
/// (block_lo, block_hi, stream_id, substream); key is the 64-bit seed.
class Rng {
 public:
  Rng(uint64_t seed, Stream stream, uint32_t substream = 0);
  Rng(uint64_t seed, uint32_t stream_id, uint32_t substream);

  uint32_t next_u32();
  uint64_t next_u64();
  /// Uniform on [0, 1) with 53 random bits.
  double uniform();
  /// Uniform on the open interval (0, 1).
  double uniform_open();
  /// Standard normal via the inverse CDF of uniform_open().
  double normal();
  /// Uniform integer in [0, n) by rejection (n > 0).
  uint64_t below(uint64_t n);

  uint64_t blocks_consumed() const { return block_; }

 private:
  std::array<uint32_t, 2> key_;
  uint32_t stream_id_;
  uint32_t substream_;
  uint64_t block_ = 0;
  std::array<uint32_t, 4> buf_{};
  int pos_ = 4;
};

/// Uniform point in the radius-r ball of R^d: Gaussian direction times
/// r * U^(1/d).
Vec sample_ball(Rng& rng, int d, double radius);

}  // namespace mnld
