// Counter-based random streams.
//
// Philox4x64-10 keyed by (master_seed, replica_index). The 256-bit counter is
// laid out as {block, lane, 0, 0}; a stream walks `block` from zero and so
// has 2^64 blocks of four outputs. Different keys select different
// bijections of the counter space, different lanes address disjoint counter
// ranges under one key, so no two (seed, replica, lane) triples ever read
// the same (key, counter) pair.
#pragma once

#include <array>
#include <cstdint>
#include <limits>

namespace lln {

class Philox4x64 {
 public:
  using counter_type = std::array<std::uint64_t, 4>;
  using key_type = std::array<std::uint64_t, 2>;

  static constexpr counter_type block(counter_type ctr, key_type key) {
    ctr = round(ctr, key);
    for (int r = 1; r < 10; ++r) {
      key[0] += kWeyl0;
      key[1] += kWeyl1;
      ctr = round(ctr, key);
    }
    return ctr;
  }

 private:
  static constexpr std::uint64_t kMul0 = 0xD2E7470EE14C6C93ULL;
  static constexpr std::uint64_t kMul1 = 0xCA5A826395121157ULL;
  static constexpr std::uint64_t kWeyl0 = 0x9E3779B97F4A7C15ULL;
  static constexpr std::uint64_t kWeyl1 = 0xBB67AE8584CAA73BULL;

  static constexpr void mulhilo(std::uint64_t a, std::uint64_t b, std::uint64_t& hi, std::uint64_t& lo) {
    unsigned __int128 p = static_cast<unsigned __int128>(a) * b;
    hi = static_cast<std::uint64_t>(p >> 64);
    lo = static_cast<std::uint64_t>(p);
  }

  static constexpr counter_type round(const counter_type& c, const key_type& k) {
    std::uint64_t hi0 = 0, lo0 = 0, hi1 = 0, lo1 = 0;
    mulhilo(kMul0, c[0], hi0, lo0);
    mulhilo(kMul1, c[2], hi1, lo1);
    return {hi1 ^ c[1] ^ k[0], lo1, hi0 ^ c[3] ^ k[1], lo0};
  }
};

/// Identifies one replica's random stream.
struct RngSpec {
  std::uint64_t master_seed = 0;
  std::uint64_t replica_index = 0;
};

/// Lanes used by the library so that auxiliary draws never alias the walk.
enum class Lane : std::uint64_t { walk = 0, splits = 1, auxiliary = 2 };

/// UniformRandomBitGenerator over one Philox stream.
class StreamRng {
 public:
  using result_type = std::uint64_t;

  explicit StreamRng(RngSpec spec, Lane lane = Lane::walk)
      : key_{spec.master_seed, spec.replica_index}, lane_(static_cast<std::uint64_t>(lane)) {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()() {
    if (used_ == 4) refill();
    return buffer_[used_++];
  }

  /// Uniform on [0, 1) with 53 random bits.
  double uniform01() { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

  /// Uniform integer in [0, bound) by multiply-shift.
  std::uint64_t below(std::uint64_t bound) {
    return static_cast<std::uint64_t>((static_cast<unsigned __int128>((*this)()) * bound) >> 64);
  }

  std::uint64_t blocks_consumed() const { return block_; }

 private:
  void refill() {
    buffer_ = Philox4x64::block({block_, lane_, 0, 0}, key_);
    ++block_;
    used_ = 0;
  }

  Philox4x64::key_type key_;
  std::uint64_t lane_;
  std::uint64_t block_ = 0;
  std::array<std::uint64_t, 4> buffer_{};
  int used_ = 4;
};

}  // namespace lln
