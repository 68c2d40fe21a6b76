#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <string_view>

namespace skillaudit {

/// Cursor over the random words of one (seed, path, index) draw.
///
/// Words are SHA-256 blocks keyed by the draw coordinates and a block
/// counter, so a draw never depends on how many other draws were taken.
class Draw {
 public:
  Draw(std::uint64_t seed, std::string path, std::uint64_t index);

  std::uint64_t next_u64();
  /// Uniform integer in [lo, hi] by rejection sampling (unbiased).
  std::int64_t uniform_int(std::int64_t lo, std::int64_t hi);
  /// Uniform index in [0, n).
  std::size_t index_below(std::size_t n);
  /// Uniform real in [0, 1) with 53 random bits.
  double uniform_real();

 private:
  void refill();

  std::uint64_t seed_;
  std::string path_;
  std::uint64_t index_;
  std::uint64_t block_ = 0;
  std::array<std::uint64_t, 4> words_{};
  std::size_t next_word_ = 4;
};

/// Named substream of the run's keyed generator. Draws are indexed by
/// integer, so substreams are independent of each other and of draw order.
class RandomStream {
 public:
  RandomStream(std::uint64_t seed, std::string path);

  Draw draw(std::uint64_t index) const { return Draw(seed_, path_, index); }
  RandomStream child(std::string_view name) const;

  std::uint64_t seed() const { return seed_; }
  const std::string& path() const { return path_; }

 private:
  std::uint64_t seed_;
  std::string path_;
};

}  // namespace skillaudit
