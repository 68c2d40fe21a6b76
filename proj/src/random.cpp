#include "skillaudit/random.h"

#include <limits>
#include <stdexcept>

#include "skillaudit/digest.h"

namespace skillaudit {

Draw::Draw(std::uint64_t seed, std::string path, std::uint64_t index)
    : seed_(seed), path_(std::move(path)), index_(index) {}

void Draw::refill() {
  std::string key = "draw:";
  key += std::to_string(seed_);
  key += '\0';
  key += path_;
  key += '\0';
  key += std::to_string(index_);
  key += '\0';
  key += std::to_string(block_++);
  const std::string hex = hash_bytes(key).hex();
  for (std::size_t w = 0; w < 4; ++w) {
    words_[w] = std::stoull(hex.substr(16 * w, 16), nullptr, 16);
  }
  next_word_ = 0;
}

std::uint64_t Draw::next_u64() {
  if (next_word_ == words_.size()) refill();
  return words_[next_word_++];
}

std::int64_t Draw::uniform_int(std::int64_t lo, std::int64_t hi) {
  if (lo > hi) throw std::invalid_argument("uniform_int: empty range");
  const std::uint64_t span = static_cast<std::uint64_t>(hi) - static_cast<std::uint64_t>(lo) + 1;
  if (span == 0) return static_cast<std::int64_t>(next_u64());  // full 64-bit range
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                              std::numeric_limits<std::uint64_t>::max() % span;
  std::uint64_t x = next_u64();
  while (x >= limit) x = next_u64();
  return static_cast<std::int64_t>(static_cast<std::uint64_t>(lo) + x % span);
}

std::size_t Draw::index_below(std::size_t n) {
  if (n == 0) throw std::invalid_argument("index_below: n must be positive");
  return static_cast<std::size_t>(uniform_int(0, static_cast<std::int64_t>(n) - 1));
}

double Draw::uniform_real() {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

RandomStream::RandomStream(std::uint64_t seed, std::string path) : seed_(seed), path_(std::move(path)) {
  if (path_.find('\0') != std::string::npos) throw std::invalid_argument("stream path contains NUL");
}

RandomStream RandomStream::child(std::string_view name) const {
  return RandomStream(seed_, path_.empty() ? std::string(name) : path_ + "/" + std::string(name));
}

}  // namespace skillaudit
