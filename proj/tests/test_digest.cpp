#include "doctest.h"
#include "skillaudit/digest.h"

using namespace skillaudit;

TEST_CASE("published vectors") {
  CHECK(hash_bytes("").hex() == "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
  CHECK(hash_bytes("abc").hex() == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST_CASE("genesis entry with empty payload hashes 64 ascii zeros") {
  CHECK(hash_bytes(std::string(64, '0')).hex() == "60e05bd1b195af2f94112fa7197a5c88289058840ce7c6df9693756bc6250f55");
  CHECK(zero_digest().hex() == std::string(64, '0'));
}

TEST_CASE("single bit flips change the digest") {
  const std::string base = "skill graph";
  const Digest d = hash_bytes(base);
  for (std::size_t i = 0; i < base.size(); ++i) {
    for (int bit = 0; bit < 8; ++bit) {
      std::string flipped = base;
      flipped[i] = static_cast<char>(flipped[i] ^ (1 << bit));
      CHECK(hash_bytes(flipped) != d);
    }
  }
}

TEST_CASE("hex validation") {
  CHECK(Digest::is_valid_hex(std::string(64, 'a')));
  CHECK_FALSE(Digest::is_valid_hex(std::string(64, 'A')));
  CHECK_FALSE(Digest::is_valid_hex(std::string(63, 'a')));
  CHECK_THROWS(Digest::from_hex("xyz"));
  const Digest d = hash_bytes("abc");
  CHECK(Digest::from_hex(d.hex()) == d);
  CHECK(d.short_hex() == "ba7816bf8f01");
}

TEST_CASE("digest codec") {
  const Digest d = hash_bytes("abc");
  CHECK(canonical_decode<Digest>(canonical_encode(d)) == d);
  CHECK_THROWS_AS(canonical_decode<Digest>("\"abc\""), DecodeError);
}
