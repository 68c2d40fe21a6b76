#include "doctest.h"
#include "skillaudit/value.h"

using namespace skillaudit;

TEST_CASE("integer bounds are enforced") {
  CHECK(Value::integer(1'000'000'000).as_int() == 1'000'000'000);
  CHECK(Value::integer(-1'000'000'000).as_int() == -1'000'000'000);
  CHECK_THROWS_AS(Value::integer(1'000'000'001), ValueError);
  CHECK_THROWS_AS(Value::integer(-1'000'000'001), ValueError);
}

TEST_CASE("string bounds are counted in bytes") {
  CHECK(Value::string(std::string(256, 'x')).as_str().size() == 256);
  CHECK_THROWS_AS(Value::string(std::string(257, 'x')), ValueError);
  // 128 two-byte characters is exactly 256 bytes
  std::string twobyte;
  for (int i = 0; i < 128; ++i) twobyte += "\xc3\xa9";
  CHECK_NOTHROW(Value::string(twobyte));
  CHECK_THROWS_AS(Value::string(twobyte + "a"), ValueError);
}

TEST_CASE("invalid utf8 is rejected") {
  CHECK_FALSE(is_valid_utf8("\xff"));
  CHECK_FALSE(is_valid_utf8("\xc3"));
  CHECK_FALSE(is_valid_utf8("\xc0\xaf"));  // overlong
  CHECK(is_valid_utf8("plain"));
  CHECK(is_valid_utf8("\xe2\x82\xac"));
  CHECK_THROWS_AS(Value::string("\xff"), ValueError);
}

TEST_CASE("tagged equality distinguishes int from str") {
  CHECK(Value::integer(7) != Value::string("7"));
  CHECK(Value::integer(7) == Value::integer(7));
  CHECK(Value().is_int());
  CHECK(Value().as_int() == 0);
  CHECK(Value::string("a").type() == SemType::kStr);
}

TEST_CASE("semantic type names") {
  CHECK(to_string(SemType::kInt) == "INT");
  CHECK(sem_type_from_string("STR") == SemType::kStr);
  CHECK_THROWS_AS(sem_type_from_string("FLOAT"), ValueError);
}
