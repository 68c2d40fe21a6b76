#include <set>

#include "doctest.h"
#include "skillaudit/canonical.h"
#include "skillaudit/environment.h"
#include "skillaudit/random.h"

using namespace skillaudit;

namespace {

Value random_value(Draw& d) {
  if (d.index_below(2) == 0) return Value::integer(d.uniform_int(-kMaxIntMagnitude, kMaxIntMagnitude));
  std::string s;
  const std::size_t n = d.index_below(12);
  static const std::string alphabet = "ab\"\\\n\t\x01z{}:,";
  for (std::size_t i = 0; i < n; ++i) s += alphabet[d.index_below(alphabet.size())];
  return Value::string(s);
}

}  // namespace

TEST_CASE("empty map encodes as braces") { CHECK(canonical_encode(ValueMap{}) == "{}"); }

TEST_CASE("map keys are lexicographic") {
  ValueMap m;
  m["b"] = Value::integer(1);
  m["a"] = Value::integer(2);
  CHECK(canonical_encode(m) == R"({"a":{"int":2},"b":{"int":1}})");
}

TEST_CASE("values are tagged") {
  CHECK(canonical_encode(Value::integer(-12)) == R"({"int":-12})");
  CHECK(canonical_encode(Value::string("x")) == R"({"str":"x"})");
}

TEST_CASE("encoding is deterministic") {
  const TaskRef ref{TaskKind::kSum, 3, "train", 9};
  CHECK(canonical_encode(ref) == canonical_encode(ref));
}

TEST_CASE("strict decode rejects non-canonical text") {
  CHECK_THROWS_AS(canonical_decode<Value>(R"({ "int":1})"), DecodeError);
  CHECK_THROWS_AS(canonical_decode<Value>(R"({"int":01})"), DecodeError);
  CHECK_THROWS_AS(canonical_decode<Value>(R"({"int":1,"str":"a"})"), DecodeError);
  CHECK_THROWS_AS(canonical_decode<Value>("not json"), DecodeError);
  CHECK(canonical_decode<Value>(R"({"int":1})") == Value::integer(1));
}

TEST_CASE("decode errors name the field") {
  try {
    canonical_decode<TaskRef>(R"({"kind":"SUM","seed":"x","path":"p","index":0})");
    FAIL("expected a decode error");
  } catch (const DecodeError& e) {
    CHECK(e.field() == "seed");
  }
}

TEST_CASE("non-finite reals cannot be encoded") {
  CHECK_THROWS_AS(canonical_dump(Json(std::numeric_limits<double>::infinity())), EncodeError);
  CHECK(canonical_dump(Json(0.1)) == "0.1");
}

TEST_CASE("round trip and injectivity over 10000 random value maps") {
  RandomStream stream(42, "canonical-property");
  std::set<std::string> encodings;
  std::set<std::string> distinct;
  for (std::uint64_t i = 0; i < 10000; ++i) {
    Draw d = stream.draw(i);
    ValueMap m;
    const std::size_t keys = d.index_below(4);
    for (std::size_t k = 0; k < keys; ++k) m["k" + std::to_string(d.index_below(5))] = random_value(d);
    const std::string enc = canonical_encode(m);
    REQUIRE(canonical_decode<ValueMap>(enc) == m);
    encodings.insert(enc);
    distinct.insert(std::to_string(m.size()) + [&] {
      std::string key;
      for (const auto& [k, v] : m) key += "|" + k + "=" + (v.is_int() ? "i" + std::to_string(v.as_int()) : "s" + v.as_str());
      return key;
    }());
  }
  CHECK(encodings.size() == distinct.size());
}
