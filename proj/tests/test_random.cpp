#include <set>

#include "doctest.h"
#include "skillaudit/random.h"

using namespace skillaudit;

TEST_CASE("draws are pure functions of their coordinates") {
  RandomStream s(7, "train");
  Draw a = s.draw(3);
  Draw b = s.draw(3);
  for (int i = 0; i < 10; ++i) CHECK(a.next_u64() == b.next_u64());
}

TEST_CASE("draw order does not matter") {
  RandomStream s(7, "train");
  Draw first = s.draw(5);
  const auto v1 = first.next_u64();
  for (int i = 0; i < 5; ++i) s.draw(static_cast<std::uint64_t>(i)).next_u64();
  CHECK(s.draw(5).next_u64() == v1);
}

TEST_CASE("substreams and seeds separate") {
  CHECK(RandomStream(0, "a").draw(0).next_u64() != RandomStream(0, "b").draw(0).next_u64());
  CHECK(RandomStream(0, "a").draw(0).next_u64() != RandomStream(1, "a").draw(0).next_u64());
  CHECK(RandomStream(0, "a").child("x").path() != RandomStream(0, "a").path());
}

TEST_CASE("bounded draws stay in range and cover it") {
  RandomStream s(1, "range");
  std::set<std::int64_t> seen;
  for (std::uint64_t i = 0; i < 2000; ++i) {
    Draw d = s.draw(i);
    const auto v = d.uniform_int(-2, 2);
    CHECK(v >= -2);
    CHECK(v <= 2);
    seen.insert(v);
    const double r = d.uniform_real();
    CHECK(r >= 0.0);
    CHECK(r < 1.0);
    CHECK(d.index_below(3) < 3);
  }
  CHECK(seen.size() == 5);
}

TEST_CASE("many words from one draw") {
  Draw d(0, "long", 0);
  std::set<std::uint64_t> words;
  for (int i = 0; i < 64; ++i) words.insert(d.next_u64());
  CHECK(words.size() == 64);
}
