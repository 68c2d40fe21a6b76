#include <fstream>
#include <thread>

#include "doctest.h"
#include "skillaudit/audit_log.h"
#include "skillaudit/evidence.h"
#include "test_util.h"

using namespace skillaudit;
using testutil::TempDir;

namespace {

std::string payload(int i) { return canonical_encode(Value::string("payload-" + std::to_string(i))); }

void fill(AuditLog& log, int n) {
  for (int i = 0; i < n; ++i) log.append(PayloadKind::kConfig, payload(i));
}

std::filesystem::path segment0(const TempDir& dir) { return dir / "segment-0.log"; }

}  // namespace

TEST_CASE("genesis and chain links") {
  TempDir dir;
  AuditLog log(dir.path());
  CHECK(compute_entry_hash(zero_digest(), "").hex() ==
        "60e05bd1b195af2f94112fa7197a5c88289058840ce7c6df9693756bc6250f55");
  // Persisted payloads must be canonical records.
  CHECK_THROWS(log.append(PayloadKind::kConfig, ""));
  CHECK(log.size() == 0);
  const AuditEntry first = log.append(PayloadKind::kConfig, payload(0));
  CHECK(first.index == 0);
  CHECK(first.prev_hash == zero_digest());
  CHECK(first.entry_hash == compute_entry_hash(zero_digest(), payload(0)));
  const AuditEntry second = log.append(PayloadKind::kConfig, payload(1));
  CHECK(second.index == 1);
  CHECK(second.prev_hash == first.entry_hash);
  CHECK(second.entry_hash == compute_entry_hash(first.entry_hash, payload(1)));
  CHECK(log.head() == second.entry_hash);
  CHECK(*read_head(dir.path()) == second.entry_hash);
}

TEST_CASE("clean log of 100 entries verifies and reopens") {
  TempDir dir;
  {
    AuditLog log(dir.path(), 30);
    fill(log, 100);
  }
  const ChainStatus status = verify_chain(dir.path());
  CHECK(status.ok);
  CHECK(status.entries == 100);
  AuditLog reopened(dir.path(), 30);
  CHECK(reopened.size() == 100);
  CHECK(read_entries(dir.path()).size() == 100);
}

TEST_CASE("flipping a byte in entry 17 reports index 17") {
  TempDir dir;
  {
    AuditLog log(dir.path());
    fill(log, 100);
  }
  std::string text = testutil::slurp(segment0(dir));
  const auto pos = text.find("payload-17\"");
  REQUIRE(pos != std::string::npos);
  text[pos] = 'q';
  testutil::spit(segment0(dir), text);
  const ChainStatus status = verify_chain(dir.path());
  CHECK_FALSE(status.ok);
  REQUIRE(status.first_bad_index.has_value());
  CHECK(*status.first_bad_index == 17);
  CHECK(status.entries == 17);
  CHECK_THROWS_AS(read_entries(dir.path()), AuditIntegrityError);
  CHECK_THROWS_AS(AuditLog(dir.path()), AuditIntegrityError);
}

TEST_CASE("truncation keeps the prefix valid but breaks HEAD") {
  TempDir dir;
  {
    AuditLog log(dir.path());
    fill(log, 10);
  }
  std::string text = testutil::slurp(segment0(dir));
  text.pop_back();
  text = text.substr(0, text.rfind('\n') + 1);
  testutil::spit(segment0(dir), text);
  const ChainStatus status = verify_chain(dir.path());
  CHECK(status.ok);
  CHECK(status.entries == 9);
  CHECK(*read_head(dir.path()) != status.last_hash);
}

TEST_CASE("in-memory verification") {
  TempDir dir;
  AuditLog log(dir.path());
  fill(log, 5);
  auto entries = log.entries();
  CHECK(verify_entries(entries).ok);
  entries[3].payload += " ";
  const auto status = verify_entries(entries);
  CHECK_FALSE(status.ok);
  CHECK(*status.first_bad_index == 3);
}

TEST_CASE("entry lines round trip") {
  TempDir dir;
  AuditLog log(dir.path());
  const auto e = log.append(PayloadKind::kRegression, payload(3));
  CHECK(decode_entry_line(encode_entry_line(e)) == e);
  CHECK_THROWS(decode_entry_line("{}"));
}

TEST_CASE("unreadable directory is an I/O error") {
  CHECK_THROWS_AS(verify_chain("/nonexistent/skillaudit/audit"), AuditIoError);
}

TEST_CASE("concurrent appends stay a single chain") {
  TempDir dir;
  AuditLog log(dir.path(), 50);
  std::vector<std::thread> threads;
  for (int t = 0; t < 4; ++t) {
    threads.emplace_back([&log, t] {
      for (int i = 0; i < 25; ++i) log.append(PayloadKind::kConfig, payload(t * 100 + i));
    });
  }
  for (auto& th : threads) th.join();
  CHECK(log.size() == 100);
  const auto status = verify_chain(dir.path());
  CHECK(status.ok);
  CHECK(status.entries == 100);
  CHECK(status.last_hash == log.head());
}

TEST_CASE("evidence lookup by bundle hash") {
  TempDir dir;
  AuditLog log(dir.path());
  EvidenceBundle b;
  b.bundle_hash = hash_bytes("bundle");
  log.append(PayloadKind::kEvidence, canonical_encode(b));
  CHECK(log.find_evidence(b.bundle_hash).has_value());
  CHECK_FALSE(log.find_evidence(hash_bytes("other")).has_value());
}
