#pragma once

// Hash-chained append-only audit log.
//
// Layout: <dir>/segment-<k>.log holds one canonical entry per line,
// <dir>/HEAD holds the latest entry_hash. entry_hash covers the previous
// entry's hash (ASCII hex) followed by the payload bytes; the genesis
// predecessor is 64 ASCII zeros.

#include <cstdint>
#include <filesystem>
#include <map>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "skillaudit/digest.h"

namespace skillaudit {

enum class PayloadKind { kEvidence, kPromotion, kRetirement, kRegression, kConfig };
std::string_view to_string(PayloadKind kind);

struct AuditEntry {
  std::uint64_t index = 0;
  Digest prev_hash;
  PayloadKind payload_kind = PayloadKind::kConfig;
  std::string payload;  // canonical bytes of a record
  Digest entry_hash;

  bool operator==(const AuditEntry&) const = default;
};

Digest compute_entry_hash(const Digest& prev_hash, std::string_view payload);

/// Storage failures. Nothing is appended when one is thrown.
class AuditIoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// The persisted chain does not verify.
class AuditIntegrityError : public std::runtime_error {
 public:
  AuditIntegrityError(std::uint64_t index, const std::string& what)
      : std::runtime_error(what), index_(index) {}
  std::uint64_t index() const { return index_; }

 private:
  std::uint64_t index_;
};

struct ChainStatus {
  bool ok = true;
  std::optional<std::uint64_t> first_bad_index;
  std::string detail;
  std::uint64_t entries = 0;  // entries read before the first bad one
  Digest last_hash;           // entry_hash of the last good entry (zeros if none)
};

/// Recomputes every entry hash and link. Throws AuditIoError when the
/// directory or a segment cannot be read.
ChainStatus verify_chain(const std::filesystem::path& dir);

/// Same check over in-memory entries.
ChainStatus verify_entries(const std::vector<AuditEntry>& entries);

/// Decodes every entry after a successful verify_chain; throws
/// AuditIntegrityError when the chain does not verify.
std::vector<AuditEntry> read_entries(const std::filesystem::path& dir);

/// Reads audit/HEAD; nullopt when absent.
std::optional<Digest> read_head(const std::filesystem::path& dir);

/// Single-writer handle. Appends are serialized by an internal mutex and are
/// durable (fsync) before append returns.
class AuditLog {
 public:
  /// Opens an existing log (verifying it) or creates an empty one.
  explicit AuditLog(std::filesystem::path dir, std::size_t entries_per_segment = 1000);

  AuditLog(const AuditLog&) = delete;
  AuditLog& operator=(const AuditLog&) = delete;

  AuditEntry append(PayloadKind kind, std::string payload);

  std::vector<AuditEntry> entries() const;
  std::size_t size() const;
  Digest head() const;
  const std::filesystem::path& dir() const { return dir_; }

  /// Looks up an EVIDENCE entry by the bundle_hash field of its payload.
  std::optional<AuditEntry> find_evidence(const Digest& bundle_hash) const;

 private:
  std::filesystem::path segment_path(std::uint64_t index) const;
  void write_head(const Digest& head);

  std::filesystem::path dir_;
  std::size_t entries_per_segment_;
  mutable std::mutex mu_;
  std::vector<AuditEntry> entries_;
  std::map<Digest, std::size_t> evidence_index_;
};

Json to_canon(PayloadKind kind);
void from_canon(const Json& j, PayloadKind& out);

/// One persisted line. The payload is embedded as a canonical object.
std::string encode_entry_line(const AuditEntry& entry);
AuditEntry decode_entry_line(std::string_view line);

}  // namespace skillaudit
