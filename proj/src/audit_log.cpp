#include "skillaudit/audit_log.h"

#include <fcntl.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>
#include <fstream>
#include <sstream>

namespace skillaudit {
namespace fs = std::filesystem;
namespace {

constexpr std::string_view kHeadFile = "HEAD";

std::string errno_text() { return std::strerror(errno); }

void write_all(int fd, std::string_view data, const fs::path& path) {
  std::size_t done = 0;
  while (done < data.size()) {
    const ssize_t n = ::write(fd, data.data() + done, data.size() - done);
    if (n < 0) {
      if (errno == EINTR) continue;
      throw AuditIoError("write to " + path.string() + " failed: " + errno_text());
    }
    done += static_cast<std::size_t>(n);
  }
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw AuditIoError("cannot read " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  if (in.bad()) throw AuditIoError("error reading " + path.string());
  return buf.str();
}

fs::path segment_file(const fs::path& dir, std::uint64_t segment) {
  return dir / ("segment-" + std::to_string(segment) + ".log");
}

// Splits the concatenated segments into lines; a trailing unterminated
// fragment is kept as a line so it fails decoding at its own index.
std::vector<std::string> read_lines(const fs::path& dir) {
  std::error_code ec;
  if (!fs::is_directory(dir, ec)) throw AuditIoError("audit directory " + dir.string() + " is not readable");
  std::vector<std::string> lines;
  for (std::uint64_t k = 0;; ++k) {
    const fs::path path = segment_file(dir, k);
    if (!fs::exists(path, ec)) break;
    const std::string text = read_file(path);
    std::size_t start = 0;
    while (start < text.size()) {
      const std::size_t nl = text.find('\n', start);
      if (nl == std::string::npos) {
        lines.push_back(text.substr(start) + "<unterminated>");
        break;
      }
      lines.push_back(text.substr(start, nl - start));
      start = nl + 1;
    }
  }
  return lines;
}

ChainStatus check_entry(ChainStatus status, const AuditEntry& entry, std::uint64_t expected_index) {
  const auto bad = [&](const std::string& why) {
    status.ok = false;
    status.first_bad_index = expected_index;
    status.detail = why;
    return status;
  };
  if (entry.index != expected_index) {
    return bad("index " + std::to_string(entry.index) + " where " + std::to_string(expected_index) +
               " was expected");
  }
  if (entry.prev_hash != status.last_hash) return bad("prev_hash does not link to the previous entry");
  if (compute_entry_hash(entry.prev_hash, entry.payload) != entry.entry_hash) {
    return bad("entry_hash does not match recomputation");
  }
  status.last_hash = entry.entry_hash;
  status.entries = expected_index + 1;
  return status;
}

}  // namespace

std::string_view to_string(PayloadKind kind) {
  switch (kind) {
    case PayloadKind::kEvidence: return "EVIDENCE";
    case PayloadKind::kPromotion: return "PROMOTION";
    case PayloadKind::kRetirement: return "RETIREMENT";
    case PayloadKind::kRegression: return "REGRESSION";
    case PayloadKind::kConfig: return "CONFIG";
  }
  throw std::logic_error("unhandled payload kind");
}

Json to_canon(PayloadKind kind) { return Json(std::string(to_string(kind))); }

void from_canon(const Json& j, PayloadKind& out) {
  const std::string name = decode_string(j);
  for (const auto k : {PayloadKind::kEvidence, PayloadKind::kPromotion, PayloadKind::kRetirement,
                       PayloadKind::kRegression, PayloadKind::kConfig}) {
    if (to_string(k) == name) {
      out = k;
      return;
    }
  }
  throw DecodeError("", "unknown payload kind '" + name + "'");
}

Digest compute_entry_hash(const Digest& prev_hash, std::string_view payload) {
  std::string data = prev_hash.hex();
  data.append(payload);
  return hash_bytes(data);
}

std::string encode_entry_line(const AuditEntry& entry) {
  Json j = Json::object();
  j["index"] = entry.index;
  j["prev_hash"] = to_canon(entry.prev_hash);
  j["payload_kind"] = to_canon(entry.payload_kind);
  j["payload"] = parse_canonical(entry.payload);
  j["entry_hash"] = to_canon(entry.entry_hash);
  return canonical_dump(j);
}

AuditEntry decode_entry_line(std::string_view line) {
  const Json j = parse_canonical(line);
  if (!j.is_object() || j.size() != 5) throw DecodeError("", "audit entry must have exactly five fields");
  AuditEntry entry;
  read_field(j, "index", entry.index);
  read_field(j, "prev_hash", entry.prev_hash);
  read_field(j, "payload_kind", entry.payload_kind);
  entry.payload = canonical_dump(field(j, "payload"));
  read_field(j, "entry_hash", entry.entry_hash);
  if (encode_entry_line(entry) != line) throw DecodeError("", "audit entry is not in canonical field order");
  return entry;
}

ChainStatus verify_entries(const std::vector<AuditEntry>& entries) {
  ChainStatus status;
  for (std::uint64_t i = 0; i < entries.size(); ++i) {
    status = check_entry(status, entries[i], i);
    if (!status.ok) return status;
  }
  return status;
}

ChainStatus verify_chain(const fs::path& dir) {
  const std::vector<std::string> lines = read_lines(dir);
  ChainStatus status;
  for (std::uint64_t i = 0; i < lines.size(); ++i) {
    AuditEntry entry;
    try {
      entry = decode_entry_line(lines[i]);
    } catch (const DecodeError& e) {
      status.ok = false;
      status.first_bad_index = i;
      status.detail = e.what();
      return status;
    }
    status = check_entry(status, entry, i);
    if (!status.ok) return status;
  }
  return status;
}

std::vector<AuditEntry> read_entries(const fs::path& dir) {
  const ChainStatus status = verify_chain(dir);
  if (!status.ok) {
    throw AuditIntegrityError(*status.first_bad_index, "chain fails at index " +
                                                           std::to_string(*status.first_bad_index) + ": " + status.detail);
  }
  std::vector<AuditEntry> entries;
  for (const auto& line : read_lines(dir)) entries.push_back(decode_entry_line(line));
  return entries;
}

std::optional<Digest> read_head(const fs::path& dir) {
  const fs::path path = dir / kHeadFile;
  std::error_code ec;
  if (!fs::exists(path, ec)) return std::nullopt;
  std::string text = read_file(path);
  while (!text.empty() && (text.back() == '\n' || text.back() == '\r')) text.pop_back();
  if (!Digest::is_valid_hex(text)) throw AuditIntegrityError(0, "HEAD does not hold a digest");
  return Digest::from_hex(text);
}

AuditLog::AuditLog(fs::path dir, std::size_t entries_per_segment)
    : dir_(std::move(dir)), entries_per_segment_(entries_per_segment == 0 ? 1 : entries_per_segment) {
  std::error_code ec;
  if (!fs::exists(dir_, ec)) {
    fs::create_directories(dir_, ec);
    if (ec) throw AuditIoError("cannot create audit directory " + dir_.string() + ": " + ec.message());
  }
  const ChainStatus status = verify_chain(dir_);
  if (!status.ok) {
    throw AuditIntegrityError(*status.first_bad_index, "audit log at " + dir_.string() + " fails verification at index " +
                                                           std::to_string(*status.first_bad_index) + ": " + status.detail);
  }
  const auto head = read_head(dir_);
  if (status.entries > 0 && (!head || *head != status.last_hash)) {
    throw AuditIntegrityError(status.entries, "HEAD does not match the last entry (truncated log?)");
  }
  for (const auto& line : read_lines(dir_)) {
    AuditEntry entry = decode_entry_line(line);
    if (entry.payload_kind == PayloadKind::kEvidence) {
      evidence_index_[read_field<Digest>(parse_canonical(entry.payload), "bundle_hash")] = entries_.size();
    }
    entries_.push_back(std::move(entry));
  }
}

fs::path AuditLog::segment_path(std::uint64_t index) const {
  return segment_file(dir_, index / entries_per_segment_);
}

void AuditLog::write_head(const Digest& head) {
  const fs::path tmp = dir_ / "HEAD.tmp";
  const int fd = ::open(tmp.c_str(), O_WRONLY | O_CREAT | O_TRUNC, 0644);
  if (fd < 0) throw AuditIoError("cannot write " + tmp.string() + ": " + errno_text());
  try {
    write_all(fd, head.hex() + "\n", tmp);
    if (::fsync(fd) != 0) throw AuditIoError("fsync of " + tmp.string() + " failed: " + errno_text());
  } catch (...) {
    ::close(fd);
    throw;
  }
  ::close(fd);
  std::error_code ec;
  fs::rename(tmp, dir_ / kHeadFile, ec);
  if (ec) throw AuditIoError("cannot replace HEAD: " + ec.message());
}

AuditEntry AuditLog::append(PayloadKind kind, std::string payload) {
  std::optional<Digest> bundle_hash;
  try {
    const Json tree = parse_canonical(payload);
    if (kind == PayloadKind::kEvidence) bundle_hash = read_field<Digest>(tree, "bundle_hash");
  } catch (const DecodeError& e) {
    throw std::invalid_argument(std::string("audit payload rejected: ") + e.what());
  }

  std::lock_guard lock(mu_);
  AuditEntry entry;
  entry.index = entries_.size();
  entry.prev_hash = entries_.empty() ? zero_digest() : entries_.back().entry_hash;
  entry.payload_kind = kind;
  entry.payload = std::move(payload);
  entry.entry_hash = compute_entry_hash(entry.prev_hash, entry.payload);
  const std::string line = encode_entry_line(entry) + "\n";

  const fs::path path = segment_path(entry.index);
  const int fd = ::open(path.c_str(), O_WRONLY | O_CREAT | O_APPEND, 0644);
  if (fd < 0) throw AuditIoError("cannot open " + path.string() + ": " + errno_text());
  const off_t before = ::lseek(fd, 0, SEEK_END);
  try {
    write_all(fd, line, path);
    if (::fsync(fd) != 0) throw AuditIoError("fsync of " + path.string() + " failed: " + errno_text());
    write_head(entry.entry_hash);
  } catch (...) {
    // Roll the segment back so no partial entry survives.
    if (before >= 0 && ::ftruncate(fd, before) == 0) ::fsync(fd);
    ::close(fd);
    throw;
  }
  ::close(fd);

  if (bundle_hash) evidence_index_[*bundle_hash] = entries_.size();
  entries_.push_back(entry);
  return entry;
}

std::vector<AuditEntry> AuditLog::entries() const {
  std::lock_guard lock(mu_);
  return entries_;
}

std::size_t AuditLog::size() const {
  std::lock_guard lock(mu_);
  return entries_.size();
}

Digest AuditLog::head() const {
  std::lock_guard lock(mu_);
  return entries_.empty() ? zero_digest() : entries_.back().entry_hash;
}

std::optional<AuditEntry> AuditLog::find_evidence(const Digest& bundle_hash) const {
  std::lock_guard lock(mu_);
  const auto it = evidence_index_.find(bundle_hash);
  if (it == evidence_index_.end()) return std::nullopt;
  return entries_[it->second];
}

}  // namespace skillaudit
