#pragma once

// Append-only audit log. Every inbound message, every bot output, every timer
// firing and every state change (charter, report, session, dialog) becomes one
// EventRecord. There is no update or delete.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <json.hpp>

#include "explorebot/chat.hpp"
#include "explorebot/ids.hpp"

namespace explorebot {

enum class Direction { inbound, outbound, internal };

enum class PayloadKind {
  command,
  invalid_command,
  flow_reply,
  plain,
  reply,
  prompt,
  reminder,
  suggestion,
  system,
  timer,
};

std::string_view to_string(Direction d) noexcept;
std::string_view to_string(PayloadKind k) noexcept;
std::optional<Direction> direction_from_string(std::string_view s) noexcept;
std::optional<PayloadKind> payload_kind_from_string(std::string_view s) noexcept;

/// Who produced a record: the bot, or a tester identified by user id.
struct Actor {
  std::optional<UserId> tester;  // empty = bot

  static Actor bot() { return {}; }
  static Actor from_tester(UserId user) { return Actor{std::move(user)}; }
  bool is_bot() const noexcept { return !tester.has_value(); }

  friend bool operator==(const Actor&, const Actor&) = default;
};

struct EventRecord {
  std::uint64_t offset = 0;  // assigned by the store
  Timestamp timestamp{};
  ChannelId channel;
  std::optional<SessionId> session;
  Actor actor;
  Direction direction = Direction::inbound;
  PayloadKind payload = PayloadKind::plain;
  std::string text;
  std::vector<Attachment> attachments;
  std::optional<FlowId> flow;
  std::optional<std::uint64_t> correlation;  // inbound record this one responds to
  std::optional<std::string> item_id;        // suggestion source
  nlohmann::json data;                       // structured detail of internal records; null otherwise

  friend bool operator==(const EventRecord&, const EventRecord&) = default;
};

class InvalidRecord : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Raised when the backing storage cannot persist a record.
class StoreError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Throws InvalidRecord when a field invariant is violated.
void validate_record(const EventRecord& record);

inline constexpr int kAuditSchemaVersion = 1;
inline constexpr std::string_view kAuditSchemaName = "explorebot.audit";

nlohmann::json attachments_to_json(const std::vector<Attachment>& attachments);
std::vector<Attachment> attachments_from_json(const nlohmann::json& list);

nlohmann::json to_json(const EventRecord& record);
EventRecord record_from_json(const nlohmann::json& j);
/// One canonical line (no trailing newline).
std::string to_line(const EventRecord& record);
/// The header line heading every audit file.
std::string audit_header_line();

/// Reads an audit file written by JsonlEventStore (or any header + records file).
std::vector<EventRecord> read_audit_log(const std::filesystem::path& path);
/// Header plus one line per record; the exact bytes a JsonlEventStore writes.
std::string serialize_audit_log(const std::vector<EventRecord>& records);

struct AllRecords {};
struct BySession {
  SessionId id;
};
struct ByChannel {
  ChannelId id;
};
/// Half-open [begin, end).
struct OffsetRange {
  std::uint64_t begin = 0;
  std::uint64_t end = 0;
};

using Selector = std::variant<AllRecords, BySession, ByChannel, OffsetRange>;

class EventStore {
 public:
  virtual ~EventStore() = default;
  /// Validates, assigns the next offset and persists. Returns the offset.
  virtual std::uint64_t append(EventRecord record) = 0;
  virtual std::vector<EventRecord> query(const Selector& selector) const = 0;
  virtual std::size_t size() const = 0;
};

class MemoryEventStore : public EventStore {
 public:
  std::uint64_t append(EventRecord record) override;
  std::vector<EventRecord> query(const Selector& selector) const override;
  std::size_t size() const override { return records_.size(); }
  const std::vector<EventRecord>& records() const noexcept { return records_; }

 protected:
  /// Offset the next append will receive.
  std::uint64_t next_offset() const noexcept { return records_.size(); }
  void index(EventRecord record);

 private:
  std::vector<EventRecord> records_;
  std::map<std::string, std::vector<std::size_t>> by_session_;
  std::map<std::string, std::vector<std::size_t>> by_channel_;
};

/// Line-delimited JSON file: a schema header followed by one record per line.
/// Each append is flushed before it returns. Reopening an existing file resumes
/// after its last offset.
class JsonlEventStore : public MemoryEventStore {
 public:
  explicit JsonlEventStore(std::filesystem::path path);
  std::uint64_t append(EventRecord record) override;
  const std::filesystem::path& path() const noexcept { return path_; }

 private:
  std::filesystem::path path_;
  std::ofstream out_;
};

}  // namespace explorebot
