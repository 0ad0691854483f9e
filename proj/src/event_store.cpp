#include "explorebot/event_store.hpp"

#include <algorithm>
#include <sstream>

namespace explorebot {

using nlohmann::json;

namespace {

constexpr std::pair<Direction, std::string_view> kDirections[] = {
    {Direction::inbound, "inbound"}, {Direction::outbound, "outbound"}, {Direction::internal, "internal"}};

constexpr std::pair<PayloadKind, std::string_view> kPayloads[] = {
    {PayloadKind::command, "command"},   {PayloadKind::invalid_command, "invalid_command"},
    {PayloadKind::flow_reply, "flow_reply"}, {PayloadKind::plain, "plain"},
    {PayloadKind::reply, "reply"},       {PayloadKind::prompt, "prompt"},
    {PayloadKind::reminder, "reminder"}, {PayloadKind::suggestion, "suggestion"},
    {PayloadKind::system, "system"},     {PayloadKind::timer, "timer"},
};

template <typename E, std::size_t N>
std::string_view name_of(const std::pair<E, std::string_view> (&table)[N], E value) noexcept {
  for (const auto& [e, name] : table) {
    if (e == value) return name;
  }
  return "";
}

template <typename E, std::size_t N>
std::optional<E> parse_name(const std::pair<E, std::string_view> (&table)[N], std::string_view s) noexcept {
  for (const auto& [e, name] : table) {
    if (name == s) return e;
  }
  return std::nullopt;
}

bool is_tester_kind(PayloadKind k) {
  return k == PayloadKind::command || k == PayloadKind::invalid_command || k == PayloadKind::flow_reply ||
         k == PayloadKind::plain;
}

}  // namespace

std::string_view to_string(Direction d) noexcept { return name_of(kDirections, d); }
std::string_view to_string(PayloadKind k) noexcept { return name_of(kPayloads, k); }
std::optional<Direction> direction_from_string(std::string_view s) noexcept { return parse_name(kDirections, s); }
std::optional<PayloadKind> payload_kind_from_string(std::string_view s) noexcept { return parse_name(kPayloads, s); }

void validate_record(const EventRecord& r) {
  if (r.channel.empty()) throw InvalidRecord("record without channel");
  switch (r.direction) {
    case Direction::inbound:
      if (r.actor.is_bot()) throw InvalidRecord("inbound record must come from a tester");
      if (!is_tester_kind(r.payload)) throw InvalidRecord("inbound record with bot payload kind");
      break;
    case Direction::outbound:
      if (!r.actor.is_bot()) throw InvalidRecord("outbound record must come from the bot");
      if (is_tester_kind(r.payload) || r.payload == PayloadKind::timer) {
        throw InvalidRecord("outbound record with tester payload kind");
      }
      if (r.payload == PayloadKind::reply && !r.correlation) {
        throw InvalidRecord("reply record without correlation_id");
      }
      if ((r.payload == PayloadKind::reminder || r.payload == PayloadKind::suggestion) && r.correlation) {
        throw InvalidRecord("reminder/suggestion record must not carry a correlation_id");
      }
      break;
    case Direction::internal:
      if (r.payload != PayloadKind::timer && r.payload != PayloadKind::system) {
        throw InvalidRecord("internal record must be timer or system");
      }
      break;
  }
}

json attachments_to_json(const std::vector<Attachment>& attachments) {
  json list = json::array();
  for (const auto& a : attachments) {
    list.push_back(
        {{"name", a.filename}, {"media", to_string(a.media_kind)}, {"ref", a.content_ref}, {"size", a.size_bytes}});
  }
  return list;
}

std::vector<Attachment> attachments_from_json(const json& list) {
  std::vector<Attachment> out;
  for (const auto& a : list) {
    const auto media = media_kind_from_string(a.at("media").get<std::string>());
    if (!media) throw InvalidRecord("unknown attachment media kind");
    out.push_back(
        {a.at("name").get<std::string>(), *media, a.at("ref").get<std::string>(), a.at("size").get<std::uint64_t>()});
  }
  return out;
}

json to_json(const EventRecord& r) {
  json j;
  j["offset"] = r.offset;
  j["ts"] = to_millis(r.timestamp);
  j["channel"] = r.channel.str();
  if (r.session) j["session"] = r.session->str();
  j["actor"] = r.actor.is_bot() ? "bot" : "tester";
  if (r.actor.tester) j["user"] = r.actor.tester->str();
  j["direction"] = to_string(r.direction);
  j["kind"] = to_string(r.payload);
  j["text"] = r.text;
  if (!r.attachments.empty()) j["attachments"] = attachments_to_json(r.attachments);
  if (r.flow) j["flow"] = r.flow->str();
  if (r.correlation) j["correlation"] = *r.correlation;
  if (r.item_id) j["item"] = *r.item_id;
  if (!r.data.is_null()) j["data"] = r.data;
  return j;
}

EventRecord record_from_json(const json& j) {
  try {
    EventRecord r;
    r.offset = j.at("offset").get<std::uint64_t>();
    r.timestamp = from_millis(j.at("ts").get<std::int64_t>());
    r.channel = ChannelId(j.at("channel").get<std::string>());
    if (j.contains("session")) r.session = SessionId(j["session"].get<std::string>());
    const auto actor = j.at("actor").get<std::string>();
    if (actor == "tester") {
      r.actor = Actor::from_tester(UserId(j.at("user").get<std::string>()));
    } else if (actor != "bot") {
      throw InvalidRecord("unknown actor '" + actor + "'");
    }
    const auto dir = direction_from_string(j.at("direction").get<std::string>());
    const auto kind = payload_kind_from_string(j.at("kind").get<std::string>());
    if (!dir || !kind) throw InvalidRecord("unknown direction or kind");
    r.direction = *dir;
    r.payload = *kind;
    r.text = j.at("text").get<std::string>();
    if (j.contains("attachments")) r.attachments = attachments_from_json(j["attachments"]);
    if (j.contains("flow")) r.flow = FlowId(j["flow"].get<std::string>());
    if (j.contains("correlation")) r.correlation = j["correlation"].get<std::uint64_t>();
    if (j.contains("item")) r.item_id = j["item"].get<std::string>();
    if (j.contains("data")) r.data = j["data"];
    return r;
  } catch (const json::exception& e) {
    throw InvalidRecord(std::string("malformed audit record: ") + e.what());
  }
}

std::string to_line(const EventRecord& record) {
  return to_json(record).dump(-1, ' ', false, json::error_handler_t::replace);
}

std::string audit_header_line() {
  return json{{"schema", kAuditSchemaName}, {"version", kAuditSchemaVersion}}.dump();
}

std::string serialize_audit_log(const std::vector<EventRecord>& records) {
  std::string out = audit_header_line() + "\n";
  for (const auto& r : records) out += to_line(r) + "\n";
  return out;
}

std::vector<EventRecord> read_audit_log(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw StoreError("cannot read audit log '" + path.string() + "'");
  std::vector<EventRecord> records;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::parse_error& e) {
      throw InvalidRecord(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
    if (j.contains("schema")) {
      if (j["schema"] != kAuditSchemaName || j.value("version", 0) != kAuditSchemaVersion) {
        throw InvalidRecord(path.string() + ": unsupported audit schema " + j.dump());
      }
      continue;
    }
    records.push_back(record_from_json(j));
  }
  return records;
}

void MemoryEventStore::index(EventRecord record) {
  const std::size_t pos = records_.size();
  if (record.session) by_session_[record.session->str()].push_back(pos);
  by_channel_[record.channel.str()].push_back(pos);
  records_.push_back(std::move(record));
}

std::uint64_t MemoryEventStore::append(EventRecord record) {
  validate_record(record);
  record.offset = next_offset();
  const auto offset = record.offset;
  index(std::move(record));
  return offset;
}

std::vector<EventRecord> MemoryEventStore::query(const Selector& selector) const {
  auto pick = [this](const std::map<std::string, std::vector<std::size_t>>& idx, const std::string& key) {
    std::vector<EventRecord> out;
    if (auto it = idx.find(key); it != idx.end()) {
      out.reserve(it->second.size());
      for (std::size_t pos : it->second) out.push_back(records_[pos]);
    }
    return out;
  };
  return std::visit(
      [&](const auto& sel) -> std::vector<EventRecord> {
        using T = std::decay_t<decltype(sel)>;
        if constexpr (std::is_same_v<T, AllRecords>) {
          return records_;
        } else if constexpr (std::is_same_v<T, BySession>) {
          return pick(by_session_, sel.id.str());
        } else if constexpr (std::is_same_v<T, ByChannel>) {
          return pick(by_channel_, sel.id.str());
        } else {
          const auto n = static_cast<std::uint64_t>(records_.size());
          const auto begin = std::min(sel.begin, n);
          const auto end = std::clamp(sel.end, begin, n);
          return {records_.begin() + static_cast<std::ptrdiff_t>(begin),
                  records_.begin() + static_cast<std::ptrdiff_t>(end)};
        }
      },
      selector);
}

JsonlEventStore::JsonlEventStore(std::filesystem::path path) : path_(std::move(path)) {
  const bool exists = std::filesystem::exists(path_) && std::filesystem::file_size(path_) > 0;
  if (exists) {
    for (auto& r : read_audit_log(path_)) {
      if (r.offset != next_offset()) {
        throw StoreError("audit log '" + path_.string() + "' has a gap at offset " + std::to_string(r.offset));
      }
      index(std::move(r));
    }
  }
  out_.open(path_, std::ios::app);
  if (!out_) throw StoreError("cannot open audit log '" + path_.string() + "' for appending");
  if (!exists) {
    out_ << audit_header_line() << '\n';
    out_.flush();
  }
}

std::uint64_t JsonlEventStore::append(EventRecord record) {
  validate_record(record);
  record.offset = next_offset();
  out_ << to_line(record) << '\n';
  out_.flush();
  if (!out_) throw StoreError("write to audit log '" + path_.string() + "' failed");
  const auto offset = record.offset;
  index(std::move(record));
  return offset;
}

}  // namespace explorebot
