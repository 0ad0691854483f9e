#include "explorebot/gateway/wire.hpp"

#include <json.hpp>

#include "explorebot/event_store.hpp"

namespace explorebot::gateway {

using nlohmann::json;

namespace {

constexpr std::pair<FrameType, std::string_view> kFrameTypes[] = {
    {FrameType::hello, "hello"}, {FrameType::message, "message"}, {FrameType::action, "action"},
    {FrameType::error, "error"}, {FrameType::ping, "ping"},
};

struct Malformed {
  std::string why;
};

std::string string_field(const json& j, const char* key) {
  if (!j.contains(key)) return {};
  if (!j[key].is_string()) throw Malformed{std::string("field '") + key + "' must be a string"};
  return j[key].get<std::string>();
}

std::optional<std::string> optional_string(const json& j, const char* key) {
  auto s = string_field(j, key);
  if (s.empty()) return std::nullopt;
  return s;
}

template <typename T>
std::optional<T> optional_integer(const json& j, const char* key) {
  if (!j.contains(key)) return std::nullopt;
  const auto& v = j[key];
  if constexpr (std::is_unsigned_v<T>) {
    if (!v.is_number_unsigned()) throw Malformed{std::string("field '") + key + "' must be a non-negative integer"};
  } else {
    if (!v.is_number_integer()) throw Malformed{std::string("field '") + key + "' must be an integer"};
  }
  return v.get<T>();
}

}  // namespace

std::string_view to_string(FrameType type) noexcept {
  for (const auto& [t, name] : kFrameTypes) {
    if (t == type) return name;
  }
  return "";
}

std::optional<FrameType> frame_type_from_string(std::string_view s) noexcept {
  for (const auto& [t, name] : kFrameTypes) {
    if (name == s) return t;
  }
  return std::nullopt;
}

WireFrame make_error_frame(std::string code, std::string message) {
  WireFrame f;
  f.type = FrameType::error;
  f.code = std::move(code);
  f.text = std::move(message);
  return f;
}

WireFrame decode_frame(std::string_view bytes, std::size_t max_bytes) {
  if (bytes.size() > max_bytes) {
    return make_error_frame("oversized", "frame of " + std::to_string(bytes.size()) + " bytes exceeds the limit of " +
                                             std::to_string(max_bytes));
  }
  json j = json::parse(bytes, nullptr, /*allow_exceptions=*/false);
  if (j.is_discarded()) return make_error_frame("malformed", "frame is not valid JSON");
  if (!j.is_object()) return make_error_frame("malformed", "frame must be a JSON object");
  try {
    const auto type_name = string_field(j, "type");
    if (type_name.empty()) throw Malformed{"missing 'type'"};
    const auto type = frame_type_from_string(type_name);
    if (!type) return make_error_frame("unknown-type", "unknown frame type '" + type_name + "'");

    WireFrame f;
    f.type = *type;
    const auto seq = optional_integer<std::uint64_t>(j, "seq");
    if (!seq) throw Malformed{"missing 'seq'"};
    f.seq = *seq;
    f.channel = string_field(j, "channel");
    f.user = string_field(j, "user");
    f.text = string_field(j, "text");
    if (j.contains("attachments")) {
      if (!j["attachments"].is_array()) throw Malformed{"'attachments' must be an array"};
      try {
        f.attachments = attachments_from_json(j["attachments"]);
      } catch (const std::exception& e) {
        throw Malformed{std::string("bad attachment: ") + e.what()};
      }
    }
    f.version = optional_integer<int>(j, "version");
    f.action = optional_string(j, "action");
    f.flow = optional_string(j, "flow");
    f.item = optional_string(j, "item");
    f.offset = optional_integer<std::uint64_t>(j, "offset");
    f.remaining_ms = optional_integer<std::int64_t>(j, "remaining_ms");
    f.code = optional_string(j, "code");

    if (f.type == FrameType::hello && !f.version) throw Malformed{"hello frame needs 'version'"};
    if (f.type == FrameType::action && !f.action) throw Malformed{"action frame needs 'action'"};
    if (f.type == FrameType::error && !f.code) throw Malformed{"error frame needs 'code'"};
    return f;
  } catch (const Malformed& m) {
    return make_error_frame("malformed", m.why);
  }
}

std::string encode_frame(const WireFrame& f) {
  json j;
  j["type"] = to_string(f.type);
  j["seq"] = f.seq;
  if (!f.channel.empty()) j["channel"] = f.channel;
  if (!f.user.empty()) j["user"] = f.user;
  if (!f.text.empty()) j["text"] = f.text;
  if (!f.attachments.empty()) j["attachments"] = attachments_to_json(f.attachments);
  if (f.version) j["version"] = *f.version;
  if (f.action && !f.action->empty()) j["action"] = *f.action;
  if (f.flow && !f.flow->empty()) j["flow"] = *f.flow;
  if (f.item && !f.item->empty()) j["item"] = *f.item;
  if (f.offset) j["offset"] = *f.offset;
  if (f.remaining_ms) j["remaining_ms"] = *f.remaining_ms;
  if (f.code && !f.code->empty()) j["code"] = *f.code;
  return j.dump(-1, ' ', false, json::error_handler_t::replace);
}

}  // namespace explorebot::gateway
