#pragma once

// Versioned JSON frame protocol spoken over WebSocket (one frame per text
// message). Schema: docs/protocol.md.

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "explorebot/chat.hpp"

namespace explorebot::gateway {

inline constexpr int kProtocolVersion = 1;
inline constexpr std::size_t kDefaultMaxFrameBytes = 64 * 1024;

enum class FrameType { hello, message, action, error, ping };

std::string_view to_string(FrameType type) noexcept;
std::optional<FrameType> frame_type_from_string(std::string_view s) noexcept;

/// Optional string fields are never empty in a valid frame; the encoder omits
/// empty strings, empty attachment lists and absent optionals.
struct WireFrame {
  FrameType type = FrameType::message;
  std::uint64_t seq = 0;
  std::string channel;
  std::string user;
  std::string text;
  std::vector<Attachment> attachments;
  std::optional<int> version;               // hello
  std::optional<std::string> action;        // action: reply, prompt, reminder, suggestion, system
  std::optional<std::string> flow;          // action
  std::optional<std::string> item;          // action (suggestions)
  std::optional<std::uint64_t> offset;      // action: audit offset of the delivered record
  std::optional<std::int64_t> remaining_ms; // action: time left in the active session
  std::optional<std::string> code;          // error

  friend bool operator==(const WireFrame&, const WireFrame&) = default;
};

/// Never throws. Malformed, oversized or unknown-type payloads come back as an
/// error frame whose `code` is malformed, oversized or unknown-type and whose
/// `text` is the diagnostic.
WireFrame decode_frame(std::string_view bytes, std::size_t max_bytes = kDefaultMaxFrameBytes);

std::string encode_frame(const WireFrame& frame);

WireFrame make_error_frame(std::string code, std::string message);

}  // namespace explorebot::gateway
