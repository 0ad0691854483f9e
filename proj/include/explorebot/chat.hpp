#pragma once

// Message and command vocabulary shared by the engine and the gateway.

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "explorebot/ids.hpp"

namespace explorebot {

enum class MediaKind { image, file };

std::string_view to_string(MediaKind kind) noexcept;
std::optional<MediaKind> media_kind_from_string(std::string_view s) noexcept;
/// Guesses image/file from the filename extension.
MediaKind media_kind_for_filename(std::string_view filename);

struct Attachment {
  std::string filename;
  MediaKind media_kind = MediaKind::file;
  std::string content_ref;  // URL or upload store key
  std::uint64_t size_bytes = 0;

  friend bool operator==(const Attachment&, const Attachment&) = default;
};

struct InboundMessage {
  ChannelId channel;
  UserId user;
  std::string text;
  std::vector<Attachment> attachments;
  Timestamp timestamp{};
};

enum class CommandName { commands, manual, charter, start, stop, report, help };

inline constexpr std::array kAllCommands = {
    CommandName::commands, CommandName::manual, CommandName::charter, CommandName::start,
    CommandName::stop,     CommandName::report, CommandName::help,
};

/// Keyword without the '?' prefix, e.g. "report".
std::string_view keyword(CommandName name) noexcept;
std::optional<CommandName> command_from_keyword(std::string_view word) noexcept;

struct Command {
  CommandName name;
  std::optional<std::string> argument;
  friend bool operator==(const Command&, const Command&) = default;
};
struct InvalidCommand {
  std::string raw;
  friend bool operator==(const InvalidCommand&, const InvalidCommand&) = default;
};
struct FlowReply {
  std::string text;
  friend bool operator==(const FlowReply&, const FlowReply&) = default;
};
struct Plain {
  std::string text;
  friend bool operator==(const Plain&, const Plain&) = default;
};

using ParsedInput = std::variant<Command, InvalidCommand, FlowReply, Plain>;

/// Total and deterministic. Text whose first non-blank character is '?' is a
/// command (case-insensitive keyword match) or an invalid command; anything
/// else is a flow reply when a dialog is waiting for input, plain chat otherwise.
ParsedInput parse_message(std::string_view text, bool awaiting_flow_input);

std::string render_command_list();

/// Step-by-step procedure text shown by ?manual. Loaded once at startup.
class Manual {
 public:
  /// Throws std::invalid_argument for blank content.
  explicit Manual(std::string text);
  const std::string& text() const noexcept { return text_; }

 private:
  std::string text_;
};

/// Throws std::runtime_error when the file is missing or blank.
Manual load_manual(const std::string& path);
std::string render_manual(const Manual& manual);

enum class ActionKind { reply, prompt, reminder, suggestion, system_notice };

std::string_view to_string(ActionKind kind) noexcept;

struct OutboundAction {
  ActionKind kind = ActionKind::reply;
  ChannelId channel;
  std::string text;
  std::vector<Attachment> attachments;
  std::optional<FlowId> flow;          // set on prompts, and on replies that open a dialog
  std::optional<std::string> item_id;  // knowledge item behind a suggestion

  friend bool operator==(const OutboundAction&, const OutboundAction&) = default;
};

}  // namespace explorebot
