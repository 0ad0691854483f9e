#include "explorebot/chat.hpp"

#include <cctype>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "explorebot/text.hpp"

namespace explorebot {

std::string_view to_string(MediaKind kind) noexcept {
  return kind == MediaKind::image ? "image" : "file";
}

std::optional<MediaKind> media_kind_from_string(std::string_view s) noexcept {
  if (s == "image") return MediaKind::image;
  if (s == "file") return MediaKind::file;
  return std::nullopt;
}

MediaKind media_kind_for_filename(std::string_view filename) {
  const auto dot = filename.rfind('.');
  if (dot == std::string_view::npos) return MediaKind::file;
  const std::string ext = text::to_lower(filename.substr(dot + 1));
  for (std::string_view image_ext : {"png", "jpg", "jpeg", "gif", "bmp", "webp"}) {
    if (ext == image_ext) return MediaKind::image;
  }
  return MediaKind::file;
}

std::string_view keyword(CommandName name) noexcept {
  switch (name) {
    case CommandName::commands: return "commands";
    case CommandName::manual: return "manual";
    case CommandName::charter: return "charter";
    case CommandName::start: return "start";
    case CommandName::stop: return "stop";
    case CommandName::report: return "report";
    case CommandName::help: return "help";
  }
  return "";
}

std::optional<CommandName> command_from_keyword(std::string_view word) noexcept {
  for (CommandName name : kAllCommands) {
    if (text::iequals(word, keyword(name))) return name;
  }
  return std::nullopt;
}

ParsedInput parse_message(std::string_view raw, bool awaiting_flow_input) {
  const std::string_view trimmed = text::trim(raw);
  if (!trimmed.empty() && trimmed.front() == '?') {
    std::string_view rest = trimmed.substr(1);
    std::size_t end = 0;
    while (end < rest.size() && !std::isspace(static_cast<unsigned char>(rest[end]))) ++end;
    const std::string_view word = rest.substr(0, end);
    const auto name = command_from_keyword(word);
    if (!name) return InvalidCommand{std::string(trimmed)};
    const std::string_view arg = text::trim(rest.substr(end));
    Command command{*name, std::nullopt};
    if (!arg.empty()) command.argument = std::string(arg);
    return command;
  }
  if (awaiting_flow_input && !trimmed.empty()) return FlowReply{std::string(trimmed)};
  return Plain{std::string(trimmed)};
}

namespace {

std::string_view describe(CommandName name) {
  switch (name) {
    case CommandName::commands: return "show this list of commands";
    case CommandName::manual: return "step-by-step description of how test sessions work";
    case CommandName::charter: return "register a test charter (name, app, goals, attachments)";
    case CommandName::start: return "start a time-boxed test session";
    case CommandName::stop: return "end the running test session early";
    case CommandName::report: return "report a bug or issue found during the session";
    case CommandName::help: return "curated exploratory testing knowledge (?help <topic>)";
  }
  return "";
}

}  // namespace

std::string render_command_list() {
  std::string out = "Available commands:";
  for (CommandName name : kAllCommands) {
    out += "\n?";
    out += keyword(name);
    out += " - ";
    out += describe(name);
  }
  return out;
}

Manual::Manual(std::string text) : text_(std::move(text)) {
  if (text::trim(text_).empty()) throw std::invalid_argument("manual content is empty");
}

Manual load_manual(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read manual file '" + path + "'");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  std::string content(text::trim(buffer.str()));
  if (content.empty()) throw std::runtime_error("manual file '" + path + "' is empty");
  return Manual(std::move(content));
}

std::string render_manual(const Manual& manual) { return manual.text(); }

std::string_view to_string(ActionKind kind) noexcept {
  switch (kind) {
    case ActionKind::reply: return "reply";
    case ActionKind::prompt: return "prompt";
    case ActionKind::reminder: return "reminder";
    case ActionKind::suggestion: return "suggestion";
    case ActionKind::system_notice: return "system";
  }
  return "";
}

}  // namespace explorebot
