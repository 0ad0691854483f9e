#pragma once

// Per-channel conversational state machine. handle_event is a pure transition:
// the same (state, event) always yields the same (state', actions, effects).
// Persisting records and delivering actions is the host's job (see host.hpp).

#include <map>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "explorebot/chat.hpp"
#include "explorebot/ids.hpp"
#include "explorebot/knowledge.hpp"
#include "explorebot/session.hpp"

namespace explorebot {

inline constexpr std::string_view kCancelKeyword = "cancel";
inline constexpr std::string_view kFinishKeyword = "done";

struct EngineConfig {
  std::string bot_name = "ExploreBot";
  ReminderPolicy reminders;
  SuggestionPolicy suggestions;
};

/// Immutable inputs shared by every channel: configuration, manual, catalog.
struct EngineContext {
  EngineConfig config;
  Manual manual;
  std::shared_ptr<const Catalog> catalog;

  /// Validates the policies; throws std::invalid_argument on bad configuration.
  EngineContext(EngineConfig config, Manual manual, std::shared_ptr<const Catalog> catalog);
};

enum class FlowKind { charter, report, start, help };

enum class FlowStep {
  charter_name,
  charter_app,
  charter_goals,
  charter_attachments,
  report_charter,
  report_type,
  report_description,
  report_attachments,
  start_duration,
  help_topic,
};

std::string_view to_string(FlowKind kind) noexcept;
std::string_view to_string(FlowStep step) noexcept;

struct FlowState {
  FlowId id;
  FlowKind kind = FlowKind::charter;
  FlowStep step = FlowStep::charter_name;
  std::map<std::string, std::string> collected;  // keyed by completed step
  std::vector<Attachment> attachments;
  std::optional<SessionId> session;  // report flows: the session active when the flow opened
  Timestamp started_at{};

  friend bool operator==(const FlowState&, const FlowState&) = default;
};

struct Charter {
  CharterId id;
  std::string name;
  std::string app_name;
  std::string goals;
  std::vector<Attachment> attachments;
  Timestamp created_at{};

  friend bool operator==(const Charter&, const Charter&) = default;
};

enum class ReportType { bug, issue };

std::string_view to_string(ReportType type) noexcept;
std::optional<ReportType> report_type_from_string(std::string_view s) noexcept;

struct Report {
  ReportId id;
  SessionId session;
  CharterId charter;
  ReportType type = ReportType::bug;
  std::string description;
  std::vector<Attachment> attachments;
  Timestamp reported_at{};
  UserId reporter;
  bool late = false;  // completed after its session had ended

  friend bool operator==(const Report&, const Report&) = default;
};

struct IdCounters {
  std::uint64_t charters = 0;
  std::uint64_t reports = 0;
  std::uint64_t sessions = 0;
  std::uint64_t flows = 0;
  friend bool operator==(const IdCounters&, const IdCounters&) = default;
};

struct EngineState {
  ChannelId channel;
  bool introduced = false;
  std::optional<FlowState> open_flow;
  std::vector<Charter> charters;  // registration order
  std::optional<Session> active_session;
  bool suggestion_pending = false;  // a suggestion came due while a dialog was open
  bool empty_catalog_noticed = false;
  IdCounters counters;

  explicit EngineState(ChannelId channel_id = {}) : channel(std::move(channel_id)) {}

  const Charter* find_charter(CharterId id) const noexcept;
  const Charter* find_charter_by_name(std::string_view name) const noexcept;

  friend bool operator==(const EngineState&, const EngineState&) = default;
};

// State changes worth an audit record of their own.
struct FlowOpened {
  FlowId flow;
  FlowKind kind;
};
struct FlowClosed {
  FlowId flow;
  FlowKind kind;
  bool completed = false;
};
struct CharterRegistered {
  Charter charter;
};
struct ReportFiled {
  Report report;
};
struct SessionStarted {
  SessionId session;
  Timestamp started_at;
  Millis duration;
};
struct SessionEnded {
  SessionId session;
  Timestamp ended_at;
  EndReason reason;
};

using Effect = std::variant<FlowOpened, FlowClosed, CharterRegistered, ReportFiled, SessionStarted, SessionEnded>;

using Event = std::variant<InboundMessage, TimerEvent>;

struct Transition {
  EngineState state;
  std::optional<ParsedInput> parsed;  // inbound events only
  std::vector<OutboundAction> actions;
  std::vector<Effect> effects;
};

Transition handle_event(const EngineContext& ctx, EngineState state, const Event& event);

// Dialog flows ---------------------------------------------------------------

struct FlowInput {
  std::string text;
  std::vector<Attachment> attachments;
};

/// The dialog collected everything it needs.
struct FlowResult {
  FlowState flow;
};
struct FlowCanceled {
  FlowState flow;
};

struct FlowAdvance {
  std::variant<FlowState, FlowResult, FlowCanceled> next;
  /// Next prompt or a re-prompt. Empty on completion: the completion reply
  /// names the persisted record's id, so the caller builds it.
  std::optional<OutboundAction> action;
};

FlowAdvance advance_flow(const EngineContext& ctx, FlowState flow, const FlowInput& input, const EngineState& context);

// Registration ---------------------------------------------------------------

class RegistrationError : public std::invalid_argument {
 public:
  enum class Code { empty_field, duplicate_name, unknown_charter, unknown_session };
  RegistrationError(Code code, const std::string& message) : std::invalid_argument(message), code_(code) {}
  Code code() const noexcept { return code_; }

 private:
  Code code_;
};

struct CharterDraft {
  std::string name;
  std::string app_name;
  std::string goals;
  std::vector<Attachment> attachments;
  Timestamp created_at{};
};

struct ReportDraft {
  SessionId session;
  CharterId charter;
  ReportType type = ReportType::bug;
  std::string description;
  std::vector<Attachment> attachments;
  Timestamp reported_at{};
  UserId reporter;
};

/// Throws RegistrationError on an empty field or a duplicate name.
std::pair<EngineState, CharterId> register_charter(EngineState state, const CharterDraft& draft);

/// Throws RegistrationError for an unknown charter or empty description. The
/// report is flagged late when its session is no longer the active one.
std::pair<EngineState, Report> file_report(EngineState state, const ReportDraft& draft);

/// First message the bot sends on a channel.
std::string introduction_text(const EngineConfig& config);

}  // namespace explorebot
