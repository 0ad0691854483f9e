#pragma once

// Time-boxed test sessions on the virtual clock: remaining-time reminders and
// the randomized active-suggestion scheduler.

#include <chrono>
#include <cstdint>
#include <optional>
#include <random>
#include <stdexcept>
#include <string_view>
#include <vector>

#include "explorebot/ids.hpp"

namespace explorebot {

class Catalog;
struct KnowledgeItem;

/// Fractions of the session length at which a reminder is sent. The last one
/// (1.0) is the end-of-session notice.
struct ReminderPolicy {
  std::vector<double> fractions{0.5, 0.8, 1.0};

  /// Throws std::invalid_argument unless strictly increasing in (0, 1] ending at 1.0.
  void validate() const;
  friend bool operator==(const ReminderPolicy&, const ReminderPolicy&) = default;
};

struct SuggestionPolicy {
  std::chrono::seconds min_gap{180};
  std::chrono::seconds initial_delay{120};
  std::uint64_t seed = 0;

  void validate() const;
  friend bool operator==(const SuggestionPolicy&, const SuggestionPolicy&) = default;
};

/// Seedable and stable for a given build; tests assert determinism, not draws.
using SchedulerRng = std::mt19937_64;

enum class TimerKind { reminder_due, suggestion_due, session_expired };

std::string_view to_string(TimerKind kind) noexcept;

struct TimerEvent {
  TimerKind kind = TimerKind::reminder_due;
  double fraction = 0.0;  // reminder_due only
  SessionId session;
  Timestamp due_at{};

  friend bool operator==(const TimerEvent&, const TimerEvent&) = default;
};

enum class EndReason { expired, stopped };

std::string_view to_string(EndReason reason) noexcept;

struct Session {
  SessionId id;
  ChannelId channel;
  Timestamp started_at{};
  Millis duration{};
  ReminderPolicy reminder_policy;
  SuggestionPolicy suggestion_policy;
  std::optional<Timestamp> ended_at;
  std::optional<EndReason> end_reason;

  // Scheduler bookkeeping.
  std::size_t reminders_emitted = 0;
  std::optional<Timestamp> next_suggestion_at;
  bool expiry_emitted = false;
  SchedulerRng rng;       // suggestion timing
  SchedulerRng pick_rng;  // suggestion choice; separate so the clock granularity never changes the picks

  Timestamp ends_at() const noexcept { return started_at + duration; }
  Timestamp reminder_due_at(std::size_t index) const;
  Millis remaining(Timestamp now) const noexcept;

  friend bool operator==(const Session&, const Session&) = default;
};

class SessionError : public std::runtime_error {
 public:
  enum class Code { invalid_duration, already_active };
  SessionError(Code code, const std::string& message) : std::runtime_error(message), code_(code) {}
  Code code() const noexcept { return code_; }

 private:
  Code code_;
};

/// Longest session accepted, in minutes.
inline constexpr double kMaxSessionMinutes = 24 * 60;

/// Parses "15", "7.5" or "15 min". Returns nullopt unless a finite positive
/// number of minutes no larger than kMaxSessionMinutes.
std::optional<double> parse_duration_minutes(std::string_view text);

struct SessionRequest {
  SessionId id;
  ChannelId channel;
  double duration_minutes = 0;
  Timestamp now{};
  ReminderPolicy reminders;
  SuggestionPolicy suggestions;
  /// Mixed with the policy seed so consecutive sessions draw different timings.
  std::uint64_t stream = 0;
};

/// Throws SessionError::already_active when `active` holds a session and
/// SessionError::invalid_duration for a non-positive or oversized duration.
Session start_session(const SessionRequest& request, const std::optional<Session>& active);

/// Marks and returns every not-yet-emitted timer event due at or before `now`,
/// ordered by due time, with SessionExpired last. Suggestions falling at or
/// after the session end are dropped.
std::vector<TimerEvent> due_events(Session& session, Timestamp now);

/// A time in [last_emit + min_gap, last_emit + 2 * min_gap].
Timestamp next_suggestion_time(SchedulerRng& rng, const SuggestionPolicy& policy, Timestamp last_emit);

/// Uniform draw over the catalog; nullptr when the catalog is empty.
const KnowledgeItem* pick_suggestion(SchedulerRng& rng, const Catalog& catalog);

}  // namespace explorebot
