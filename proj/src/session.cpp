#include "explorebot/session.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "explorebot/knowledge.hpp"
#include "explorebot/text.hpp"

namespace explorebot {

void ReminderPolicy::validate() const {
  if (fractions.empty()) throw std::invalid_argument("reminder policy needs at least one fraction");
  double previous = 0.0;
  for (double f : fractions) {
    if (!(f > previous) || f > 1.0) {
      throw std::invalid_argument("reminder fractions must be strictly increasing within (0, 1]");
    }
    previous = f;
  }
  if (fractions.back() != 1.0) throw std::invalid_argument("last reminder fraction must be 1.0");
}

void SuggestionPolicy::validate() const {
  if (min_gap.count() <= 0) throw std::invalid_argument("suggestion min_gap must be positive");
  if (initial_delay.count() < 0) throw std::invalid_argument("suggestion initial_delay must be non-negative");
}

std::string_view to_string(TimerKind kind) noexcept {
  switch (kind) {
    case TimerKind::reminder_due: return "reminder_due";
    case TimerKind::suggestion_due: return "suggestion_due";
    case TimerKind::session_expired: return "session_expired";
  }
  return "";
}

std::string_view to_string(EndReason reason) noexcept {
  return reason == EndReason::expired ? "expired" : "stopped";
}

Timestamp Session::reminder_due_at(std::size_t index) const {
  const double offset = reminder_policy.fractions.at(index) * static_cast<double>(duration.count());
  return started_at + Millis{std::llround(offset)};
}

Millis Session::remaining(Timestamp now) const noexcept {
  const auto left = ends_at() - now;
  return left.count() > 0 ? std::chrono::duration_cast<Millis>(left) : Millis{0};
}

std::optional<double> parse_duration_minutes(std::string_view raw) {
  std::string s(text::trim(raw));
  for (std::string_view suffix : {"minutes", "minute", "mins", "min", "m"}) {
    const std::string lowered = text::to_lower(s);
    if (lowered.size() > suffix.size() && lowered.ends_with(suffix)) {
      s = std::string(text::trim(std::string_view(s).substr(0, s.size() - suffix.size())));
      break;
    }
  }
  if (s.empty()) return std::nullopt;
  std::size_t used = 0;
  double value = 0;
  try {
    value = std::stod(s, &used);
  } catch (const std::exception&) {
    return std::nullopt;
  }
  if (used != s.size() || !std::isfinite(value) || value <= 0 || value > kMaxSessionMinutes) return std::nullopt;
  return value;
}

Session start_session(const SessionRequest& request, const std::optional<Session>& active) {
  if (active && !active->ended_at) {
    throw SessionError(SessionError::Code::already_active, "a session is already active on this channel");
  }
  const double minutes = request.duration_minutes;
  if (!std::isfinite(minutes) || minutes <= 0 || minutes > kMaxSessionMinutes) {
    throw SessionError(SessionError::Code::invalid_duration, "session duration must be a positive number of minutes");
  }
  const auto duration = Millis{std::llround(minutes * 60'000.0)};
  if (duration.count() <= 0) {
    throw SessionError(SessionError::Code::invalid_duration, "session duration rounds to zero");
  }
  request.reminders.validate();
  request.suggestions.validate();

  Session session;
  session.id = request.id;
  session.channel = request.channel;
  session.started_at = request.now;
  session.duration = duration;
  session.reminder_policy = request.reminders;
  session.suggestion_policy = request.suggestions;

  const std::string& channel = request.channel.str();
  std::vector<std::uint64_t> seed_material{request.suggestions.seed, request.stream};
  seed_material.insert(seed_material.end(), channel.begin(), channel.end());
  std::seed_seq timing_seq(seed_material.begin(), seed_material.end());
  session.rng.seed(timing_seq);
  seed_material.push_back(0x5049434bULL);
  std::seed_seq pick_seq(seed_material.begin(), seed_material.end());
  session.pick_rng.seed(pick_seq);

  const Millis gap = request.suggestions.min_gap;
  std::uniform_int_distribution<Millis::rep> jitter(0, gap.count());
  const Timestamp first = request.now + request.suggestions.initial_delay + Millis{jitter(session.rng)};
  if (first < session.ends_at()) session.next_suggestion_at = first;
  return session;
}

std::vector<TimerEvent> due_events(Session& session, Timestamp now) {
  std::vector<TimerEvent> events;
  if (session.end_reason == EndReason::stopped) return events;

  const auto& fractions = session.reminder_policy.fractions;
  while (session.reminders_emitted < fractions.size()) {
    const Timestamp due = session.reminder_due_at(session.reminders_emitted);
    if (due > now) break;
    events.push_back({TimerKind::reminder_due, fractions[session.reminders_emitted], session.id, due});
    ++session.reminders_emitted;
  }

  while (session.next_suggestion_at && *session.next_suggestion_at <= now) {
    const Timestamp due = *session.next_suggestion_at;
    events.push_back({TimerKind::suggestion_due, 0.0, session.id, due});
    const Timestamp next = next_suggestion_time(session.rng, session.suggestion_policy, due);
    session.next_suggestion_at = next < session.ends_at() ? std::optional{next} : std::nullopt;
  }

  if (!session.expiry_emitted && session.ends_at() <= now) {
    events.push_back({TimerKind::session_expired, 0.0, session.id, session.ends_at()});
    session.expiry_emitted = true;
    session.next_suggestion_at.reset();
  }

  auto rank = [](TimerKind k) {
    switch (k) {
      case TimerKind::reminder_due: return 0;
      case TimerKind::suggestion_due: return 1;
      case TimerKind::session_expired: return 2;
    }
    return 3;
  };
  std::stable_sort(events.begin(), events.end(), [&](const TimerEvent& a, const TimerEvent& b) {
    if (a.due_at != b.due_at) return a.due_at < b.due_at;
    return rank(a.kind) < rank(b.kind);
  });
  return events;
}

Timestamp next_suggestion_time(SchedulerRng& rng, const SuggestionPolicy& policy, Timestamp last_emit) {
  const Millis gap = policy.min_gap;
  std::uniform_int_distribution<Millis::rep> jitter(0, gap.count());
  return last_emit + gap + Millis{jitter(rng)};
}

const KnowledgeItem* pick_suggestion(SchedulerRng& rng, const Catalog& catalog) {
  if (catalog.empty()) return nullptr;
  std::uniform_int_distribution<std::size_t> pick(0, catalog.size() - 1);
  return &catalog.items()[pick(rng)];
}

}  // namespace explorebot
