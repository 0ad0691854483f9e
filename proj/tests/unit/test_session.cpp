#include <doctest.h>

#include <map>

#include "explorebot/knowledge.hpp"
#include "explorebot/session.hpp"

using namespace explorebot;
using namespace std::chrono_literals;

namespace {

Session fifteen_minutes(std::uint64_t seed = 1) {
  SessionRequest r;
  r.id = SessionId("c:session-1");
  r.channel = ChannelId("c");
  r.duration_minutes = 15;
  r.now = from_millis(0);
  r.suggestions.seed = seed;
  return start_session(r, std::nullopt);
}

std::vector<TimerEvent> only(const std::vector<TimerEvent>& events, TimerKind kind) {
  std::vector<TimerEvent> out;
  for (const auto& e : events) {
    if (e.kind == kind) out.push_back(e);
  }
  return out;
}

Catalog ten_items() {
  std::vector<KnowledgeItem> items;
  for (int i = 0; i < 10; ++i) {
    items.push_back({"item-" + std::to_string(i), KnowledgeGroup::tours, "Item " + std::to_string(i), "body", {}});
  }
  return Catalog("t", items);
}

}  // namespace

TEST_CASE("default reminders fall at 450, 720 and 900 seconds") {
  const auto s = fifteen_minutes();
  CHECK(to_millis(s.reminder_due_at(0)) == 450'000);
  CHECK(to_millis(s.reminder_due_at(1)) == 720'000);
  CHECK(to_millis(s.reminder_due_at(2)) == 900'000);
}

TEST_CASE("start_session errors") {
  SessionRequest r;
  r.id = SessionId("c:session-1");
  r.duration_minutes = 0;
  CHECK_THROWS_AS(start_session(r, std::nullopt), SessionError);
  r.duration_minutes = -3;
  CHECK_THROWS_AS(start_session(r, std::nullopt), SessionError);
  r.duration_minutes = kMaxSessionMinutes + 1;
  CHECK_THROWS_AS(start_session(r, std::nullopt), SessionError);
  try {
    start_session({.id = SessionId("x"), .duration_minutes = 15}, fifteen_minutes());
    FAIL("second session accepted");
  } catch (const SessionError& e) {
    CHECK(e.code() == SessionError::Code::already_active);
  }
}

TEST_CASE("parse_duration_minutes") {
  CHECK(parse_duration_minutes("15") == 15.0);
  CHECK(parse_duration_minutes(" 2.5 min") == 2.5);
  CHECK(parse_duration_minutes("10 minutes") == 10.0);
  CHECK_FALSE(parse_duration_minutes("fifteen"));
  CHECK_FALSE(parse_duration_minutes("0"));
  CHECK_FALSE(parse_duration_minutes("-1"));
  CHECK_FALSE(parse_duration_minutes("nan"));
  CHECK_FALSE(parse_duration_minutes("15 hours"));
}

TEST_CASE("due_events at 460 s yields the first reminder only") {
  auto s = fifteen_minutes();
  const auto reminders = only(due_events(s, from_millis(460'000)), TimerKind::reminder_due);
  REQUIRE(reminders.size() == 1);
  CHECK(reminders[0].fraction == 0.5);
  CHECK(to_millis(reminders[0].due_at) == 450'000);
}

TEST_CASE("due_events after expiry: remaining reminders then expiry, then nothing") {
  auto s = fifteen_minutes();
  const auto events = due_events(s, from_millis(901'000));
  const auto reminders = only(events, TimerKind::reminder_due);
  REQUIRE(reminders.size() == 3);
  CHECK(events.back().kind == TimerKind::session_expired);
  CHECK(only(events, TimerKind::session_expired).size() == 1);
  for (std::size_t i = 1; i < events.size(); ++i) CHECK(events[i - 1].due_at <= events[i].due_at);
  for (const auto& e : events) CHECK(e.due_at <= s.ends_at());
  CHECK(due_events(s, from_millis(901'000)).empty());
  CHECK(due_events(s, from_millis(5'000'000)).empty());
}

TEST_CASE("due_events is idempotent at a fixed time") {
  auto s = fifteen_minutes();
  CHECK_FALSE(due_events(s, from_millis(300'000)).empty());
  CHECK(due_events(s, from_millis(300'000)).empty());
}

TEST_CASE("granularity of the clock does not change the schedule") {
  auto coarse = fifteen_minutes(99);
  auto fine = fifteen_minutes(99);
  const auto all_at_once = due_events(coarse, from_millis(900'000));
  std::vector<TimerEvent> stepwise;
  for (std::int64_t t = 0; t <= 900'000; t += 7'000) {
    for (auto& e : due_events(fine, from_millis(t))) stepwise.push_back(e);
  }
  for (auto& e : due_events(fine, from_millis(900'000))) stepwise.push_back(e);
  CHECK(all_at_once == stepwise);
}

TEST_CASE("a stopped session emits nothing") {
  auto s = fifteen_minutes();
  s.ended_at = from_millis(10'000);
  s.end_reason = EndReason::stopped;
  CHECK(due_events(s, from_millis(900'000)).empty());
}

TEST_CASE("next_suggestion_time keeps the minimum gap") {
  SuggestionPolicy policy;
  SchedulerRng rng(12345);
  Timestamp last = from_millis(0);
  for (int i = 0; i < 10'000; ++i) {
    const auto next = next_suggestion_time(rng, policy, last);
    const auto gap = next - last;
    CHECK(gap >= policy.min_gap);
    CHECK(gap <= 2 * policy.min_gap);
    last = next;
  }
}

TEST_CASE("next_suggestion_time is deterministic for a seed") {
  SuggestionPolicy policy;
  SchedulerRng a(5), b(5);
  for (int i = 0; i < 100; ++i) {
    CHECK(next_suggestion_time(a, policy, from_millis(i * 1000)) == next_suggestion_time(b, policy, from_millis(i * 1000)));
  }
}

TEST_CASE("suggestion timers never fall after the session end") {
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    auto s = fifteen_minutes(seed);
    for (const auto& e : due_events(s, from_millis(2'000'000))) {
      CHECK(e.due_at >= s.started_at);
      CHECK(e.due_at <= s.ends_at());
      if (e.kind == TimerKind::suggestion_due) CHECK(e.due_at < s.ends_at());
    }
  }
}

TEST_CASE("pick_suggestion") {
  SchedulerRng rng(1);
  CHECK(pick_suggestion(rng, Catalog()) == nullptr);
  const Catalog one("t", {{"only", KnowledgeGroup::tours, "Only", "body", {}}});
  CHECK(pick_suggestion(rng, one)->id == "only");

  const auto catalog = ten_items();
  SchedulerRng a(3), b(3);
  for (int i = 0; i < 50; ++i) CHECK(pick_suggestion(a, catalog) == pick_suggestion(b, catalog));
}

TEST_CASE("10 000 picks over 10 items stay within 2 points of 10 percent") {
  const auto catalog = ten_items();
  SchedulerRng rng(2024);
  std::map<std::string, int> counts;
  constexpr int kDraws = 10'000;
  for (int i = 0; i < kDraws; ++i) ++counts[pick_suggestion(rng, catalog)->id];
  CHECK(counts.size() == 10);
  for (const auto& [id, n] : counts) {
    CAPTURE(id);
    CHECK(std::abs(static_cast<double>(n) / kDraws - 0.10) <= 0.02);
  }
}

TEST_CASE("policy validation") {
  CHECK_THROWS(ReminderPolicy{{0.5, 0.4}}.validate());
  CHECK_THROWS(ReminderPolicy{{0.0}}.validate());
  CHECK_THROWS(ReminderPolicy{{1.2}}.validate());
  CHECK_NOTHROW(ReminderPolicy{}.validate());
  CHECK_THROWS(SuggestionPolicy{0s, 10s, 0}.validate());
}
