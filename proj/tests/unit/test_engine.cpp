#include <doctest.h>

#include <random>

#include "explorebot/host.hpp"
#include "support.hpp"

using namespace explorebot;
using namespace explorebot::testing;

namespace {

bool contains(const std::string& haystack, std::string_view needle) { return haystack.find(needle) != std::string::npos; }

template <class E>
std::vector<E> effects_of(const Transition& t) {
  std::vector<E> out;
  for (const auto& e : t.effects) {
    if (const auto* x = std::get_if<E>(&e)) out.push_back(*x);
  }
  return out;
}

void register_login(Driver& d) {
  d.send("?charter");
  d.send("Login");
  d.send("Reminders");
  d.send("Break the login form");
  d.send("done");
}

void start(Driver& d, const std::string& minutes = "15", std::int64_t at_ms = 0) {
  d.send("?start", at_ms);
  d.send(minutes, at_ms);
}

}  // namespace

TEST_CASE("first contact introduces the bot once") {
  Driver d;
  d.send("hello");
  REQUIRE(d.last.actions.size() == 1);
  CHECK(d.last.actions[0].kind == ActionKind::system_notice);
  CHECK(contains(d.last.actions[0].text, "ExploreBot"));
  d.send("hello again");
  CHECK(d.last.actions.empty());
  d.send("?commands");
  CHECK(d.only_action().kind == ActionKind::reply);
}

TEST_CASE("?commands leaves the state unchanged") {
  Driver d;
  d.send("hi");
  const auto before = d.state;
  d.send("?commands");
  CHECK(d.state == before);
  CHECK(d.only_action().text == render_command_list());
}

TEST_CASE("?start opens the start flow and asks for the time limit") {
  Driver d;
  d.send("hi");
  d.send("?start");
  REQUIRE(d.state.open_flow);
  CHECK(d.state.open_flow->kind == FlowKind::start);
  CHECK(d.state.open_flow->step == FlowStep::start_duration);
  CHECK(d.only_action().kind == ActionKind::prompt);
  CHECK(contains(d.only_action().text, "time limit"));

  d.send("15");
  REQUIRE(d.state.active_session);
  CHECK(d.state.active_session->duration == Millis(15 * 60 * 1000));
  CHECK_FALSE(d.state.open_flow);
  CHECK(effects_of<SessionStarted>(d.last).size() == 1);
}

TEST_CASE("?report without a session explains that one must be started") {
  Driver d;
  d.send("hi");
  register_login(d);
  d.send("?report");
  CHECK_FALSE(d.state.open_flow);
  CHECK(contains(d.only_action().text, "no active test session"));
}

TEST_CASE("report flow walks charter, type, description and attachments") {
  Driver d;
  d.send("hi");
  register_login(d);
  start(d);
  d.send("?report");
  REQUIRE(d.state.open_flow);
  CHECK(d.state.open_flow->step == FlowStep::report_charter);

  d.send("Nope");
  CHECK(d.state.open_flow->step == FlowStep::report_charter);
  CHECK(contains(d.only_action().text, "'Login'"));

  d.send("Login");
  CHECK(d.state.open_flow->step == FlowStep::report_type);
  CHECK(contains(d.only_action().text, "bug or an issue"));

  d.send("maybe");
  CHECK(d.state.open_flow->step == FlowStep::report_type);

  d.send("bug");
  CHECK(d.state.open_flow->step == FlowStep::report_description);
  CHECK(contains(d.only_action().text, "Describe the bug"));

  d.send("crash on empty reminder title");
  CHECK(d.state.open_flow->step == FlowStep::report_attachments);

  d.send("done");
  CHECK_FALSE(d.state.open_flow);
  const auto filed = effects_of<ReportFiled>(d.last);
  REQUIRE(filed.size() == 1);
  const auto& report = filed[0].report;
  CHECK(report.type == ReportType::bug);
  CHECK(report.description == "crash on empty reminder title");
  CHECK(report.attachments.empty());
  CHECK(report.charter == d.state.find_charter_by_name("Login")->id);
  CHECK(report.session == d.state.active_session->id);
  CHECK_FALSE(report.late);
  CHECK(d.only_action().kind == ActionKind::reply);
}

TEST_CASE("report with an issue type and attachments") {
  Driver d;
  d.send("hi");
  register_login(d);
  start(d);
  d.send("?report");
  d.send("login");  // charter names match case-sensitively
  CHECK(d.state.open_flow->step == FlowStep::report_charter);
  d.send("Login");
  d.send("Issue");
  d.send("confusing label");
  d.send("", 0, {{"a.png", MediaKind::image, "upload:1-a.png", 10}});
  d.send("see log", 0, {{"b.txt", MediaKind::file, "upload:2-b.txt", 5}});
  d.send("done");
  const auto filed = effects_of<ReportFiled>(d.last);
  REQUIRE(filed.size() == 1);
  CHECK(filed[0].report.type == ReportType::issue);
  CHECK(filed[0].report.attachments.size() == 2);
}

TEST_CASE("canceling before the description files nothing") {
  Driver d;
  d.send("hi");
  register_login(d);
  start(d);
  d.send("?report");
  d.send("Login");
  d.send("bug");
  const auto charters = d.state.charters;
  d.send("cancel");
  CHECK_FALSE(d.state.open_flow);
  CHECK(effects_of<ReportFiled>(d.last).empty());
  CHECK(d.state.counters.reports == 0);
  CHECK(d.state.charters == charters);
  CHECK(contains(d.only_action().text, "canceled"));
}

TEST_CASE("opening a flow while another is open asks to finish or cancel") {
  Driver d;
  d.send("hi");
  d.send("?charter");
  const auto flow = d.state.open_flow;
  for (const char* cmd : {"?start", "?charter", "?help"}) {
    d.send(cmd);
    CHECK(d.state.open_flow == flow);
    CHECK(contains(d.only_action().text, "finish the open charter dialog first"));
  }
}

TEST_CASE("charter registration rules") {
  EngineState state(ChannelId("c"));
  auto [s1, id] = register_charter(state, {"Reminders-C1", "Reminders", "Find crashes", {}, from_millis(0)});
  CHECK_FALSE(id.empty());
  CHECK(s1.charters.size() == 1);
  try {
    register_charter(s1, {"Reminders-C1", "Other", "x", {}, from_millis(0)});
    FAIL("duplicate accepted");
  } catch (const RegistrationError& e) {
    CHECK(e.code() == RegistrationError::Code::duplicate_name);
  }
  try {
    register_charter(s1, {"", "Reminders", "x", {}, from_millis(0)});
    FAIL("empty name accepted");
  } catch (const RegistrationError& e) {
    CHECK(e.code() == RegistrationError::Code::empty_field);
  }
  CHECK(s1.charters.size() == 1);
}

TEST_CASE("report completed after expiry is accepted and flagged late") {
  Driver d;
  d.send("hi");
  register_login(d);
  start(d, "1");
  d.send("?report", 10'000);
  d.send("Login", 10'000);
  const auto session = d.state.active_session->id;
  d.tick(61'000);
  CHECK_FALSE(d.state.active_session);
  d.send("bug", 62'000);
  d.send("lost", 62'000);
  d.send("done", 62'000);
  const auto filed = effects_of<ReportFiled>(d.last);
  REQUIRE(filed.size() == 1);
  CHECK(filed[0].report.late);
  CHECK(filed[0].report.session == session);
}

TEST_CASE("a suggestion due during an open flow is deferred to the flow's end") {
  Driver d;
  d.send("hi");
  register_login(d);
  start(d);
  d.send("?report");
  // Fire everything up to 7 minutes: suggestions come due, the flow stays open.
  for (const auto& a : d.tick(7 * 60'000)) CHECK(a.kind != ActionKind::suggestion);
  CHECK(d.state.suggestion_pending);
  d.send("cancel", 7 * 60'000);
  bool delivered = false;
  for (const auto& a : d.last.actions) delivered |= a.kind == ActionKind::suggestion;
  CHECK(delivered);
  CHECK_FALSE(d.state.suggestion_pending);
}

TEST_CASE("a deferred suggestion is dropped when the session ends first") {
  Driver d;
  d.send("hi");
  register_login(d);
  start(d, "5");
  d.send("?report");
  d.tick(5 * 60'000);
  CHECK_FALSE(d.state.active_session);
  CHECK_FALSE(d.state.suggestion_pending);
  d.send("cancel", 5 * 60'000 + 1);
  for (const auto& a : d.last.actions) CHECK(a.kind != ActionKind::suggestion);
}

TEST_CASE("?stop ends the session and later timers are ignored") {
  Driver d;
  d.send("hi");
  start(d);
  d.send("?stop", 30'000);
  CHECK_FALSE(d.state.active_session);
  CHECK(effects_of<SessionEnded>(d.last).at(0).reason == EndReason::stopped);
  TimerEvent stale{TimerKind::reminder_due, 0.5, SessionId("c:session-1"), from_millis(450'000)};
  const auto t = handle_event(*d.ctx, d.state, stale);
  CHECK(t.actions.empty());
  CHECK(t.state == d.state);
}

TEST_CASE("?help with and without a topic") {
  Driver d;
  d.send("hi");
  d.send("?help");
  REQUIRE(d.state.open_flow);
  CHECK(d.state.open_flow->kind == FlowKind::help);
  CHECK(d.only_action().kind == ActionKind::reply);
  d.send("mobile");
  CHECK(d.state.open_flow);
  CHECK(contains(d.only_action().text, "camera - Camera"));
  d.send("camera");
  CHECK_FALSE(d.state.open_flow);
  CHECK(contains(d.only_action().text, "Camera\n"));

  d.send("?help boundary-value-analysis");
  CHECK_FALSE(d.state.open_flow);
  CHECK(d.only_action().text.starts_with("Boundary-value analysis\n"));
}

TEST_CASE("empty catalog: one notice, no suggestions") {
  Driver d;
  d.ctx = make_context(1, std::make_shared<const Catalog>());
  d.send("hi");
  start(d, "30");
  const auto actions = d.tick(30 * 60'000);
  int notices = 0;
  for (const auto& a : actions) {
    CHECK(a.kind != ActionKind::suggestion);
    notices += a.kind == ActionKind::system_notice;
  }
  CHECK(notices == 1);
}

namespace {

// Random walk over commands, flow answers and clock advances.
std::vector<InboundMessage> random_script(std::uint64_t seed, std::size_t steps) {
  std::mt19937_64 rng(seed);
  const std::vector<std::string> vocabulary = {
      "?commands", "?manual", "?charter", "?start", "?stop", "?report", "?help", "?help tours", "?reprt", "cancel",
      "done",      "Login",   "Shop",     "goals",  "bug",   "issue",   "15",    "2",           "tours", "camera",
      "hello",     "x"};
  std::vector<InboundMessage> out;
  std::int64_t now = 0;
  for (std::size_t i = 0; i < steps; ++i) {
    now += static_cast<std::int64_t>(rng() % 90'000);
    out.push_back(say(vocabulary[rng() % vocabulary.size()], now));
  }
  return out;
}

}  // namespace

TEST_CASE("single-flow law and referential integrity over random walks") {
  for (std::uint64_t seed = 0; seed < 60; ++seed) {
    Driver d;
    d.ctx = make_context(seed);
    for (const auto& m : random_script(seed, 120)) {
      d.tick(to_millis(m.timestamp));
      d.last = handle_event(*d.ctx, d.state, m);
      d.state = d.last.state;
      int opened = 0;
      for (const auto& e : d.last.effects) {
        opened += std::holds_alternative<FlowOpened>(e);
        if (const auto* r = std::get_if<ReportFiled>(&e)) CHECK(d.state.find_charter(r->report.charter) != nullptr);
      }
      CHECK(opened <= 1);
      if (d.state.open_flow) {
        for (const auto& a : d.last.actions) CHECK(a.kind != ActionKind::suggestion);
      }
    }
  }
}

TEST_CASE("replaying the same events gives identical actions and state") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto script = random_script(seed, 80);
    auto run = [&] {
      MemoryEventStore store;
      NullSink sink;
      Host host(make_context(seed), store, sink);
      for (const auto& m : script) host.submit(m);
      host.advance_clock(ChannelId("c"), from_millis(10'000'000));
      return std::pair{serialize_audit_log(store.records()), *host.snapshot(ChannelId("c"))};
    };
    const auto a = run();
    const auto b = run();
    CHECK(a.first == b.first);
    CHECK(a.second == b.second);
  }
}

TEST_CASE("the audit log is enough to rebuild the channel state") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto ctx = make_context(seed);
    MemoryEventStore store;
    NullSink sink;
    Host host(ctx, store, sink);
    for (const auto& m : random_script(seed, 80)) host.submit(m);
    std::vector<EventRecord> replayed;
    const auto rebuilt = rebuild_state(ctx, ChannelId("c"), store.records(), &replayed);
    CHECK(rebuilt == *host.snapshot(ChannelId("c")));
    CHECK(serialize_audit_log(replayed) == serialize_audit_log(store.records()));
  }
}
