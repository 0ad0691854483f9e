// Acceptance checks, one PASS/FAIL line per criterion.
// Tolerances: timers exact on the virtual clock; suggestion frequencies within
// 0.02 absolute of 0.10; bug mean within 0.01 of 5.17; golden suite under 5 s.

#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <random>
#include <regex>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "analytics_fixtures.hpp"
#include "explorebot/analytics.hpp"
#include "explorebot/gateway/adapter.hpp"
#include "explorebot/gateway/transcript.hpp"
#include "explorebot/host.hpp"
#include "support.hpp"

using namespace explorebot;
using namespace explorebot::gateway;
using namespace explorebot::testing;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;

  void fail(const std::string& why) {
    if (pass) detail.clear();
    pass = false;
    if (!detail.empty()) detail += "; ";
    detail += why;
  }
};

struct CliResult {
  int status = -1;
  std::string output;
};

CliResult run_cli(const std::string& args) {
  CliResult r;
  const std::string cmd = std::string("\"") + EXPLOREBOT_CLI + "\" " + args + " 2>&1";
  FILE* pipe = ::popen(cmd.c_str(), "r");
  if (!pipe) return r;
  std::array<char, 4096> buf{};
  std::size_t n = 0;
  while ((n = std::fread(buf.data(), 1, buf.size(), pipe)) > 0) r.output.append(buf.data(), n);
  const int status = ::pclose(pipe);
  r.status = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

std::vector<fs::path> golden_files() {
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(EXPLOREBOT_TRANSCRIPTS_DIR)) {
    if (e.path().extension() == ".chat") files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  return files;
}

fs::path scratch_dir() {
  const auto dir = fs::temp_directory_path() / ("explorebot-acceptance-" + std::to_string(::getpid()));
  fs::create_directories(dir);
  return dir;
}

// Random tester behaviour: commands, flow answers, chatter and clock jumps.
TranscriptScript random_script(std::uint64_t seed, std::size_t steps) {
  std::mt19937_64 rng(seed);
  static const std::vector<std::string> vocabulary = {
      "?commands", "?manual", "?charter", "?start", "?stop", "?report", "?help", "?help tours", "?help camera",
      "?reprt",    "cancel",  "done",     "Login",  "Shop", "goals",   "bug",   "issue",       "15",
      "3",         "tours",   "money-tour", "hello", "???"};
  TranscriptScript script;
  script.name = "random-" + std::to_string(seed);
  script.channel = "rnd";
  for (std::size_t i = 0; i < steps; ++i) {
    if (rng() % 3 == 0) {
      script.steps.push_back({WaitStep{Millis(static_cast<std::int64_t>(rng() % 240'000))}, i});
    } else if (rng() % 10 == 0) {
      script.steps.push_back({SayStep{"tester", "", {{"shot.png", MediaKind::image, "transcript:shot.png", 0}}}, i});
    } else {
      script.steps.push_back({SayStep{rng() % 4 == 0 ? "bea" : "tester", vocabulary[rng() % vocabulary.size()], {}}, i});
    }
  }
  return script;
}

// --- 1 ----------------------------------------------------------------------

Outcome golden_suite() {
  Outcome out;
  const auto started = std::chrono::steady_clock::now();
  const auto cli = run_cli("replay \"" + std::string(EXPLOREBOT_TRANSCRIPTS_DIR) + "\"");
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  if (cli.status != 0) out.fail("replay exited " + std::to_string(cli.status) + ": " + cli.output);

  std::set<CommandName> used;
  bool help_selection = false;
  bool introductions = true;
  const auto ctx = seed_data_context();
  for (const auto& file : golden_files()) {
    const auto report = run_transcript(load_transcript(file), ctx, 1);
    bool help_open = false;
    bool first_outbound = true;
    for (const auto& r : report.log) {
      if (r.direction == Direction::inbound) {
        const auto parsed = parse_message(r.text, r.flow.has_value());
        if (const auto* c = std::get_if<Command>(&parsed)) {
          used.insert(c->name);
          if (c->name == CommandName::help && c->argument) help_selection = true;
        }
        if (help_open && std::holds_alternative<FlowReply>(parsed)) help_selection = true;
      }
      if (r.direction == Direction::internal && r.text == "flow_opened") help_open = r.data.value("flow_kind", "") == "help";
      if (r.direction == Direction::internal && r.text == "flow_closed") help_open = false;
      if (r.direction == Direction::outbound && first_outbound) {
        first_outbound = false;
        introductions &= r.payload == PayloadKind::system && r.text.find("I am ExploreBot") != std::string::npos;
      }
    }
  }
  if (used.size() != kAllCommands.size()) out.fail("only " + std::to_string(used.size()) + " of 7 commands exercised");
  if (!help_selection) out.fail("no help topic selection");
  if (!introductions) out.fail("a transcript does not open with the introduction");
  if (seconds >= 5.0) out.fail("took " + std::to_string(seconds) + " s");
  if (out.pass) {
    std::ostringstream d;
    d << golden_files().size() << " transcripts, 7/7 commands, intro and topic selection, " << std::fixed
      << std::setprecision(2) << seconds << " s < 5 s";
    out.detail = d.str();
  }
  return out;
}

// --- 2 ----------------------------------------------------------------------

Outcome replay_determinism() {
  Outcome out;
  const auto ctx = seed_data_context();
  for (const auto& file : golden_files()) {
    const auto script = load_transcript(file);
    if (serialize_audit_log(run_transcript(script, ctx, 1).log) != serialize_audit_log(run_transcript(script, ctx, 1).log)) {
      out.fail(file.filename().string() + " diverged");
    }
  }
  // Byte comparison of the files `replay --log-dir` writes, twice.
  const auto dir = scratch_dir();
  for (const char* run : {"a", "b"}) {
    run_cli("replay --log-dir \"" + (dir / run).string() + "\" \"" + EXPLOREBOT_TRANSCRIPTS_DIR + "\"");
  }
  for (const auto& file : golden_files()) {
    auto slurp = [](const fs::path& p) {
      std::ifstream in(p, std::ios::binary);
      return std::string(std::istreambuf_iterator<char>(in), {});
    };
    const auto name = file.stem().string() + ".jsonl";
    const auto a = slurp(dir / "a" / name);
    if (a.empty() || a != slurp(dir / "b" / name)) out.fail("CLI log of " + name + " differs");
  }
  fs::remove_all(dir);

  int divergent = 0;
  for (std::uint64_t i = 0; i < 100; ++i) {
    const auto script = random_script(1000 + i, 60);
    const auto a = serialize_audit_log(run_transcript(script, ctx, i).log);
    const auto b = serialize_audit_log(run_transcript(script, ctx, i).log);
    divergent += a != b;
  }
  if (divergent) out.fail(std::to_string(divergent) + "/100 random scripts diverged");
  if (out.pass) out.detail = "golden logs byte-identical (library and CLI), 0/100 random scripts diverged";
  return out;
}

// --- 3 ----------------------------------------------------------------------

Outcome timer_fidelity() {
  Outcome out;
  for (const std::int64_t step_ms : {1000, 60'000, 3'600'000}) {
    MemoryEventStore store;
    NullSink sink;
    Host host(seed_data_context(), store, sink);
    const ChannelId ch("timer");
    host.submit(say("?start", 0, "timer"));
    host.submit(say("15", 0, "timer"));
    for (std::int64_t t = 0; t <= 3'600'000; t += step_ms) host.advance_clock(ch, from_millis(t));

    std::vector<std::int64_t> reminder_times;
    std::optional<std::int64_t> ended;
    bool after_expiry = false;
    for (const auto& r : store.records()) {
      if (r.payload == PayloadKind::reminder) {
        reminder_times.push_back(to_millis(r.timestamp));
        if (ended) after_expiry = true;
      }
      if (r.text == "session_ended") ended = to_millis(r.timestamp);
    }
    const std::vector<std::int64_t> expected = {450'000, 720'000, 900'000};
    if (reminder_times != expected) {
      std::ostringstream d;
      d << "step " << step_ms << " ms: reminders at";
      for (auto t : reminder_times) d << ' ' << t;
      out.fail(d.str());
    }
    if (ended != 900'000) out.fail("session did not end at +900 s");
    if (after_expiry) out.fail("reminder after expiry");
  }
  if (out.pass) out.detail = "reminders at +450 s, +720 s, +900 s exactly, once each, none after expiry (3 clock granularities)";
  return out;
}

// --- 4 ----------------------------------------------------------------------

Outcome suggestion_safety() {
  Outcome out;
  const auto ctx = make_context(0, numbered_catalog(10));
  std::map<std::string, std::uint64_t> picks;
  std::uint64_t total = 0;
  std::uint64_t violations = 0;
  std::uint64_t deferrals = 0;
  constexpr int kRuns = 10'000;
  for (int run = 0; run < kRuns; ++run) {
    std::mt19937_64 rng(static_cast<std::uint64_t>(run) * 7919 + 1);
    auto seeded = std::make_shared<EngineContext>(*ctx);
    seeded->config.suggestions.seed = rng();
    MemoryEventStore store;
    NullSink sink;
    Host host(seeded, store, sink);
    const ChannelId ch("s");
    std::int64_t now = 0;
    host.submit(say("?charter", now, "s"));
    for (const char* answer : {"Login", "Shop", "goals", "done"}) host.submit(say(answer, now, "s"));
    host.submit(say("?start", now, "s"));
    host.submit(say("15", now, "s"));
    static const std::vector<std::string> moves = {"?report", "Login", "bug", "crash", "done", "cancel",
                                                   "?help",   "tours", "?charter", "x",    "?commands"};
    while (now < 16 * 60'000) {
      now += static_cast<std::int64_t>(rng() % 60'000);
      host.submit(say(moves[rng() % moves.size()], now, "s"));
    }
    host.advance_clock(ch, from_millis(now + 60'000));

    bool open = false;
    for (const auto& r : store.records()) {
      if (r.direction == Direction::internal && r.text == "flow_opened") open = true;
      if (r.direction == Direction::internal && r.text == "flow_closed") open = false;
      if (r.direction == Direction::internal && r.payload == PayloadKind::timer && open &&
          r.data.value("timer", "") == "suggestion_due") {
        ++deferrals;
      }
      if (r.payload == PayloadKind::suggestion) {
        if (open) ++violations;
        ++picks[r.item_id.value_or("?")];
        ++total;
      }
    }
  }
  if (violations) out.fail(std::to_string(violations) + " suggestions delivered inside an open flow");
  if (deferrals == 0) out.fail("no suggestion ever came due inside a flow, the check proved nothing");
  if (picks.size() != 10) out.fail(std::to_string(picks.size()) + " distinct items picked");
  double worst = 0;
  for (const auto& [id, n] : picks) worst = std::max(worst, std::abs(static_cast<double>(n) / total - 0.10));
  if (worst > 0.02) out.fail("frequency off by " + std::to_string(worst));
  if (out.pass) {
    std::ostringstream d;
    d << kRuns << " runs, " << total << " suggestions, " << deferrals << " came due inside a flow, 0 delivered inside; "
      << "max |freq - 0.10| = " << std::fixed << std::setprecision(4) << worst << " <= 0.02";
    out.detail = d.str();
  }
  return out;
}

// --- 5 ----------------------------------------------------------------------

Outcome interaction_accounting() {
  Outcome out;
  // (a) totals equal a direct count of classified records, on generated logs.
  const auto ctx = seed_data_context();
  for (std::uint64_t i = 0; i < 100; ++i) {
    const auto log = run_transcript(random_script(5000 + i, 80), ctx, i).log;
    const auto table = interaction_table(log);
    std::array<std::array<std::uint64_t, 2>, 2> direct{};
    for (const auto& r : log) {
      if (r.direction == Direction::internal || r.payload == PayloadKind::plain) continue;
      ++direct[r.session ? 1 : 0][r.direction == Direction::outbound ? 0 : 1];
    }
    for (std::size_t p = 0; p < 2; ++p) {
      for (std::size_t a = 0; a < 2; ++a) {
        std::uint64_t sum = 0;
        for (auto n : table.cells[p][a].by_class) sum += n;
        if (sum != table.cells[p][a].total() || sum != direct[p][a]) out.fail("partition broken on random log " + std::to_string(i));
      }
    }
  }

  // (b) the published table.
  const auto table = interaction_table(published_table_fixture());
  const auto total = [&](Phase p, ActorGroup a) { return table.cell(p, a).total(); };
  if (total(Phase::training, ActorGroup::bot) != 121 || total(Phase::test_session, ActorGroup::bot) != 460 ||
      total(Phase::training, ActorGroup::testers) != 144 || total(Phase::test_session, ActorGroup::testers) != 352) {
    out.fail("fixture totals differ from 121/460/144/352");
  }
  if (table.cell(Phase::training, ActorGroup::bot)[InteractionClass::bot_reactive] != 107 ||
      table.cell(Phase::training, ActorGroup::bot)[InteractionClass::bot_active] != 14 ||
      table.cell(Phase::training, ActorGroup::testers)[InteractionClass::tester_reactive] != 37 ||
      table.cell(Phase::training, ActorGroup::testers)[InteractionClass::tester_active_accepted] != 100 ||
      table.cell(Phase::training, ActorGroup::testers)[InteractionClass::tester_active_invalid] != 7) {
    out.fail("fixture class counts differ");
  }

  // (c) twelve hand-classified records through `explorebot analyze`.
  const auto hand = twelve_record_log();
  std::map<std::string, std::map<std::string, std::map<std::string, int>>> expected;
  std::vector<EventRecord> log;
  for (const auto& h : hand) {
    log.push_back(h.record);
    const std::string cls = h.expected;
    if (cls == "excluded" || cls == "internal") continue;
    const std::string phase = h.record.session ? "test_session" : "training";
    const std::string actor = h.record.direction == Direction::inbound ? "testers" : "bot";
    ++expected[phase][actor][cls];
    ++expected[phase][actor]["total"];
  }
  const auto dir = scratch_dir();
  const auto path = dir / "hand.jsonl";
  std::ofstream(path, std::ios::binary) << serialize_audit_log(log);
  const auto cli = run_cli("analyze --format json \"" + path.string() + "\"");
  fs::remove_all(dir);
  if (cli.status != 0) {
    out.fail("analyze exited " + std::to_string(cli.status));
  } else {
    const auto j = nlohmann::json::parse(cli.output);
    for (const char* phase : {"training", "test_session"}) {
      for (const char* actor : {"bot", "testers"}) {
        for (const auto& [cls, n] : j["interactions"][phase][actor].items()) {
          const int want = expected[phase][actor].count(cls) ? expected[phase][actor][cls] : 0;
          if (n.get<int>() != want) out.fail(std::string(phase) + "/" + actor + "/" + cls + " = " + n.dump() +
                                             ", hand count " + std::to_string(want));
        }
      }
    }
  }
  if (out.pass) out.detail = "(a) 100 generated logs partition, (b) 121=107+14, 460, 144=37+100+7, 352, (c) 12-record hand count == analyze";
  return out;
}

// --- 6 ----------------------------------------------------------------------

Outcome bug_statistics() {
  Outcome out;
  const auto s = bug_stats_from_counts({3, 4, 5, 5, 5, 9});
  if (s.total != 31) out.fail("total " + std::to_string(s.total));
  if (std::abs(s.mean - 5.17) > 0.01) out.fail("mean " + std::to_string(s.mean));
  if (std::round(s.mean * 10) / 10 != 5.2) out.fail("mean does not round to 5.2");
  if (s.median != 5) out.fail("median " + std::to_string(s.median));
  const auto [lo, hi] = std::minmax_element(s.per_participant_counts.begin(), s.per_participant_counts.end());
  if (*lo != 3 || *hi != 9) out.fail("min/max differ");
  if (out.pass) {
    std::ostringstream d;
    d << "total " << s.total << ", mean " << s.mean << " (|d| <= 0.01 of 5.17), median " << s.median << ", min 3, max 9";
    out.detail = d.str();
  }
  return out;
}

// --- 7 ----------------------------------------------------------------------

Outcome knowledge_base() {
  Outcome out;
  const std::string catalog_path = EXPLOREBOT_TEST_DATA_DIR "/catalog.json";
  const auto cli = run_cli("validate-catalog \"" + catalog_path + "\"");
  if (cli.status != 0) out.fail("validate-catalog: " + cli.output);

  Driver d;
  d.ctx = seed_data_context();
  d.send("?help");
  std::string listing;
  for (const auto& a : d.last.actions) {
    if (a.kind == ActionKind::reply) listing = a.text;
  }
  d.send("cancel");
  const std::regex key_line(R"(^  (\S+) - )", std::regex::multiline);
  std::size_t keys = 0;
  for (auto it = std::sregex_iterator(listing.begin(), listing.end(), key_line); it != std::sregex_iterator(); ++it) {
    ++keys;
    const std::string key = (*it)[1];
    if (!std::holds_alternative<const KnowledgeItem*>(lookup(*d.ctx->catalog, key))) out.fail("lookup miss for " + key);
    d.send("?help " + key);
    if (d.only_action().text.starts_with("I have no topic")) out.fail("?help " + key + " missed");
  }
  if (keys == 0) out.fail("?help listed no keys");
  for (const char* id : {"equivalence-partitioning", "boundary-value-analysis", "bad-neighborhood-tour", "network-connections",
                         "geolocation", "bluetooth", "camera", "ui-events"}) {
    if (!d.ctx->catalog->find(id)) out.fail(std::string("seed lacks ") + id);
  }
  if (out.pass) out.detail = "catalog valid, " + std::to_string(keys) + "/" + std::to_string(keys) +
                             " listed keys resolve, required seed topics present";
  return out;
}

// --- 8 ----------------------------------------------------------------------

Outcome audit_completeness() {
  Outcome out;
  const auto ctx = seed_data_context();
  std::size_t checked = 0;
  for (const auto& file : golden_files()) {
    const auto report = run_transcript(load_transcript(file), ctx, 1);
    std::size_t inbound = 0, outbound = 0;
    for (const auto& r : report.log) {
      inbound += r.direction == Direction::inbound;
      outbound += r.direction == Direction::outbound;
    }
    if (inbound != report.tester_messages) out.fail(file.filename().string() + ": inbound records != tester messages");
    if (outbound != report.expectations + report.unmatched_outputs) {
      out.fail(file.filename().string() + ": outbound records != expectations + unmatched outputs");
    }
    ++checked;
  }

  // Kill before send: the adapter dies on the first delivery of each message.
  const auto dir = scratch_dir();
  const auto path = dir / "wal.jsonl";
  std::size_t killed = 0;
  {
    JsonlEventStore store(path);
    LoopbackAdapter adapter;
    Host host(ctx, store, adapter);
    std::int64_t t = 0;
    for (const char* text : {"?commands", "?start", "15", "?stop"}) {
      adapter.fail_next(1);
      try {
        host.submit(say(text, t += 1000, "wal"));
      } catch (const DeliveryError&) {
        ++killed;
      }
    }
  }
  const auto records = read_audit_log(path);
  fs::remove_all(dir);
  std::size_t replies = 0, inbound = 0;
  for (const auto& r : records) {
    inbound += r.direction == Direction::inbound;
    replies += r.direction == Direction::outbound && r.correlation.has_value();
  }
  if (killed != 4) out.fail("fault injection did not trigger");
  if (inbound != 4 || replies != 4) out.fail("records missing after kill before send");
  if (out.pass) out.detail = std::to_string(checked) + " transcripts balanced; 4/4 killed deliveries have their records on disk";
  return out;
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"1 golden transcript suite", golden_suite},
      {"2 replay determinism", replay_determinism},
      {"3 timer fidelity", timer_fidelity},
      {"4 suggestion safety and uniformity", suggestion_safety},
      {"5 interaction accounting", interaction_accounting},
      {"6 bug statistics", bug_statistics},
      {"7 knowledge base", knowledge_base},
      {"8 audit completeness", audit_completeness},
  };
  int failures = 0;
  for (const auto& [name, check] : criteria) {
    Outcome o;
    try {
      o = check();
    } catch (const std::exception& e) {
      o.fail(std::string("exception: ") + e.what());
    }
    std::cout << (o.pass ? "PASS" : "FAIL") << " AC" << name << ": " << o.detail << std::endl;
    failures += !o.pass;
  }
  return failures == 0 ? 0 : 1;
}
