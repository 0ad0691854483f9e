#include "explorebot/gateway/transcript.hpp"

#include <cmath>
#include <deque>
#include <fstream>
#include <regex>
#include <sstream>

#include "explorebot/gateway/adapter.hpp"
#include "explorebot/host.hpp"
#include "explorebot/text.hpp"

namespace explorebot::gateway {

namespace {

std::string unescape(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] == '\\' && i + 1 < s.size()) {
      const char next = s[i + 1];
      if (next == 'n') {
        out += '\n';
        ++i;
        continue;
      }
      if (next == '\\') {
        out += '\\';
        ++i;
        continue;
      }
    }
    out += s[i];
  }
  return out;
}

std::string escape(std::string_view s) {
  std::string out;
  for (char c : s) {
    if (c == '\n') {
      out += "\\n";
    } else {
      out += c;
    }
  }
  return out;
}

std::optional<ActionKind> action_kind_from_string(std::string_view s) {
  for (ActionKind k : {ActionKind::reply, ActionKind::prompt, ActionKind::reminder, ActionKind::suggestion,
                       ActionKind::system_notice}) {
    if (to_string(k) == s) return k;
  }
  return std::nullopt;
}

std::string describe(const ExpectStep& e) {
  const char* mode = e.mode == MatchMode::exact ? "exactly" : e.mode == MatchMode::contains ? "containing" : "matching";
  return std::string(mode) + " \"" + escape(e.pattern) + "\"";
}

bool matches(const ExpectStep& e, const std::string& actual) {
  switch (e.mode) {
    case MatchMode::exact: return actual == e.pattern;
    case MatchMode::contains: return actual.find(e.pattern) != std::string::npos;
    case MatchMode::regex: return std::regex_search(actual, std::regex(e.pattern));
  }
  return false;
}

}  // namespace

TranscriptScript parse_transcript(std::string_view source, std::string name) {
  TranscriptScript script;
  script.name = std::move(name);
  std::size_t line_no = 0;
  std::istringstream in{std::string(source)};
  std::string raw;
  auto fail = [&](const std::string& why) {
    throw TranscriptError(script.name + ":" + std::to_string(line_no) + ": " + why);
  };
  while (std::getline(in, raw)) {
    ++line_no;
    const std::string_view line = text::trim(raw);
    if (line.empty() || line.front() == '#') continue;
    const auto colon = line.find(':');
    if (colon == std::string_view::npos) fail("expected '<directive>: <value>'");
    std::string directive(text::trim(line.substr(0, colon)));
    std::string_view value = line.substr(colon + 1);
    if (!value.empty() && value.front() == ' ') value.remove_prefix(1);

    std::string user = "tester";
    if (const auto open = directive.find('['); open != std::string::npos) {
      const auto close = directive.find(']', open);
      if (close == std::string::npos || close != directive.size() - 1) fail("unterminated [user]");
      user = directive.substr(open + 1, close - open - 1);
      directive = directive.substr(0, open);
      if (user.empty()) fail("empty user name");
    }

    if (directive == "channel") {
      script.channel = std::string(text::trim(value));
      if (script.channel.empty()) fail("empty channel name");
    } else if (directive == "say") {
      if (text::trim(value).empty()) fail("say needs text");
      script.steps.push_back({SayStep{user, unescape(value), {}}, line_no});
    } else if (directive == "attach") {
      SayStep say{user, {}, {}};
      std::istringstream names{std::string(value)};
      std::string file;
      while (names >> file) {
        say.attachments.push_back({file, media_kind_for_filename(file), "transcript:" + file, 0});
      }
      if (say.attachments.empty()) fail("attach needs at least one file name");
      script.steps.push_back({std::move(say), line_no});
    } else if (directive == "wait") {
      double seconds = 0;
      try {
        seconds = std::stod(std::string(text::trim(value)));
      } catch (const std::exception&) {
        fail("wait needs a number of seconds");
      }
      if (!(seconds >= 0) || !std::isfinite(seconds)) fail("wait needs a non-negative number of seconds");
      script.steps.push_back({WaitStep{Millis{std::llround(seconds * 1000.0)}}, line_no});
    } else if (directive == "expect" || directive == "expect~" || directive == "expect/") {
      ExpectStep e;
      e.mode = directive == "expect" ? MatchMode::exact : directive == "expect~" ? MatchMode::contains : MatchMode::regex;
      e.pattern = e.mode == MatchMode::regex ? std::string(value) : unescape(value);
      if (e.mode == MatchMode::regex) {
        try {
          std::regex check(e.pattern);
        } catch (const std::regex_error& err) {
          fail(std::string("bad regex: ") + err.what());
        }
      }
      script.steps.push_back({std::move(e), line_no});
    } else if (directive == "skip") {
      const auto kind = action_kind_from_string(text::trim(value));
      if (!kind) fail("skip needs an output kind (reply, prompt, reminder, suggestion, system)");
      script.steps.push_back({SkipStep{*kind}, line_no});
    } else {
      fail("unknown directive '" + directive + "'");
    }
  }
  return script;
}

TranscriptScript load_transcript(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw TranscriptError("cannot read transcript '" + path.string() + "'");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_transcript(buffer.str(), path.filename().string());
}

TranscriptReport run_transcript(const TranscriptScript& script, std::shared_ptr<const EngineContext> ctx,
                                std::uint64_t seed) {
  auto seeded = std::make_shared<EngineContext>(*ctx);
  seeded->config.suggestions.seed = seed;

  MemoryEventStore store;
  LoopbackAdapter adapter;
  Host host(seeded, store, adapter);
  const ChannelId channel(script.channel);

  TranscriptReport report;
  std::deque<Delivered> pending;
  std::vector<Delivered> consumed;
  Timestamp now = from_millis(0);

  auto refill = [&] {
    for (auto& d : adapter.drain(channel)) pending.push_back(std::move(d));
  };
  auto fail = [&](const ScriptLine& line, std::string why) {
    std::ostringstream out;
    out << script.name << ":" << line.line << ": " << why;
    if (!consumed.empty()) {
      out << "\n  previous bot output: [" << to_string(consumed.back().action.kind) << "] \""
          << escape(consumed.back().action.text) << "\"";
    }
    report.passed = false;
    report.failure = out.str();
  };

  for (const auto& line : script.steps) {
    if (!report.passed) break;
    std::visit(
        [&](const auto& step) {
          using T = std::decay_t<decltype(step)>;
          if constexpr (std::is_same_v<T, SayStep>) {
            host.submit(InboundMessage{channel, UserId(step.user), step.text, step.attachments, now});
            ++report.tester_messages;
          } else if constexpr (std::is_same_v<T, WaitStep>) {
            now += step.amount;
            host.advance_clock(channel, now);
          } else if constexpr (std::is_same_v<T, SkipStep>) {
            refill();
            while (!pending.empty() && pending.front().action.kind == step.kind) {
              consumed.push_back(std::move(pending.front()));
              pending.pop_front();
              ++report.skipped;
            }
          } else {
            refill();
            if (pending.empty()) {
              fail(line, "expected bot output " + describe(step) + " but the bot produced no further output");
              return;
            }
            const auto& next = pending.front();
            if (!matches(step, next.action.text)) {
              fail(line, "expected bot output " + describe(step) + "\n  got [" +
                             std::string(to_string(next.action.kind)) + "] \"" + escape(next.action.text) + "\"");
              return;
            }
            consumed.push_back(next);
            pending.pop_front();
            ++report.expectations;
          }
        },
        line.step);
  }

  refill();
  report.unmatched_outputs = report.skipped + pending.size();
  report.log = store.records();
  for (const auto& r : report.log) {
    if (r.direction == Direction::outbound) ++report.bot_outputs;
  }
  return report;
}

}  // namespace explorebot::gateway
