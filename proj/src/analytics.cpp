#include "explorebot/analytics.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "explorebot/text.hpp"

namespace explorebot {

using nlohmann::json;

std::string_view to_string(InteractionClass c) noexcept {
  switch (c) {
    case InteractionClass::bot_reactive: return "bot_reactive";
    case InteractionClass::bot_active: return "bot_active";
    case InteractionClass::tester_reactive: return "tester_reactive";
    case InteractionClass::tester_active_accepted: return "tester_active_accepted";
    case InteractionClass::tester_active_invalid: return "tester_active_invalid";
  }
  return "";
}

std::string_view to_string(Phase p) noexcept { return p == Phase::training ? "training" : "test_session"; }

std::optional<Phase> phase_from_string(std::string_view s) noexcept {
  if (s == "training") return Phase::training;
  if (s == "test_session" || s == "test") return Phase::test_session;
  return std::nullopt;
}

bool is_chat_record(const EventRecord& r) noexcept { return r.direction != Direction::internal; }

std::optional<InteractionClass> classify(const EventRecord& r) {
  if (!is_chat_record(r) || r.payload == PayloadKind::timer) {
    throw std::invalid_argument("classify: timer and internal records are not interactions");
  }
  if (r.direction == Direction::inbound) {
    switch (r.payload) {
      case PayloadKind::command: return InteractionClass::tester_active_accepted;
      case PayloadKind::invalid_command: return InteractionClass::tester_active_invalid;
      case PayloadKind::flow_reply: return InteractionClass::tester_reactive;
      case PayloadKind::plain: return std::nullopt;
      default: break;
    }
    throw std::invalid_argument("classify: inbound record with bot payload kind");
  }
  switch (r.payload) {
    case PayloadKind::reply:
      if (!r.correlation) throw std::invalid_argument("classify: reply without correlation id");
      return InteractionClass::bot_reactive;
    case PayloadKind::prompt:
    case PayloadKind::reminder:
    case PayloadKind::suggestion:
    case PayloadKind::system:
      return InteractionClass::bot_active;
    default: break;
  }
  throw std::invalid_argument("classify: outbound record with tester payload kind");
}

std::uint64_t ClassCounts::total() const noexcept {
  return std::accumulate(by_class.begin(), by_class.end(), std::uint64_t{0});
}

std::vector<PhaseSpan> parse_phase_spec(std::string_view spec) {
  std::vector<PhaseSpan> spans;
  auto fail = [&](const std::string& why) {
    throw std::invalid_argument("bad phase spec '" + std::string(spec) + "': " + why);
  };
  auto parse_offset = [&](std::string_view s) -> std::uint64_t {
    std::size_t used = 0;
    std::uint64_t v = 0;
    try {
      v = std::stoull(std::string(s), &used);
    } catch (const std::exception&) {
      fail("'" + std::string(s) + "' is not an offset");
    }
    if (used != s.size()) fail("'" + std::string(s) + "' is not an offset");
    return v;
  };
  while (!spec.empty()) {
    const auto comma = spec.find(',');
    const std::string_view part = text::trim(spec.substr(0, comma));
    spec = comma == std::string_view::npos ? std::string_view{} : spec.substr(comma + 1);
    if (part.empty()) continue;
    const auto eq = part.find('=');
    const auto colon = part.find(':', eq == std::string_view::npos ? 0 : eq);
    if (eq == std::string_view::npos || colon == std::string_view::npos) fail("expected phase=begin:end");
    const auto phase = phase_from_string(text::trim(part.substr(0, eq)));
    if (!phase) fail("unknown phase '" + std::string(part.substr(0, eq)) + "'");
    PhaseSpan span{*phase, 0, UINT64_MAX};
    const auto begin = text::trim(part.substr(eq + 1, colon - eq - 1));
    const auto end = text::trim(part.substr(colon + 1));
    if (!begin.empty()) span.begin = parse_offset(begin);
    if (!end.empty()) span.end = parse_offset(end);
    if (span.end < span.begin) fail("end before begin");
    spans.push_back(span);
  }
  return spans;
}

MetricsTable interaction_table(const std::vector<EventRecord>& log, const std::optional<std::vector<PhaseSpan>>& phases) {
  if (phases) {
    auto sorted = *phases;
    std::sort(sorted.begin(), sorted.end(), [](const auto& a, const auto& b) { return a.begin < b.begin; });
    for (std::size_t i = 1; i < sorted.size(); ++i) {
      if (sorted[i].begin < sorted[i - 1].end) throw std::invalid_argument("phase boundaries overlap");
    }
  }
  auto phase_of = [&](const EventRecord& r) -> std::optional<Phase> {
    if (!phases) return r.session ? Phase::test_session : Phase::training;
    for (const auto& span : *phases) {
      if (r.offset >= span.begin && r.offset < span.end) return span.phase;
    }
    return std::nullopt;
  };

  MetricsTable table;
  for (const auto& r : log) {
    if (!is_chat_record(r)) continue;
    const auto phase = phase_of(r);
    if (!phase) continue;
    const auto cls = classify(r);
    if (!cls) {
      ++table.excluded_plain[static_cast<std::size_t>(*phase)];
      continue;
    }
    table.cell(*phase, r.actor.is_bot() ? ActorGroup::bot : ActorGroup::testers).add(*cls);
  }
  return table;
}

namespace {

double round2(double v) { return std::round(v * 100.0) / 100.0; }

}  // namespace

BugStats bug_stats_from_counts(std::vector<std::uint64_t> counts) {
  BugStats stats;
  stats.per_participant_counts = counts;
  stats.total = std::accumulate(counts.begin(), counts.end(), std::uint64_t{0});
  if (counts.empty()) return stats;
  stats.mean = round2(static_cast<double>(stats.total) / static_cast<double>(counts.size()));
  std::sort(counts.begin(), counts.end());
  const std::size_t n = counts.size();
  stats.median = n % 2 == 1 ? static_cast<double>(counts[n / 2])
                            : (static_cast<double>(counts[n / 2 - 1]) + static_cast<double>(counts[n / 2])) / 2.0;
  return stats;
}

BugStats bug_stats(const std::vector<EventRecord>& log) {
  std::vector<UserId> participants;
  std::vector<std::uint64_t> counts;
  auto slot = [&](const UserId& user) -> std::uint64_t& {
    auto it = std::find(participants.begin(), participants.end(), user);
    if (it == participants.end()) {
      participants.push_back(user);
      counts.push_back(0);
      return counts.back();
    }
    return counts[static_cast<std::size_t>(it - participants.begin())];
  };
  for (const auto& r : log) {
    if (r.actor.tester) slot(*r.actor.tester);
    if (r.direction != Direction::internal || r.text != "report_filed" || !r.data.contains("report")) continue;
    const auto& report = r.data["report"];
    if (report.value("type", "") != "bug") continue;
    ++slot(UserId(report.value("reporter", r.actor.tester ? r.actor.tester->str() : std::string{})));
  }
  BugStats stats = bug_stats_from_counts(counts);
  stats.participants = std::move(participants);
  return stats;
}

namespace {

constexpr InteractionClass kBotClasses[] = {InteractionClass::bot_reactive, InteractionClass::bot_active};
constexpr InteractionClass kTesterClasses[] = {InteractionClass::tester_reactive,
                                               InteractionClass::tester_active_accepted,
                                               InteractionClass::tester_active_invalid};

std::string_view row_label(InteractionClass c) {
  switch (c) {
    case InteractionClass::bot_reactive: return "Reactive int.";
    case InteractionClass::bot_active: return "Active int.";
    case InteractionClass::tester_reactive: return "Reactive int.";
    case InteractionClass::tester_active_accepted: return "Active int. (accepted)";
    case InteractionClass::tester_active_invalid: return "Active int. (invalid)";
  }
  return "";
}

}  // namespace

std::string render_text(const MetricsTable& table) {
  std::ostringstream out;
  auto row = [&](std::string_view label, std::uint64_t training, std::uint64_t test) {
    out << std::left << std::setw(26) << label << std::right << std::setw(10) << training << std::setw(14) << test
        << '\n';
  };
  out << std::left << std::setw(26) << "" << std::right << std::setw(10) << "TRAINING" << std::setw(14)
      << "TEST SESSIONS" << '\n';
  auto block = [&](std::string_view heading, ActorGroup actor, auto const& classes) {
    out << heading << '\n';
    for (InteractionClass c : classes) {
      row(row_label(c), table.cell(Phase::training, actor)[c], table.cell(Phase::test_session, actor)[c]);
    }
    row("Total", table.cell(Phase::training, actor).total(), table.cell(Phase::test_session, actor).total());
  };
  block("Bot", ActorGroup::bot, kBotClasses);
  block("Participants", ActorGroup::testers, kTesterClasses);
  out << "Excluded plain tester chatter (not addressed to the bot): training "
      << table.excluded_plain[0] << ", test sessions " << table.excluded_plain[1] << '\n';
  return out.str();
}

std::string render_csv(const MetricsTable& table) {
  std::ostringstream out;
  out << "phase,actor,class,count\n";
  for (Phase p : {Phase::training, Phase::test_session}) {
    for (ActorGroup a : {ActorGroup::bot, ActorGroup::testers}) {
      const auto& cell = table.cell(p, a);
      const std::string_view actor = a == ActorGroup::bot ? "bot" : "testers";
      auto emit = [&](std::string_view cls, std::uint64_t n) {
        out << to_string(p) << ',' << actor << ',' << cls << ',' << n << '\n';
      };
      if (a == ActorGroup::bot) {
        for (auto c : kBotClasses) emit(to_string(c), cell[c]);
      } else {
        for (auto c : kTesterClasses) emit(to_string(c), cell[c]);
      }
      emit("total", cell.total());
    }
  }
  return out.str();
}

json to_json(const MetricsTable& table) {
  json j;
  for (Phase p : {Phase::training, Phase::test_session}) {
    json phase;
    for (ActorGroup a : {ActorGroup::bot, ActorGroup::testers}) {
      const auto& cell = table.cell(p, a);
      json counts;
      if (a == ActorGroup::bot) {
        for (auto c : kBotClasses) counts[std::string(to_string(c))] = cell[c];
      } else {
        for (auto c : kTesterClasses) counts[std::string(to_string(c))] = cell[c];
      }
      counts["total"] = cell.total();
      phase[a == ActorGroup::bot ? "bot" : "testers"] = std::move(counts);
    }
    phase["excluded_plain"] = table.excluded_plain[static_cast<std::size_t>(p)];
    j[std::string(to_string(p))] = std::move(phase);
  }
  return j;
}

std::string render_text(const BugStats& stats) {
  std::ostringstream out;
  out << "Bugs reported: total " << stats.total << ", mean " << std::fixed << std::setprecision(2) << stats.mean
      << ", median " << std::setprecision(1) << stats.median << '\n';
  for (std::size_t i = 0; i < stats.per_participant_counts.size(); ++i) {
    out << "  " << (i < stats.participants.size() ? stats.participants[i].str() : "participant " + std::to_string(i + 1))
        << ": " << stats.per_participant_counts[i] << '\n';
  }
  return out.str();
}

json to_json(const BugStats& stats) {
  json per = json::array();
  for (std::size_t i = 0; i < stats.per_participant_counts.size(); ++i) {
    json entry{{"bugs", stats.per_participant_counts[i]}};
    if (i < stats.participants.size()) entry["participant"] = stats.participants[i].str();
    per.push_back(std::move(entry));
  }
  return {{"total", stats.total}, {"mean", stats.mean}, {"median", stats.median}, {"per_participant", per}};
}

}  // namespace explorebot
