#pragma once

// Interaction accounting over the audit log: every chat record is active or
// reactive for its actor, tabulated per phase (training vs. test sessions),
// plus per-participant bug statistics.

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "explorebot/event_store.hpp"

namespace explorebot {

enum class InteractionClass { bot_reactive, bot_active, tester_reactive, tester_active_accepted, tester_active_invalid };

inline constexpr std::size_t kInteractionClassCount = 5;

std::string_view to_string(InteractionClass c) noexcept;

/// Rules:
///  tester command -> active (accepted); invalid command -> active (invalid);
///  flow reply -> reactive; plain chatter -> nullopt (excluded);
///  bot reply carrying a correlation id -> reactive;
///  bot prompt, reminder, suggestion, system notice (introduction) -> active.
/// Throws std::invalid_argument for timer and internal records.
std::optional<InteractionClass> classify(const EventRecord& record);

/// True for records classify accepts (inbound and outbound).
bool is_chat_record(const EventRecord& record) noexcept;

enum class Phase { training, test_session };
enum class ActorGroup { bot, testers };

std::string_view to_string(Phase p) noexcept;
std::optional<Phase> phase_from_string(std::string_view s) noexcept;

struct ClassCounts {
  std::array<std::uint64_t, kInteractionClassCount> by_class{};

  std::uint64_t operator[](InteractionClass c) const noexcept { return by_class[static_cast<std::size_t>(c)]; }
  void add(InteractionClass c, std::uint64_t n = 1) noexcept { by_class[static_cast<std::size_t>(c)] += n; }
  std::uint64_t total() const noexcept;

  friend bool operator==(const ClassCounts&, const ClassCounts&) = default;
};

struct MetricsTable {
  // [phase][actor]
  std::array<std::array<ClassCounts, 2>, 2> cells{};
  std::array<std::uint64_t, 2> excluded_plain{};  // per phase

  const ClassCounts& cell(Phase p, ActorGroup a) const noexcept {
    return cells[static_cast<std::size_t>(p)][static_cast<std::size_t>(a)];
  }
  ClassCounts& cell(Phase p, ActorGroup a) noexcept {
    return cells[static_cast<std::size_t>(p)][static_cast<std::size_t>(a)];
  }

  friend bool operator==(const MetricsTable&, const MetricsTable&) = default;
};

/// Half-open offset range [begin, end) assigned to one phase.
struct PhaseSpan {
  Phase phase = Phase::training;
  std::uint64_t begin = 0;
  std::uint64_t end = UINT64_MAX;
};

/// "training=0:120,test_session=120:" (an empty end means open-ended).
/// Throws std::invalid_argument on syntax errors.
std::vector<PhaseSpan> parse_phase_spec(std::string_view spec);

/// With explicit spans, records outside every span are ignored and
/// overlapping spans throw std::invalid_argument. Without spans, records
/// belonging to a session count as test sessions and the rest as training.
MetricsTable interaction_table(const std::vector<EventRecord>& log,
                               const std::optional<std::vector<PhaseSpan>>& phases = std::nullopt);

struct BugStats {
  std::vector<UserId> participants;  // empty when built from bare counts
  std::vector<std::uint64_t> per_participant_counts;
  std::uint64_t total = 0;
  double mean = 0.0;  // rounded to 2 decimals
  double median = 0.0;
};

BugStats bug_stats_from_counts(std::vector<std::uint64_t> counts);
/// Counts bug-type reports (issues excluded) per tester seen in the log, in
/// order of first appearance; testers without bug reports count as zero.
BugStats bug_stats(const std::vector<EventRecord>& log);

std::string render_text(const MetricsTable& table);
std::string render_csv(const MetricsTable& table);
nlohmann::json to_json(const MetricsTable& table);
std::string render_text(const BugStats& stats);
nlohmann::json to_json(const BugStats& stats);

}  // namespace explorebot
