#pragma once

// Golden transcripts: scripted tester input, virtual-clock advances and
// expectations over the bot's output, replayed against a fresh engine.
// File format: docs/transcripts.md.

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "explorebot/engine.hpp"
#include "explorebot/event_store.hpp"

namespace explorebot::gateway {

struct SayStep {
  std::string user;
  std::string text;
  std::vector<Attachment> attachments;
};

struct WaitStep {
  Millis amount{};
};

enum class MatchMode { exact, contains, regex };

struct ExpectStep {
  MatchMode mode = MatchMode::exact;
  std::string pattern;
};

/// Consumes any run of consecutive outputs of one kind (e.g. random suggestions).
struct SkipStep {
  ActionKind kind = ActionKind::suggestion;
};

using TranscriptStep = std::variant<SayStep, WaitStep, ExpectStep, SkipStep>;

struct ScriptLine {
  TranscriptStep step;
  std::size_t line = 0;
};

struct TranscriptScript {
  std::string name;
  std::string channel = "transcript";
  std::vector<ScriptLine> steps;
};

class TranscriptError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Throws TranscriptError naming the offending line.
TranscriptScript parse_transcript(std::string_view source, std::string name = {});
TranscriptScript load_transcript(const std::filesystem::path& path);

struct TranscriptReport {
  bool passed = true;
  std::string failure;  // first mismatch with context
  std::size_t tester_messages = 0;
  std::size_t expectations = 0;     // expect steps that matched
  std::size_t skipped = 0;          // outputs consumed by skip steps
  std::size_t bot_outputs = 0;      // outbound records produced
  std::size_t unmatched_outputs = 0;  // skipped plus never consumed by an expectation
  std::vector<EventRecord> log;
};

/// Drives a fresh engine (seeded with `seed`) through the script on a virtual
/// clock starting at 0. Stops at the first failed expectation.
TranscriptReport run_transcript(const TranscriptScript& script, std::shared_ptr<const EngineContext> ctx,
                                std::uint64_t seed);

}  // namespace explorebot::gateway
