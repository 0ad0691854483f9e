#pragma once

// Service configuration: one JSON file, overridden by EXPLOREBOT_* environment
// variables, overridden by command-line flags.

#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <string_view>

#include "explorebot/engine.hpp"

namespace explorebot::gateway {

struct ServiceConfig {
  std::string listen_host = "127.0.0.1";
  unsigned short listen_port = 8787;
  std::filesystem::path catalog;
  std::filesystem::path manual;
  std::filesystem::path store = "explorebot-audit.jsonl";
  std::filesystem::path uploads = "uploads";
  std::uint64_t seed = 1;
  std::size_t max_frame_bytes = 64 * 1024;
  std::size_t max_upload_bytes = 8 * 1024 * 1024;
  ReminderPolicy reminders;
  SuggestionPolicy suggestions;

  ServiceConfig();
};

struct ConfigOverrides {
  std::optional<std::string> listen;
  std::optional<std::filesystem::path> catalog;
  std::optional<std::filesystem::path> manual;
  std::optional<std::filesystem::path> store;
  std::optional<std::filesystem::path> uploads;
  std::optional<std::uint64_t> seed;
};

using EnvLookup = std::function<std::optional<std::string>(std::string_view name)>;

/// Reads the real process environment.
EnvLookup process_environment();

/// "host:port" or ":port". Throws std::invalid_argument.
std::pair<std::string, unsigned short> parse_listen(std::string_view address);

/// Precedence: flags > environment > file > built-in defaults. Relative paths
/// in the file resolve against the file's directory. Throws std::runtime_error
/// (or std::invalid_argument) with a diagnostic on any bad value.
ServiceConfig resolve_config(const std::optional<std::filesystem::path>& file, const EnvLookup& env,
                             const ConfigOverrides& flags);

/// Loads catalog and manual and validates the policies. Any failure aborts
/// startup with the loader's diagnostic.
std::shared_ptr<const EngineContext> make_engine_context(const ServiceConfig& config);

}  // namespace explorebot::gateway
