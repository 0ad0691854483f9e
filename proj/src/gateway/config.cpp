#include "explorebot/gateway/config.hpp"

#include <cstdlib>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "explorebot/knowledge.hpp"

#ifndef EXPLOREBOT_DATA_DIR
#define EXPLOREBOT_DATA_DIR "data"
#endif

namespace explorebot::gateway {

using nlohmann::json;
namespace fs = std::filesystem;

ServiceConfig::ServiceConfig()
    : catalog(fs::path(EXPLOREBOT_DATA_DIR) / "catalog.json"), manual(fs::path(EXPLOREBOT_DATA_DIR) / "manual.txt") {}

EnvLookup process_environment() {
  return [](std::string_view name) -> std::optional<std::string> {
    const char* value = std::getenv(std::string(name).c_str());
    if (!value || !*value) return std::nullopt;
    return std::string(value);
  };
}

std::pair<std::string, unsigned short> parse_listen(std::string_view address) {
  const auto colon = address.rfind(':');
  if (colon == std::string_view::npos) throw std::invalid_argument("listen address must be host:port");
  std::string host(address.substr(0, colon));
  if (host.empty()) host = "127.0.0.1";
  const std::string port_text(address.substr(colon + 1));
  std::size_t used = 0;
  unsigned long port = 0;
  try {
    port = std::stoul(port_text, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != port_text.size() || port > 65535) {
    throw std::invalid_argument("bad port in listen address '" + std::string(address) + "'");
  }
  return {host, static_cast<unsigned short>(port)};
}

namespace {

std::uint64_t parse_seed(const std::string& text, std::string_view source) {
  std::size_t used = 0;
  std::uint64_t seed = 0;
  try {
    seed = std::stoull(text, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != text.size()) {
    throw std::invalid_argument(std::string(source) + ": seed must be a non-negative integer");
  }
  return seed;
}

void apply_file(ServiceConfig& cfg, const fs::path& file) {
  std::ifstream in(file);
  if (!in) throw std::runtime_error("cannot read config file '" + file.string() + "'");
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw std::runtime_error("config file '" + file.string() + "' is not valid JSON: " + e.what());
  }
  const fs::path base = file.parent_path();
  auto path_of = [&](const char* key) { return base / fs::path(j.at(key).get<std::string>()); };
  try {
    if (j.contains("listen")) std::tie(cfg.listen_host, cfg.listen_port) = parse_listen(j["listen"].get<std::string>());
    if (j.contains("catalog")) cfg.catalog = path_of("catalog");
    if (j.contains("manual")) cfg.manual = path_of("manual");
    if (j.contains("store")) cfg.store = path_of("store");
    if (j.contains("uploads")) cfg.uploads = path_of("uploads");
    if (j.contains("seed")) cfg.seed = j["seed"].get<std::uint64_t>();
    if (j.contains("max_frame_bytes")) cfg.max_frame_bytes = j["max_frame_bytes"].get<std::size_t>();
    if (j.contains("max_upload_bytes")) cfg.max_upload_bytes = j["max_upload_bytes"].get<std::size_t>();
    if (j.contains("reminders")) cfg.reminders.fractions = j["reminders"].get<std::vector<double>>();
    if (j.contains("suggestions")) {
      const auto& s = j["suggestions"];
      if (s.contains("min_gap_s")) cfg.suggestions.min_gap = std::chrono::seconds{s["min_gap_s"].get<long long>()};
      if (s.contains("initial_delay_s")) {
        cfg.suggestions.initial_delay = std::chrono::seconds{s["initial_delay_s"].get<long long>()};
      }
    }
  } catch (const json::exception& e) {
    throw std::runtime_error("config file '" + file.string() + "': " + e.what());
  }
}

}  // namespace

ServiceConfig resolve_config(const std::optional<fs::path>& file, const EnvLookup& env, const ConfigOverrides& flags) {
  ServiceConfig cfg;
  if (file) apply_file(cfg, *file);

  if (auto v = env("EXPLOREBOT_LISTEN")) std::tie(cfg.listen_host, cfg.listen_port) = parse_listen(*v);
  if (auto v = env("EXPLOREBOT_CATALOG")) cfg.catalog = *v;
  if (auto v = env("EXPLOREBOT_MANUAL")) cfg.manual = *v;
  if (auto v = env("EXPLOREBOT_STORE")) cfg.store = *v;
  if (auto v = env("EXPLOREBOT_UPLOADS")) cfg.uploads = *v;
  if (auto v = env("EXPLOREBOT_SEED")) cfg.seed = parse_seed(*v, "EXPLOREBOT_SEED");

  if (flags.listen) std::tie(cfg.listen_host, cfg.listen_port) = parse_listen(*flags.listen);
  if (flags.catalog) cfg.catalog = *flags.catalog;
  if (flags.manual) cfg.manual = *flags.manual;
  if (flags.store) cfg.store = *flags.store;
  if (flags.uploads) cfg.uploads = *flags.uploads;
  if (flags.seed) cfg.seed = *flags.seed;

  cfg.suggestions.seed = cfg.seed;
  cfg.reminders.validate();
  cfg.suggestions.validate();
  if (cfg.max_frame_bytes == 0) throw std::invalid_argument("max_frame_bytes must be positive");
  return cfg;
}

std::shared_ptr<const EngineContext> make_engine_context(const ServiceConfig& config) {
  auto catalog = std::make_shared<const Catalog>(load_catalog(config.catalog));
  EngineConfig engine;
  engine.reminders = config.reminders;
  engine.suggestions = config.suggestions;
  engine.suggestions.seed = config.seed;
  return std::make_shared<const EngineContext>(std::move(engine), load_manual(config.manual.string()),
                                               std::move(catalog));
}

}  // namespace explorebot::gateway
