// explorebot: run the chat gateway, replay golden transcripts, analyze audit
// logs and check knowledge catalogs.

#include <algorithm>
#include <csignal>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "explorebot/analytics.hpp"
#include "explorebot/event_store.hpp"
#include "explorebot/gateway/config.hpp"
#include "explorebot/gateway/server.hpp"
#include "explorebot/gateway/transcript.hpp"
#include "explorebot/knowledge.hpp"

namespace fs = std::filesystem;
using namespace explorebot;
using namespace explorebot::gateway;

namespace {

struct CommonFlags {
  std::optional<fs::path> config;
  std::optional<std::string> listen;
  std::optional<fs::path> catalog;
  std::optional<fs::path> manual;
  std::optional<fs::path> store;
  std::optional<fs::path> uploads;
  std::optional<std::uint64_t> seed;

  ConfigOverrides overrides() const { return {listen, catalog, manual, store, uploads, seed}; }
};

void add_engine_flags(CLI::App* cmd, CommonFlags& f) {
  cmd->add_option("--config", f.config, "JSON config file")->check(CLI::ExistingFile);
  cmd->add_option("--catalog", f.catalog, "knowledge catalog (JSON)");
  cmd->add_option("--manual", f.manual, "manual text shown by ?manual");
  cmd->add_option("--seed", f.seed, "scheduler seed");
}

int run_serve(const CommonFlags& flags) {
  const ServiceConfig config = resolve_config(flags.config, process_environment(), flags.overrides());
  auto ctx = make_engine_context(config);
  JsonlEventStore store(config.store);

  // Block the stop signals before the io thread starts so only sigwait sees them.
  sigset_t signals;
  sigemptyset(&signals);
  sigaddset(&signals, SIGINT);
  sigaddset(&signals, SIGTERM);
  pthread_sigmask(SIG_BLOCK, &signals, nullptr);

  Server server(config, ctx, store);
  const auto port = server.start();
  std::cout << "explorebot listening on " << config.listen_host << ':' << port << " (audit log "
            << config.store.string() << ", " << store.size() << " records)" << std::endl;
  int sig = 0;
  sigwait(&signals, &sig);
  std::cout << "stopping" << std::endl;
  server.stop();
  return 0;
}

std::vector<fs::path> expand_transcripts(const std::vector<fs::path>& inputs) {
  std::vector<fs::path> out;
  for (const auto& p : inputs) {
    if (fs::is_directory(p)) {
      std::vector<fs::path> found;
      for (const auto& e : fs::directory_iterator(p)) {
        if (e.is_regular_file() && e.path().extension() == ".chat") found.push_back(e.path());
      }
      std::sort(found.begin(), found.end());
      out.insert(out.end(), found.begin(), found.end());
    } else {
      out.push_back(p);
    }
  }
  return out;
}

int run_replay(const CommonFlags& flags, const std::vector<fs::path>& inputs, const std::optional<fs::path>& log_dir) {
  const ServiceConfig config = resolve_config(flags.config, process_environment(), flags.overrides());
  auto ctx = make_engine_context(config);
  const auto files = expand_transcripts(inputs);
  if (files.empty()) {
    std::cerr << "replay: no transcripts found\n";
    return 2;
  }
  if (log_dir) fs::create_directories(*log_dir);

  int failed = 0;
  for (const auto& file : files) {
    TranscriptReport report;
    try {
      report = run_transcript(load_transcript(file), ctx, config.seed);
    } catch (const std::exception& e) {
      std::cout << "FAIL " << file.string() << ": " << e.what() << '\n';
      ++failed;
      continue;
    }
    if (report.passed) {
      std::cout << "PASS " << file.string() << " (" << report.tester_messages << " messages, " << report.expectations
                << " expectations, " << report.skipped << " skipped, " << report.unmatched_outputs << " unmatched)\n";
    } else {
      std::cout << "FAIL " << file.string() << ": " << report.failure << '\n';
      ++failed;
    }
    if (log_dir) {
      std::ofstream out(*log_dir / (file.stem().string() + ".jsonl"), std::ios::binary);
      out << serialize_audit_log(report.log);
    }
  }
  std::cout << (files.size() - failed) << '/' << files.size() << " transcripts passed\n";
  return failed == 0 ? 0 : 1;
}

int run_analyze(const fs::path& log_path, const std::optional<std::string>& phases, const std::string& format) {
  const auto log = read_audit_log(log_path);
  std::optional<std::vector<PhaseSpan>> spans;
  if (phases) spans = parse_phase_spec(*phases);
  const MetricsTable table = interaction_table(log, spans);
  const BugStats stats = bug_stats(log);

  if (format == "json") {
    std::cout << nlohmann::json{{"interactions", to_json(table)}, {"bugs", to_json(stats)}}.dump(2) << '\n';
  } else if (format == "csv") {
    std::cout << render_csv(table);
  } else {
    std::cout << render_text(table) << '\n' << render_text(stats);
  }
  return 0;
}

int run_validate_catalog(const fs::path& file) {
  try {
    const Catalog catalog = load_catalog(file);
    std::size_t per_group[3] = {};
    for (const auto& item : catalog.items()) ++per_group[static_cast<std::size_t>(item.group)];
    int misses = 0;
    for (const auto& item : catalog.items()) {
      if (!std::holds_alternative<const KnowledgeItem*>(lookup(catalog, item.id))) {
        std::cout << "error: key '" << item.id << "' is listed but does not resolve\n";
        ++misses;
      }
    }
    if (misses) return 1;
    std::cout << "ok: catalog " << catalog.version() << ", " << catalog.size() << " items";
    for (auto g : kAllGroups) std::cout << ", " << group_key(g) << '=' << per_group[static_cast<std::size_t>(g)];
    std::cout << '\n';
    return 0;
  } catch (const CatalogError& e) {
    std::cout << "error: " << to_string(e.code());
    if (!e.entry().empty()) std::cout << " [" << e.entry() << ']';
    std::cout << ": " << e.what() << '\n';
    return 1;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"ExploreBot: a chatbot that assists exploratory testing sessions"};
  app.require_subcommand(1);

  CommonFlags serve_flags;
  auto* serve = app.add_subcommand("serve", "start the WebSocket gateway and the engine");
  add_engine_flags(serve, serve_flags);
  serve->add_option("--listen", serve_flags.listen, "host:port");
  serve->add_option("--store", serve_flags.store, "audit log (JSONL)");
  serve->add_option("--uploads", serve_flags.uploads, "attachment upload directory");

  CommonFlags replay_flags;
  std::vector<fs::path> transcripts;
  std::optional<fs::path> log_dir;
  auto* replay = app.add_subcommand("replay", "run golden transcripts");
  replay->add_option("transcript", transcripts, "transcript files or directories of *.chat")->required();
  add_engine_flags(replay, replay_flags);
  replay->add_option("--log-dir", log_dir, "write each transcript's audit log here");

  fs::path log_path;
  std::optional<std::string> phases;
  std::string format = "text";
  auto* analyze = app.add_subcommand("analyze", "interaction table and bug statistics of an audit log");
  analyze->add_option("log", log_path, "audit log (JSONL)")->required()->check(CLI::ExistingFile);
  analyze->add_option("--phases", phases, "offset ranges, e.g. training=0:120,test_session=120:");
  analyze->add_option("--format", format, "text, json or csv")->check(CLI::IsMember({"text", "json", "csv"}));

  fs::path catalog_path;
  auto* validate = app.add_subcommand("validate-catalog", "check a knowledge catalog file");
  validate->add_option("file", catalog_path, "catalog (JSON)")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*serve) return run_serve(serve_flags);
    if (*replay) return run_replay(replay_flags, transcripts, log_dir);
    if (*analyze) return run_analyze(log_path, phases, format);
    if (*validate) return run_validate_catalog(catalog_path);
  } catch (const std::exception& e) {
    std::cerr << "explorebot: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
