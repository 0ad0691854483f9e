#pragma once

#include <memory>
#include <string>

#include "explorebot/engine.hpp"
#include "explorebot/knowledge.hpp"

namespace explorebot::testing {

inline std::shared_ptr<const Catalog> seed_catalog() {
  static const auto catalog = std::make_shared<const Catalog>(load_catalog(EXPLOREBOT_TEST_DATA_DIR "/catalog.json"));
  return catalog;
}

inline std::shared_ptr<const Catalog> numbered_catalog(int n) {
  std::vector<KnowledgeItem> items;
  for (int i = 0; i < n; ++i) {
    items.push_back({"item-" + std::to_string(i), KnowledgeGroup::tours, "Item " + std::to_string(i), "body", {}});
  }
  return std::make_shared<const Catalog>("test", std::move(items));
}

inline std::shared_ptr<const EngineContext> make_context(std::uint64_t seed = 1,
                                                         std::shared_ptr<const Catalog> catalog = seed_catalog()) {
  EngineConfig config;
  config.suggestions.seed = seed;
  return std::make_shared<const EngineContext>(config, Manual("1. Charter.\n2. Start.\n3. Report."), std::move(catalog));
}

// The shipped catalog and manual, as `explorebot replay` uses them.
inline std::shared_ptr<const EngineContext> seed_data_context(std::uint64_t seed = 1) {
  EngineConfig config;
  config.suggestions.seed = seed;
  return std::make_shared<const EngineContext>(config, load_manual(EXPLOREBOT_TEST_DATA_DIR "/manual.txt"),
                                               seed_catalog());
}

inline InboundMessage say(std::string text, std::int64_t at_ms = 0, std::string channel = "c",
                          std::vector<Attachment> attachments = {}) {
  return InboundMessage{ChannelId(std::move(channel)), UserId("tester"), std::move(text), std::move(attachments),
                        from_millis(at_ms)};
}

// Feeds events to the pure transition function and keeps the state.
struct Driver {
  std::shared_ptr<const EngineContext> ctx = make_context();
  EngineState state{ChannelId("c")};
  Transition last{.state = EngineState(ChannelId("c"))};

  const Transition& send(std::string text, std::int64_t at_ms = 0, std::vector<Attachment> attachments = {}) {
    last = handle_event(*ctx, state, say(std::move(text), at_ms, state.channel.str(), std::move(attachments)));
    state = last.state;
    return last;
  }

  // Fires every timer due up to `at_ms` and collects the actions.
  std::vector<OutboundAction> tick(std::int64_t at_ms) {
    std::vector<OutboundAction> out;
    if (!state.active_session) return out;
    auto session = *state.active_session;
    const auto events = due_events(session, from_millis(at_ms));
    state.active_session = session;
    for (const auto& e : events) {
      last = handle_event(*ctx, state, e);
      state = last.state;
      out.insert(out.end(), last.actions.begin(), last.actions.end());
    }
    return out;
  }

  const OutboundAction& only_action() const {
    if (last.actions.size() != 1) throw std::logic_error("expected exactly one action, got " + std::to_string(last.actions.size()));
    return last.actions.front();
  }
};

}  // namespace explorebot::testing
