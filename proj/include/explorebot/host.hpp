#pragma once

// Runs the engine for many channels: serializes events per channel, fires due
// timers from the virtual clock, persists every record before releasing the
// corresponding actions (write-ahead), then hands actions to the sink.

#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <stdexcept>
#include <vector>

#include "explorebot/engine.hpp"
#include "explorebot/event_store.hpp"

namespace explorebot {

class DeliveryError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ActionSink {
 public:
  virtual ~ActionSink() = default;
  /// Called only after `record` is durable. Throws DeliveryError on failure.
  virtual void deliver(const OutboundAction& action, const EventRecord& record) = 0;
};

class NullSink final : public ActionSink {
 public:
  void deliver(const OutboundAction&, const EventRecord&) override {}
};

enum class SubmitStatus { accepted, halted };

class Host {
 public:
  Host(std::shared_ptr<const EngineContext> ctx, EventStore& store, ActionSink& sink);

  /// Fires timers due up to the message time, then handles the message.
  /// Throws std::invalid_argument for an empty message or one older than the
  /// channel clock. Delivery failures propagate as DeliveryError after the
  /// records are persisted.
  SubmitStatus submit(const InboundMessage& message);

  /// Moves a channel's virtual clock forward, firing due timers. Earlier times are ignored.
  SubmitStatus advance_clock(const ChannelId& channel, Timestamp now);
  void advance_all(Timestamp now);

  std::optional<EngineState> snapshot(const ChannelId& channel) const;
  bool halted(const ChannelId& channel) const;
  std::vector<ChannelId> channels() const;
  const EngineContext& context() const noexcept { return *ctx_; }

 private:
  struct Channel {
    explicit Channel(ChannelId id) : state(std::move(id)) {}
    mutable std::mutex mutex;
    EngineState state;
    Timestamp clock{};
    bool halted = false;
  };

  Channel& channel(const ChannelId& id);
  Channel* find(const ChannelId& id) const;
  void fire_due(Channel& ch, Timestamp now);
  void process(Channel& ch, const Event& event);

  std::shared_ptr<const EngineContext> ctx_;
  EventStore& store_;
  ActionSink& sink_;
  mutable std::shared_mutex channels_mutex_;
  std::map<ChannelId, std::unique_ptr<Channel>> channels_;
  std::mutex store_mutex_;
};

/// Re-derives a channel's final state from its audit records by replaying its
/// inbound messages and timer firings through a fresh host. `replayed`, when
/// given, receives the records the replay produced.
EngineState rebuild_state(std::shared_ptr<const EngineContext> ctx, const ChannelId& channel,
                          const std::vector<EventRecord>& records, std::vector<EventRecord>* replayed = nullptr);

/// JSON form of an effect, stored in the `data` field of internal records.
nlohmann::json effect_to_json(const Effect& effect);
std::string_view effect_name(const Effect& effect);

}  // namespace explorebot
