#pragma once

// Adapter contract between a chat platform and the engine host. A platform
// adapter turns platform messages into InboundMessages (submitted in arrival
// order per channel) and receives every OutboundAction after it is logged.

#include <map>
#include <mutex>
#include <string>
#include <vector>

#include "explorebot/host.hpp"

namespace explorebot::gateway {

struct Delivered {
  OutboundAction action;
  EventRecord record;
};

/// In-process adapter: keeps delivered actions per channel and offers a
/// convenience `say`. Serves as the stand-in for a real platform integration
/// and backs the transcript runner.
class LoopbackAdapter final : public ActionSink {
 public:
  void deliver(const OutboundAction& action, const EventRecord& record) override;

  /// Takes everything delivered so far on `channel` (in delivery order).
  std::vector<Delivered> drain(const ChannelId& channel);
  std::vector<Delivered> delivered(const ChannelId& channel) const;
  std::size_t total_delivered() const;

  /// Fail the next `n` deliveries with DeliveryError (fault injection).
  void fail_next(std::size_t n);

 private:
  mutable std::mutex mutex_;
  std::map<ChannelId, std::vector<Delivered>> outbox_;
  std::map<ChannelId, std::size_t> drained_;
  std::size_t total_ = 0;
  std::size_t fail_next_ = 0;
};

InboundMessage make_message(std::string channel, std::string user, std::string text, Timestamp at,
                            std::vector<Attachment> attachments = {});

}  // namespace explorebot::gateway
