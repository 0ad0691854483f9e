#include "explorebot/gateway/adapter.hpp"

namespace explorebot::gateway {

void LoopbackAdapter::deliver(const OutboundAction& action, const EventRecord& record) {
  std::lock_guard lock(mutex_);
  if (fail_next_ > 0) {
    --fail_next_;
    throw DeliveryError("loopback delivery failure (injected)");
  }
  outbox_[action.channel].push_back({action, record});
  ++total_;
}

std::vector<Delivered> LoopbackAdapter::drain(const ChannelId& channel) {
  std::lock_guard lock(mutex_);
  auto& all = outbox_[channel];
  auto& taken = drained_[channel];
  std::vector<Delivered> out(all.begin() + static_cast<std::ptrdiff_t>(taken), all.end());
  taken = all.size();
  return out;
}

std::vector<Delivered> LoopbackAdapter::delivered(const ChannelId& channel) const {
  std::lock_guard lock(mutex_);
  auto it = outbox_.find(channel);
  return it == outbox_.end() ? std::vector<Delivered>{} : it->second;
}

std::size_t LoopbackAdapter::total_delivered() const {
  std::lock_guard lock(mutex_);
  return total_;
}

void LoopbackAdapter::fail_next(std::size_t n) {
  std::lock_guard lock(mutex_);
  fail_next_ = n;
}

InboundMessage make_message(std::string channel, std::string user, std::string text, Timestamp at,
                            std::vector<Attachment> attachments) {
  return InboundMessage{ChannelId(std::move(channel)), UserId(std::move(user)), std::move(text),
                        std::move(attachments), at};
}

}  // namespace explorebot::gateway
