#pragma once

#include <chrono>
#include <compare>
#include <cstdint>
#include <functional>
#include <string>
#include <utility>

namespace explorebot {

/// Virtual clock driven by explicit events. The engine never reads wall time;
/// adapters decide how virtual time relates to the real clock.
struct VirtualClock {
  using duration = std::chrono::milliseconds;
  using rep = duration::rep;
  using period = duration::period;
  using time_point = std::chrono::time_point<VirtualClock>;
  static constexpr bool is_steady = true;
};

using Millis = std::chrono::milliseconds;
using Timestamp = VirtualClock::time_point;

inline std::int64_t to_millis(Timestamp t) { return t.time_since_epoch().count(); }
inline Timestamp from_millis(std::int64_t ms) { return Timestamp{Millis{ms}}; }

/// Opaque string identifier tagged with the domain concept it names.
template <typename Tag>
class Id {
 public:
  Id() = default;
  explicit Id(std::string value) : value_(std::move(value)) {}

  const std::string& str() const noexcept { return value_; }
  bool empty() const noexcept { return value_.empty(); }

  friend bool operator==(const Id&, const Id&) = default;
  friend auto operator<=>(const Id&, const Id&) = default;

 private:
  std::string value_;
};

using ChannelId = Id<struct ChannelTag>;
using UserId = Id<struct UserTag>;
using SessionId = Id<struct SessionTag>;
using CharterId = Id<struct CharterTag>;
using ReportId = Id<struct ReportTag>;
using FlowId = Id<struct FlowTag>;

}  // namespace explorebot

template <typename Tag>
struct std::hash<explorebot::Id<Tag>> {
  std::size_t operator()(const explorebot::Id<Tag>& id) const noexcept {
    return std::hash<std::string>{}(id.str());
  }
};
