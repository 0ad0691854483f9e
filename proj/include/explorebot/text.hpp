#pragma once

#include <string>
#include <string_view>

namespace explorebot::text {

std::string_view trim(std::string_view s) noexcept;
std::string to_lower(std::string_view s);
bool iequals(std::string_view a, std::string_view b) noexcept;

/// "7 min 30 s", "15 min", "45 s".
std::string format_minutes_seconds(long long total_seconds);

}  // namespace explorebot::text
