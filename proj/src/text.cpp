#include "explorebot/text.hpp"

#include <algorithm>
#include <cctype>
#include <sstream>

namespace explorebot::text {

namespace {
bool is_space(char c) noexcept { return std::isspace(static_cast<unsigned char>(c)) != 0; }
char lower(char c) noexcept { return static_cast<char>(std::tolower(static_cast<unsigned char>(c))); }
}  // namespace

std::string_view trim(std::string_view s) noexcept {
  while (!s.empty() && is_space(s.front())) s.remove_prefix(1);
  while (!s.empty() && is_space(s.back())) s.remove_suffix(1);
  return s;
}

std::string to_lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(), lower);
  return out;
}

bool iequals(std::string_view a, std::string_view b) noexcept {
  return a.size() == b.size() &&
         std::equal(a.begin(), a.end(), b.begin(), [](char x, char y) { return lower(x) == lower(y); });
}

std::string format_minutes_seconds(long long total_seconds) {
  if (total_seconds < 0) total_seconds = 0;
  const long long minutes = total_seconds / 60;
  const long long seconds = total_seconds % 60;
  std::ostringstream out;
  if (minutes > 0) out << minutes << " min";
  if (seconds > 0 || minutes == 0) {
    if (minutes > 0) out << ' ';
    out << seconds << " s";
  }
  return out.str();
}

}  // namespace explorebot::text
