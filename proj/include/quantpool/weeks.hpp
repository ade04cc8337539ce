#pragma once

#include <chrono>
#include <charconv>
#include <stdexcept>
#include <string>
#include <string_view>

namespace quantpool {

// Weeks are numbered from Week 0, the week ending Saturday 2019-12-21. A
// date belongs to the week of the Saturday on or after it, so Saturdays map
// to their own week and Sunday through Friday map to the week they close out.

namespace detail {
// Days since 2019-12-21.
inline constexpr std::chrono::sys_days kWeekZeroSaturday =
    std::chrono::sys_days{std::chrono::year{2019} / std::chrono::month{12} /
                          std::chrono::day{21}};
}  // namespace detail

struct CalendarDate {
  int year;
  unsigned month;
  unsigned day;
};

inline CalendarDate parse_iso_date(std::string_view text) {
  auto parse_int = [&](std::string_view part, int& out) {
    auto [ptr, ec] =
        std::from_chars(part.data(), part.data() + part.size(), out);
    return ec == std::errc() && ptr == part.data() + part.size();
  };
  int y = 0, m = 0, d = 0;
  bool ok = text.size() == 10 && text[4] == '-' && text[7] == '-' &&
            parse_int(text.substr(0, 4), y) && parse_int(text.substr(5, 2), m) &&
            parse_int(text.substr(8, 2), d);
  if (ok) {
    const std::chrono::year_month_day ymd{
        std::chrono::year{y}, std::chrono::month{static_cast<unsigned>(m)},
        std::chrono::day{static_cast<unsigned>(d)}};
    ok = ymd.ok();
  }
  if (!ok) {
    throw std::invalid_argument("expected ISO date (YYYY-MM-DD), got '" +
                                std::string(text) + "'");
  }
  return CalendarDate{y, static_cast<unsigned>(m), static_cast<unsigned>(d)};
}

inline int week_of_date(const CalendarDate& date) {
  const std::chrono::sys_days day{
      std::chrono::year{date.year} / std::chrono::month{date.month} /
      std::chrono::day{date.day}};
  const auto days = (day - detail::kWeekZeroSaturday).count();
  // Round up to the Saturday on or after the date (floor division on d+6).
  const auto shifted = days + 6;
  return static_cast<int>(shifted >= 0 ? shifted / 7 : (shifted - 6) / 7);
}

inline int week_of_date(std::string_view iso_date) {
  return week_of_date(parse_iso_date(iso_date));
}

// The Saturday that ends the given week, as an ISO date string.
inline std::string saturday_of_week(int week) {
  const std::chrono::sys_days day =
      detail::kWeekZeroSaturday + std::chrono::days{7 * week};
  const std::chrono::year_month_day ymd{day};
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%04d-%02u-%02u",
                static_cast<int>(ymd.year()),
                static_cast<unsigned>(ymd.month()),
                static_cast<unsigned>(ymd.day()));
  return std::string(buf);
}

}  // namespace quantpool
