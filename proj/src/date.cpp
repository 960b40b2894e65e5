#include "oerrec/date.hpp"

#include <charconv>
#include <cstdio>

#include "oerrec/error.hpp"

namespace oerrec {

namespace {

int parse_int(std::string_view text, std::string_view whole) {
  int value = 0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc{} || ptr != text.data() + text.size()) {
    throw InvalidArgument("malformed date: '" + std::string(whole) + "'");
  }
  return value;
}

}  // namespace

Date parse_date(std::string_view text) {
  std::string_view s = text;
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  if (s.size() > 10 && (s[10] == 'T' || s[10] == ' ')) s = s.substr(0, 10);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  if (s.size() != 10 || s[4] != '-' || s[7] != '-') {
    throw InvalidArgument("malformed date: '" + std::string(text) + "'");
  }
  const int y = parse_int(s.substr(0, 4), text);
  const int m = parse_int(s.substr(5, 2), text);
  const int d = parse_int(s.substr(8, 2), text);
  Date date{std::chrono::year{y}, std::chrono::month{static_cast<unsigned>(m)},
            std::chrono::day{static_cast<unsigned>(d)}};
  if (!date.ok()) throw InvalidArgument("invalid date: '" + std::string(text) + "'");
  return date;
}

std::string format_date(Date d) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(d.year()),
                static_cast<unsigned>(d.month()), static_cast<unsigned>(d.day()));
  return buf;
}

Date add_months(Date d, int months) {
  const std::chrono::year_month ym =
      std::chrono::year_month{d.year(), d.month()} + std::chrono::months{months};
  const std::chrono::day last = std::chrono::year_month_day_last{
      ym.year(), std::chrono::month_day_last{ym.month()}}.day();
  return Date{ym.year(), ym.month(), d.day() > last ? last : d.day()};
}

Timestamp to_timestamp(Date d) {
  return std::chrono::duration_cast<std::chrono::seconds>(
             std::chrono::sys_days{d}.time_since_epoch())
      .count();
}

Date to_date(Timestamp ts) {
  return Date{std::chrono::floor<std::chrono::days>(
      std::chrono::sys_seconds{std::chrono::seconds{ts}})};
}

}  // namespace oerrec
