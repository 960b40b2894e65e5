#pragma once

#include <chrono>
#include <cstdint>
#include <string>
#include <string_view>

namespace oerrec {

using Date = std::chrono::year_month_day;

/// Seconds since the Unix epoch.
using Timestamp = std::int64_t;

/// Parses "YYYY-MM-DD" (a trailing time part such as "T10:00:00" is ignored).
/// Throws InvalidArgument on malformed or impossible dates.
Date parse_date(std::string_view text);
std::string format_date(Date d);

/// Calendar-month arithmetic; the day is clamped to the end of the target month.
Date add_months(Date d, int months);

Timestamp to_timestamp(Date d);
Date to_date(Timestamp ts);

}  // namespace oerrec
