#pragma once

#include <string>
#include <string_view>

namespace oerrec {

/// Shortest decimal text that parses back to exactly `value`.
std::string format_double(double value);

/// Parses the whole of `text` as a double; throws InvalidArgument otherwise.
double parse_double(std::string_view text);

}  // namespace oerrec
