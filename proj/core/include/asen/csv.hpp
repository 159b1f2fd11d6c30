#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace asen::csv {

/// Splits one CSV record on commas. Double-quoted fields may contain commas
/// and "" escapes. A trailing '\r' is ignored.
std::vector<std::string> split_record(std::string_view line);

/// Quotes a field when it contains a comma, quote or newline.
std::string escape(std::string_view field);

/// Locale-independent full-string parse; empty on failure or trailing garbage.
std::optional<double> parse_double(std::string_view text);

/// Shortest representation that round-trips to the same double.
std::string format_double(double value);

} // namespace asen::csv
