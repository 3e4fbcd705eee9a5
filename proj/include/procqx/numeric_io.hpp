#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace procqx {

/// Shortest decimal form that parses back to the identical double.
std::string format_double(double v);

/// Fixed-decimal form, e.g. format_fixed(0.5, 3) == "0.500".
std::string format_fixed(double v, int decimals);

/// Strict full-string parse; throws ValidationError naming `what` on failure.
double parse_double(std::string_view text, const std::string& what);
std::int64_t parse_int(std::string_view text, const std::string& what);

/// ISO-8601 UTC timestamp ("2021-03-01T08:00:00Z", optional fractional
/// seconds) to seconds since the Unix epoch.
double parse_iso8601_utc(std::string_view text, const std::string& what);

} // namespace procqx
