#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace cowlink {

inline constexpr std::int64_t micros_per_second = 1000000;
inline constexpr std::int64_t micros_per_minute = 60 * micros_per_second;
inline constexpr std::int64_t micros_per_hour = 60 * micros_per_minute;

// Accepts "YYYY-MM-DD HH:MM:SS[.ffffff]+HH:MM" (the monitoring export
// format, normally +00:00) and RFC 3339 "YYYY-MM-DDTHH:MM:SS[.ffffff]Z".
// Returns microseconds since the Unix epoch in UTC, or nullopt if the text
// is malformed.
std::optional<std::int64_t> parse_timestamp(std::string_view text);

// RFC 3339 with 'T' separator and 'Z'; fractional seconds only when nonzero.
std::string format_timestamp_rfc3339(std::int64_t micros);

// The raw-export flavor: space separator, microseconds always printed,
// explicit +00:00 offset.
std::string format_timestamp_offset(std::int64_t micros);

// Duration strings for CLI flags: "600" (seconds), "10s", "10m", "2h".
std::optional<std::int64_t> parse_duration_micros(std::string_view text);

}  // namespace cowlink
