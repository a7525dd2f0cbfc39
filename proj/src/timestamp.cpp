#include "cowlink/timestamp.hpp"

#include <cctype>
#include <charconv>
#include <cstdio>

namespace cowlink {
namespace {

// Civil-date conversions via the standard era decomposition (valid for all
// int64 days around the epoch).
std::int64_t days_from_civil(std::int64_t y, unsigned m, unsigned d) {
    y -= m <= 2;
    const std::int64_t era = (y >= 0 ? y : y - 399) / 400;
    const unsigned yoe = static_cast<unsigned>(y - era * 400);
    const unsigned doy = (153 * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;
    const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
    return era * 146097 + static_cast<std::int64_t>(doe) - 719468;
}

void civil_from_days(std::int64_t z, std::int64_t& y, unsigned& m, unsigned& d) {
    z += 719468;
    const std::int64_t era = (z >= 0 ? z : z - 146096) / 146097;
    const unsigned doe = static_cast<unsigned>(z - era * 146097);
    const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
    y = static_cast<std::int64_t>(yoe) + era * 400;
    const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
    const unsigned mp = (5 * doy + 2) / 153;
    d = doy - (153 * mp + 2) / 5 + 1;
    m = mp + (mp < 10 ? 3 : -9);
    y += m <= 2;
}

bool days_in_month_ok(std::int64_t y, unsigned m, unsigned d) {
    static constexpr unsigned lengths[] = {31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31};
    if (m < 1 || m > 12 || d < 1) return false;
    unsigned len = lengths[m - 1];
    const bool leap = (y % 4 == 0 && y % 100 != 0) || y % 400 == 0;
    if (m == 2 && leap) len = 29;
    return d <= len;
}

bool read_uint(std::string_view text, std::size_t& pos, int digits, int& out) {
    if (pos + digits > text.size()) return false;
    int value = 0;
    for (int i = 0; i < digits; ++i) {
        const char c = text[pos + i];
        if (c < '0' || c > '9') return false;
        value = value * 10 + (c - '0');
    }
    pos += digits;
    out = value;
    return true;
}

}  // namespace

std::optional<std::int64_t> parse_timestamp(std::string_view text) {
    std::size_t pos = 0;
    int year, month, day, hour, minute, second;
    if (!read_uint(text, pos, 4, year)) return std::nullopt;
    if (pos >= text.size() || text[pos++] != '-') return std::nullopt;
    if (!read_uint(text, pos, 2, month)) return std::nullopt;
    if (pos >= text.size() || text[pos++] != '-') return std::nullopt;
    if (!read_uint(text, pos, 2, day)) return std::nullopt;
    if (pos >= text.size() || (text[pos] != ' ' && text[pos] != 'T')) return std::nullopt;
    ++pos;
    if (!read_uint(text, pos, 2, hour)) return std::nullopt;
    if (pos >= text.size() || text[pos++] != ':') return std::nullopt;
    if (!read_uint(text, pos, 2, minute)) return std::nullopt;
    if (pos >= text.size() || text[pos++] != ':') return std::nullopt;
    if (!read_uint(text, pos, 2, second)) return std::nullopt;

    if (!days_in_month_ok(year, static_cast<unsigned>(month), static_cast<unsigned>(day)))
        return std::nullopt;
    if (hour > 23 || minute > 59 || second > 60) return std::nullopt;

    std::int64_t frac = 0;
    if (pos < text.size() && text[pos] == '.') {
        ++pos;
        int digits = 0;
        while (pos < text.size() && std::isdigit(static_cast<unsigned char>(text[pos]))) {
            if (digits < 6) frac = frac * 10 + (text[pos] - '0');
            ++digits;
            ++pos;
        }
        if (digits == 0) return std::nullopt;
        for (; digits < 6; ++digits) frac *= 10;
    }

    std::int64_t offset_micros = 0;
    if (pos >= text.size()) return std::nullopt;
    if (text[pos] == 'Z') {
        ++pos;
    } else if (text[pos] == '+' || text[pos] == '-') {
        const int sign = text[pos] == '+' ? 1 : -1;
        ++pos;
        int off_h, off_m;
        if (!read_uint(text, pos, 2, off_h)) return std::nullopt;
        if (pos >= text.size() || text[pos++] != ':') return std::nullopt;
        if (!read_uint(text, pos, 2, off_m)) return std::nullopt;
        if (off_h > 23 || off_m > 59) return std::nullopt;
        offset_micros = sign * (off_h * micros_per_hour + off_m * micros_per_minute);
    } else {
        return std::nullopt;
    }
    if (pos != text.size()) return std::nullopt;

    const std::int64_t days = days_from_civil(year, static_cast<unsigned>(month),
                                              static_cast<unsigned>(day));
    const std::int64_t local = days * 86400 * micros_per_second +
                               (hour * 3600 + minute * 60 + second) * micros_per_second + frac;
    return local - offset_micros;
}

namespace {

struct SplitTime {
    std::int64_t year;
    unsigned month, day, hour, minute, second;
    std::int64_t frac;
};

SplitTime split(std::int64_t micros) {
    std::int64_t days = micros / (86400 * micros_per_second);
    std::int64_t rem = micros % (86400 * micros_per_second);
    if (rem < 0) {
        rem += 86400 * micros_per_second;
        --days;
    }
    SplitTime out{};
    civil_from_days(days, out.year, out.month, out.day);
    out.frac = rem % micros_per_second;
    const std::int64_t secs = rem / micros_per_second;
    out.hour = static_cast<unsigned>(secs / 3600);
    out.minute = static_cast<unsigned>((secs / 60) % 60);
    out.second = static_cast<unsigned>(secs % 60);
    return out;
}

}  // namespace

std::string format_timestamp_rfc3339(std::int64_t micros) {
    const SplitTime t = split(micros);
    char buf[40];
    if (t.frac == 0) {
        std::snprintf(buf, sizeof buf, "%04lld-%02u-%02uT%02u:%02u:%02uZ",
                      static_cast<long long>(t.year), t.month, t.day, t.hour, t.minute, t.second);
    } else {
        std::snprintf(buf, sizeof buf, "%04lld-%02u-%02uT%02u:%02u:%02u.%06lldZ",
                      static_cast<long long>(t.year), t.month, t.day, t.hour, t.minute, t.second,
                      static_cast<long long>(t.frac));
    }
    return buf;
}

std::string format_timestamp_offset(std::int64_t micros) {
    const SplitTime t = split(micros);
    char buf[48];
    std::snprintf(buf, sizeof buf, "%04lld-%02u-%02u %02u:%02u:%02u.%06lld+00:00",
                  static_cast<long long>(t.year), t.month, t.day, t.hour, t.minute, t.second,
                  static_cast<long long>(t.frac));
    return buf;
}

std::optional<std::int64_t> parse_duration_micros(std::string_view text) {
    if (text.empty()) return std::nullopt;
    std::int64_t scale = micros_per_second;
    const char last = text.back();
    std::string_view digits = text;
    if (last == 's' || last == 'm' || last == 'h') {
        digits.remove_suffix(1);
        if (last == 'm') scale = micros_per_minute;
        if (last == 'h') scale = micros_per_hour;
    }
    if (digits.empty()) return std::nullopt;
    std::int64_t value = 0;
    const auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), value);
    if (ec != std::errc{} || ptr != digits.data() + digits.size() || value <= 0)
        return std::nullopt;
    return value * scale;
}

}  // namespace cowlink
