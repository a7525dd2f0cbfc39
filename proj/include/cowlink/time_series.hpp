#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace cowlink {

struct Sample {
    std::int64_t timestamp = 0;  // microseconds since the Unix epoch, UTC
    double value = 0.0;
};

// One monitored parameter. Timestamps are strictly increasing once a series
// has been through ingest or clean.
struct TimeSeries {
    std::string name;
    std::vector<Sample> samples;
};

struct CleaningRules {
    bool drop_nonfinite = true;
    // Drop values outside [0, 1]; used for visibility.
    bool enforce_unit_range = false;
};

// Rules appropriate for a series name ("visibility" gets the unit-range
// filter, everything else only the finiteness filter).
CleaningRules cleaning_rules_for(std::string_view name);

struct CleanReport {
    std::size_t dropped_nonfinite = 0;
    std::size_t dropped_out_of_range = 0;
    std::size_t total_dropped() const { return dropped_nonfinite + dropped_out_of_range; }
};

// Parses `<timestamp>,<value>` lines (no header). The result is sorted by
// timestamp; duplicate timestamps keep the last value in file order.
// Throws parse_error with the offending line number, io_error on missing or
// empty files.
TimeSeries ingest_csv(const std::string& path, std::string name);

// Same parser over in-memory text; `path` only labels error messages.
TimeSeries ingest_csv_text(std::string_view text, const std::string& path, std::string name);

// Never fails; dropped-sample counts are returned through `report`.
TimeSeries clean(const TimeSeries& series, const CleaningRules& rules,
                 CleanReport* report = nullptr);

// Tumbling windows aligned to the Unix epoch; each output sample is the
// arithmetic mean of the inputs in its window, stamped at the window start.
// Empty windows are omitted. The window must lie in [1 s, 24 h].
TimeSeries temporal_average(const TimeSeries& series, std::int64_t window_micros);

// Writes the ingest format: offset-style timestamp, comma, shortest
// round-trip value.
void write_series_csv(const TimeSeries& series, const std::string& path);

}  // namespace cowlink
