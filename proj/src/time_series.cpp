#include "cowlink/time_series.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "cowlink/error.hpp"
#include "cowlink/timestamp.hpp"
#include "util.hpp"

namespace cowlink {

CleaningRules cleaning_rules_for(std::string_view name) {
    CleaningRules rules;
    rules.enforce_unit_range = name == "visibility";
    return rules;
}

TimeSeries ingest_csv_text(std::string_view text, const std::string& path, std::string name) {
    TimeSeries series;
    series.name = std::move(name);

    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos < text.size()) {
        std::size_t eol = text.find('\n', pos);
        if (eol == std::string_view::npos) eol = text.size();
        std::string_view line = text.substr(pos, eol - pos);
        pos = eol + 1;
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        if (line.empty()) continue;

        const std::size_t comma = line.rfind(',');
        if (comma == std::string_view::npos)
            throw parse_error(path, line_no, "expected `<timestamp>,<value>`");
        const auto ts = parse_timestamp(line.substr(0, comma));
        if (!ts) throw parse_error(path, line_no, "malformed timestamp");
        const std::string_view value_text = line.substr(comma + 1);
        double value = 0.0;
        const auto [ptr, ec] =
            std::from_chars(value_text.data(), value_text.data() + value_text.size(), value);
        if (ec != std::errc{} || ptr != value_text.data() + value_text.size())
            throw parse_error(path, line_no, "malformed value");
        series.samples.push_back({*ts, value});
    }
    if (series.samples.empty()) throw io_error(path + ": no samples");

    std::stable_sort(series.samples.begin(), series.samples.end(),
                     [](const Sample& a, const Sample& b) { return a.timestamp < b.timestamp; });
    // duplicate timestamps keep the last value in file order
    std::vector<Sample> unique;
    unique.reserve(series.samples.size());
    for (const Sample& s : series.samples) {
        if (!unique.empty() && unique.back().timestamp == s.timestamp)
            unique.back().value = s.value;
        else
            unique.push_back(s);
    }
    series.samples = std::move(unique);
    return series;
}

TimeSeries ingest_csv(const std::string& path, std::string name) {
    return ingest_csv_text(read_file_text(path), path, std::move(name));
}

TimeSeries clean(const TimeSeries& series, const CleaningRules& rules, CleanReport* report) {
    TimeSeries out;
    out.name = series.name;
    out.samples.reserve(series.samples.size());
    CleanReport counts;
    for (const Sample& s : series.samples) {
        if (rules.drop_nonfinite && !std::isfinite(s.value)) {
            ++counts.dropped_nonfinite;
            continue;
        }
        if (rules.enforce_unit_range && (s.value < 0.0 || s.value > 1.0)) {
            ++counts.dropped_out_of_range;
            continue;
        }
        out.samples.push_back(s);
    }
    if (report) *report = counts;
    return out;
}

TimeSeries temporal_average(const TimeSeries& series, std::int64_t window_micros) {
    if (window_micros < micros_per_second || window_micros > 24 * micros_per_hour)
        throw std::invalid_argument("temporal_average: window must be within [1 s, 24 h]");

    TimeSeries out;
    out.name = series.name;
    std::size_t i = 0;
    const std::size_t n = series.samples.size();
    while (i < n) {
        // floor division keeps pre-epoch timestamps on the same grid
        std::int64_t w = series.samples[i].timestamp / window_micros;
        if (series.samples[i].timestamp < 0 && series.samples[i].timestamp % window_micros != 0)
            --w;
        const std::int64_t window_start = w * window_micros;
        const std::int64_t window_end = window_start + window_micros;
        double sum = 0.0;
        std::size_t count = 0;
        while (i < n && series.samples[i].timestamp < window_end) {
            sum += series.samples[i].value;
            ++count;
            ++i;
        }
        out.samples.push_back({window_start, sum / static_cast<double>(count)});
    }
    return out;
}

void write_series_csv(const TimeSeries& series, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw io_error(path + ": cannot open for writing");
    for (const Sample& s : series.samples)
        out << format_timestamp_offset(s.timestamp) << ',' << format_double(s.value) << '\n';
    if (!out) throw io_error(path + ": write failed");
}

}  // namespace cowlink
