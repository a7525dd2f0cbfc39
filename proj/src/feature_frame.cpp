#include "cowlink/feature_frame.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <stdexcept>

#include "cowlink/error.hpp"
#include "cowlink/timestamp.hpp"
#include "util.hpp"

namespace cowlink {

bool FeatureFrame::has_column(std::string_view name) const {
    return std::find(names.begin(), names.end(), name) != names.end();
}

std::size_t FeatureFrame::column_index(std::string_view name) const {
    const auto it = std::find(names.begin(), names.end(), name);
    if (it == names.end())
        throw std::out_of_range("no such column: " + std::string(name));
    return static_cast<std::size_t>(it - names.begin());
}

const std::vector<double>& FeatureFrame::column(std::string_view name) const {
    return columns[column_index(name)];
}

std::vector<double>& FeatureFrame::column(std::string_view name) {
    return columns[column_index(name)];
}

void FeatureFrame::add_column(std::string name, std::vector<double> values) {
    if (values.size() != rows())
        throw std::invalid_argument("column length does not match frame rows: " + name);
    if (has_column(name)) throw std::invalid_argument("duplicate column: " + name);
    names.push_back(std::move(name));
    columns.push_back(std::move(values));
}

FeatureFrame align(const std::vector<TimeSeries>& series_list) {
    if (series_list.empty()) throw std::invalid_argument("align: no series given");

    // Intersection of all timestamp grids (each series is sorted and unique).
    std::vector<std::int64_t> common;
    common.reserve(series_list.front().samples.size());
    for (const Sample& s : series_list.front().samples) common.push_back(s.timestamp);
    for (std::size_t k = 1; k < series_list.size(); ++k) {
        std::vector<std::int64_t> grid;
        grid.reserve(series_list[k].samples.size());
        for (const Sample& s : series_list[k].samples) grid.push_back(s.timestamp);
        std::vector<std::int64_t> next;
        std::set_intersection(common.begin(), common.end(), grid.begin(), grid.end(),
                              std::back_inserter(next));
        common = std::move(next);
    }
    if (common.empty()) throw std::invalid_argument("align: series share no timestamps");

    FeatureFrame frame;
    frame.timestamps = common;
    for (const TimeSeries& series : series_list) {
        std::vector<double> column;
        column.reserve(common.size());
        std::size_t i = 0;
        for (const std::int64_t ts : common) {
            while (series.samples[i].timestamp < ts) ++i;
            column.push_back(series.samples[i].value);
        }
        frame.names.push_back(series.name);
        frame.columns.push_back(std::move(column));
    }
    return frame;
}

FeatureFrame add_lags(const FeatureFrame& frame, std::string_view column,
                      const std::vector<int>& lags) {
    if (lags.empty()) throw std::invalid_argument("add_lags: no lags given");
    for (const int k : lags)
        if (k <= 0) throw std::invalid_argument("add_lags: lags must be positive");
    const std::vector<double>& source = frame.column(column);
    const std::size_t max_lag = static_cast<std::size_t>(*std::max_element(lags.begin(), lags.end()));
    if (frame.rows() < max_lag)
        throw std::invalid_argument("add_lags: frame shorter than the largest lag");

    const std::size_t out_rows = frame.rows() - max_lag;
    FeatureFrame out;
    out.timestamps.assign(frame.timestamps.begin() + static_cast<std::ptrdiff_t>(max_lag),
                          frame.timestamps.end());
    for (std::size_t c = 0; c < frame.names.size(); ++c) {
        out.names.push_back(frame.names[c]);
        out.columns.emplace_back(frame.columns[c].begin() + static_cast<std::ptrdiff_t>(max_lag),
                                 frame.columns[c].end());
    }
    for (const int k : lags) {
        std::vector<double> lagged(out_rows);
        for (std::size_t i = 0; i < out_rows; ++i)
            lagged[i] = source[i + max_lag - static_cast<std::size_t>(k)];
        out.names.push_back(std::string(column) + "_lag" + std::to_string(k));
        out.columns.push_back(std::move(lagged));
    }
    return out;
}

double pearson(const std::vector<double>& x, const std::vector<double>& y, bool* constant) {
    if (x.size() != y.size() || x.empty())
        throw std::invalid_argument("pearson: inputs must be non-empty and equal length");
    if (constant) *constant = false;
    const std::size_t n = x.size();
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= static_cast<double>(n);
    my /= static_cast<double>(n);
    double sxx = 0.0, syy = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double dx = x[i] - mx;
        const double dy = y[i] - my;
        sxx += dx * dx;
        syy += dy * dy;
        sxy += dx * dy;
    }
    if (sxx == 0.0 || syy == 0.0) {
        if (constant) *constant = true;
        return 0.0;
    }
    return sxy / std::sqrt(sxx * syy);
}

CorrelationMatrix pearson_matrix(const FeatureFrame& frame,
                                 const std::vector<std::string>& columns) {
    if (frame.rows() < 2)
        throw std::invalid_argument("pearson_matrix: need at least two rows");
    CorrelationMatrix m;
    m.labels = columns;
    const std::size_t n = columns.size();
    std::vector<const std::vector<double>*> cols(n);
    std::vector<bool> is_constant(n, false);
    for (std::size_t i = 0; i < n; ++i) {
        cols[i] = &frame.column(columns[i]);
        bool flag = false;
        pearson(*cols[i], *cols[i], &flag);
        is_constant[i] = flag;
        if (flag) m.flagged.push_back(columns[i]);
    }
    m.values.assign(n, std::vector<double>(n, 0.0));
    for (std::size_t i = 0; i < n; ++i) {
        // a column tracks itself perfectly, constant or not
        m.values[i][i] = 1.0;
        for (std::size_t j = i + 1; j < n; ++j) {
            double r = 0.0;
            if (!is_constant[i] && !is_constant[j]) r = pearson(*cols[i], *cols[j]);
            m.values[i][j] = r;
            m.values[j][i] = r;
        }
    }
    return m;
}

std::size_t MinMaxScaler::index_of(std::string_view column) const {
    const auto it = std::find(columns_.begin(), columns_.end(), column);
    if (it == columns_.end())
        throw std::out_of_range("scaler has no state for column: " + std::string(column));
    return static_cast<std::size_t>(it - columns_.begin());
}

void MinMaxScaler::fit(const FeatureFrame& frame, const std::vector<std::string>& columns,
                       std::size_t row_limit) {
    const std::size_t rows = row_limit == 0 ? frame.rows() : std::min(row_limit, frame.rows());
    if (rows == 0) throw std::invalid_argument("scaler fit: no rows");
    columns_.clear();
    mins_.clear();
    maxs_.clear();
    for (const std::string& name : columns) {
        const std::vector<double>& col = frame.column(name);
        double lo = col[0], hi = col[0];
        for (std::size_t i = 1; i < rows; ++i) {
            lo = std::min(lo, col[i]);
            hi = std::max(hi, col[i]);
        }
        if (!(hi > lo))
            throw std::invalid_argument("scaler fit: constant column: " + name);
        columns_.push_back(name);
        mins_.push_back(lo);
        maxs_.push_back(hi);
    }
}

void MinMaxScaler::transform(FeatureFrame& frame) const {
    for (std::size_t c = 0; c < columns_.size(); ++c) {
        std::vector<double>& col = frame.column(columns_[c]);
        const double lo = mins_[c], width = maxs_[c] - mins_[c];
        for (double& v : col) v = (v - lo) / width;
    }
}

void MinMaxScaler::inverse(FeatureFrame& frame) const {
    for (std::size_t c = 0; c < columns_.size(); ++c) {
        std::vector<double>& col = frame.column(columns_[c]);
        const double lo = mins_[c], width = maxs_[c] - mins_[c];
        for (double& v : col) v = v * width + lo;
    }
}

double MinMaxScaler::transform_value(std::string_view column, double value) const {
    const std::size_t c = index_of(column);
    return (value - mins_[c]) / (maxs_[c] - mins_[c]);
}

double MinMaxScaler::inverse_value(std::string_view column, double value) const {
    const std::size_t c = index_of(column);
    return value * (maxs_[c] - mins_[c]) + mins_[c];
}

double MinMaxScaler::min_of(std::string_view column) const { return mins_[index_of(column)]; }
double MinMaxScaler::max_of(std::string_view column) const { return maxs_[index_of(column)]; }

void MinMaxScaler::set_state(std::vector<std::string> columns, std::vector<double> mins,
                             std::vector<double> maxs) {
    if (columns.size() != mins.size() || columns.size() != maxs.size())
        throw std::invalid_argument("scaler state arrays must have equal length");
    columns_ = std::move(columns);
    mins_ = std::move(mins);
    maxs_ = std::move(maxs);
}

void write_frame_csv(const FeatureFrame& frame, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw io_error(path + ": cannot open for writing");
    out << "timestamp";
    for (const std::string& name : frame.names) out << ',' << name;
    out << '\n';
    for (std::size_t i = 0; i < frame.rows(); ++i) {
        out << format_timestamp_rfc3339(frame.timestamps[i]);
        for (const std::vector<double>& col : frame.columns)
            out << ',' << format_double(col[i]);
        out << '\n';
    }
    if (!out) throw io_error(path + ": write failed");
}

FeatureFrame read_frame_csv(const std::string& path) {
    const std::string text = read_file_text(path);
    FeatureFrame frame;
    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos < text.size()) {
        std::size_t eol = text.find('\n', pos);
        if (eol == std::string::npos) eol = text.size();
        std::string_view line(text.data() + pos, eol - pos);
        pos = eol + 1;
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        if (line.empty()) continue;

        std::vector<std::string_view> fields;
        std::size_t start = 0;
        while (true) {
            const std::size_t comma = line.find(',', start);
            if (comma == std::string_view::npos) {
                fields.push_back(line.substr(start));
                break;
            }
            fields.push_back(line.substr(start, comma - start));
            start = comma + 1;
        }

        if (line_no == 1) {
            if (fields.empty() || fields[0] != "timestamp")
                throw parse_error(path, line_no, "header must start with `timestamp`");
            for (std::size_t i = 1; i < fields.size(); ++i) {
                frame.names.emplace_back(fields[i]);
                frame.columns.emplace_back();
            }
            continue;
        }
        if (fields.size() != frame.names.size() + 1)
            throw parse_error(path, line_no, "wrong field count");
        const auto ts = parse_timestamp(fields[0]);
        if (!ts) throw parse_error(path, line_no, "malformed timestamp");
        frame.timestamps.push_back(*ts);
        for (std::size_t i = 1; i < fields.size(); ++i) {
            double value = 0.0;
            const auto [ptr, ec] =
                std::from_chars(fields[i].data(), fields[i].data() + fields[i].size(), value);
            if (ec != std::errc{} || ptr != fields[i].data() + fields[i].size())
                throw parse_error(path, line_no, "malformed value");
            frame.columns[i - 1].push_back(value);
        }
    }
    if (frame.names.empty()) throw parse_error(path, 1, "missing header");
    return frame;
}

}  // namespace cowlink
