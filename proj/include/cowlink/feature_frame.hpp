#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "cowlink/time_series.hpp"

namespace cowlink {

// Column-oriented table over a shared timestamp grid. Columns are all the
// same length with no gaps; construction is via align().
struct FeatureFrame {
    std::vector<std::int64_t> timestamps;
    std::vector<std::string> names;
    std::vector<std::vector<double>> columns;  // parallel to names

    std::size_t rows() const { return timestamps.size(); }
    bool has_column(std::string_view name) const;
    // Throws std::out_of_range when the column does not exist.
    std::size_t column_index(std::string_view name) const;
    const std::vector<double>& column(std::string_view name) const;
    std::vector<double>& column(std::string_view name);
    void add_column(std::string name, std::vector<double> values);
};

// Inner join on timestamps; rows lacking any series are dropped. Throws
// std::invalid_argument when the list is empty or the join has no rows.
FeatureFrame align(const std::vector<TimeSeries>& series_list);

// Adds `<column>_lag{k}` columns where row i holds the value at row i-k,
// then drops the first max(lags) rows. Throws when the frame has fewer rows
// than the largest lag or the column is missing.
FeatureFrame add_lags(const FeatureFrame& frame, std::string_view column,
                      const std::vector<int>& lags);

struct CorrelationMatrix {
    std::vector<std::string> labels;
    std::vector<std::vector<double>> values;
    // Constant columns whose coefficients were reported as 0.
    std::vector<std::string> flagged;
};

// Pearson coefficient; sets *constant to true (and returns 0) when either
// input has zero variance.
double pearson(const std::vector<double>& x, const std::vector<double>& y,
               bool* constant = nullptr);

// Requires at least two rows. Constant columns produce flagged zeros rather
// than errors.
CorrelationMatrix pearson_matrix(const FeatureFrame& frame,
                                 const std::vector<std::string>& columns);

// Per-column linear map onto [0, 1] over the fitted data; values outside the
// fitted range map outside [0, 1] (no clamping).
class MinMaxScaler {
public:
    void fit(const FeatureFrame& frame, const std::vector<std::string>& columns,
             std::size_t row_limit = 0);  // 0 = all rows
    void transform(FeatureFrame& frame) const;
    void inverse(FeatureFrame& frame) const;
    double transform_value(std::string_view column, double value) const;
    double inverse_value(std::string_view column, double value) const;

    bool fitted() const { return !columns_.empty(); }
    const std::vector<std::string>& columns() const { return columns_; }
    double min_of(std::string_view column) const;
    double max_of(std::string_view column) const;
    void set_state(std::vector<std::string> columns, std::vector<double> mins,
                   std::vector<double> maxs);

private:
    std::size_t index_of(std::string_view column) const;

    std::vector<std::string> columns_;
    std::vector<double> mins_;
    std::vector<double> maxs_;
};

// Frame CSV: header `timestamp,<name>,...`, RFC 3339 timestamps, shortest
// round-trip numbers.
void write_frame_csv(const FeatureFrame& frame, const std::string& path);
FeatureFrame read_frame_csv(const std::string& path);

}  // namespace cowlink
