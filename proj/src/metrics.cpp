#include "cowlink/metrics.hpp"

#include <cmath>
#include <stdexcept>

namespace cowlink {

ErrorReport compute_metrics(const std::vector<double>& measured_raw,
                            const std::vector<double>& predicted_raw,
                            const std::vector<double>& measured_scaled,
                            const std::vector<double>& predicted_scaled) {
    const std::size_t n = measured_raw.size();
    if (n == 0) throw std::invalid_argument("compute_metrics: no samples");
    if (predicted_raw.size() != n || measured_scaled.size() != n || predicted_scaled.size() != n)
        throw std::invalid_argument("compute_metrics: length mismatch");

    ErrorReport report;
    report.n = n;
    double sum_err = 0.0, sum_abs = 0.0, sum_rel = 0.0, sum_sq = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double err = predicted_raw[i] - measured_raw[i];
        sum_err += err;
        sum_abs += std::abs(err);
        if (measured_raw[i] == 0.0)
            report.mre_defined = false;
        else
            sum_rel += err / measured_raw[i];
        const double scaled_err = predicted_scaled[i] - measured_scaled[i];
        sum_sq += scaled_err * scaled_err;
    }
    report.me = sum_err / static_cast<double>(n);
    report.mae = sum_abs / static_cast<double>(n);
    report.mre = report.mre_defined ? sum_rel / static_cast<double>(n) : 0.0;
    report.mse = sum_sq / static_cast<double>(n);
    return report;
}

}  // namespace cowlink
