#pragma once

#include <cstddef>
#include <vector>

namespace cowlink {

// Prediction-error summary. ME/MAE/MRE are in raw units (bits/s for key
// rates); MSE is computed on the scaled series.
struct ErrorReport {
    double me = 0.0;
    double mae = 0.0;
    double mre = 0.0;   // signed; meaningless when mre_defined is false
    double mse = 0.0;
    std::size_t n = 0;
    // false when any measured raw value is zero (relative error undefined);
    // the other metrics are still filled in.
    bool mre_defined = true;
};

ErrorReport compute_metrics(const std::vector<double>& measured_raw,
                            const std::vector<double>& predicted_raw,
                            const std::vector<double>& measured_scaled,
                            const std::vector<double>& predicted_scaled);

}  // namespace cowlink
