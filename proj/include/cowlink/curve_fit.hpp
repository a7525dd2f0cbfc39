#pragma once

#include <string>
#include <vector>

#include "cowlink/cow_model.hpp"
#include "cowlink/feature_frame.hpp"
#include "cowlink/time_series.hpp"

namespace cowlink {

enum class FitParam { alpha, eta, t_b };

// "alpha" | "eta" | "t_B"
FitParam fit_param_from_name(std::string_view name);
std::string_view fit_param_name(FitParam param);

// Default search box per parameter: the physically plausible test range
// (attenuation 0.15..0.25 dB/km, detector efficiency 0.02..0.1, receiver
// transmittance half to double its nominal value capped at 1).
std::pair<double, double> default_bounds(FitParam param, const CowParameters& base);

struct FitSpec {
    std::vector<FitParam> free_params;
    std::vector<std::pair<double, double>> bounds;  // empty = defaults
    std::vector<double> initial;                    // empty = base values
    int max_iter = 2000;
    double tol = 1e-10;
    // Use the frame's measured qber column in the information terms; when
    // false the model's visibility-derived qber is used instead.
    bool use_measured_qber = true;
};

struct FitResult {
    std::vector<FitParam> free_params;
    std::vector<double> fitted;
    double residual_rms = 0.0;  // bits/s over the rows entering the objective
    int iterations = 0;
    bool converged = false;
    std::size_t samples_used = 0;  // rows with nonzero measured rate
    std::vector<double> calculated_skr;  // model rate per frame row at the fit
};

// Least-squares fit of the chosen parameters against the frame's skr column,
// given its qber and visibility columns. Rows with measured skr == 0 are
// excluded (link outages carry no model information). Derivative-free
// bound-projected Nelder-Mead; non-convergence is reported, not thrown.
FitResult fit(const FeatureFrame& frame, const CowParameters& base, const FitSpec& spec);

// Model-minus-measured rate per frame row at fixed parameters.
TimeSeries residual_series(const FeatureFrame& frame, const CowParameters& params,
                           bool use_measured_qber = true);

// Applies fitted values onto a parameter set.
CowParameters apply_fit(const CowParameters& base, const std::vector<FitParam>& params,
                        const std::vector<double>& values);

}  // namespace cowlink
