#include "cowlink/curve_fit.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace cowlink {

FitParam fit_param_from_name(std::string_view name) {
    if (name == "alpha") return FitParam::alpha;
    if (name == "eta") return FitParam::eta;
    if (name == "t_B") return FitParam::t_b;
    throw std::invalid_argument("unknown fit parameter: " + std::string(name));
}

std::string_view fit_param_name(FitParam param) {
    switch (param) {
        case FitParam::alpha: return "alpha";
        case FitParam::eta: return "eta";
        case FitParam::t_b: return "t_B";
    }
    throw std::logic_error("unreachable");
}

std::pair<double, double> default_bounds(FitParam param, const CowParameters& base) {
    switch (param) {
        case FitParam::alpha: return {0.15, 0.25};
        case FitParam::eta: return {0.02, 0.10};
        case FitParam::t_b: {
            const double nominal = base.bob_transmittance();
            return {0.5 * nominal, std::min(2.0 * nominal, 1.0)};
        }
    }
    throw std::logic_error("unreachable");
}

CowParameters apply_fit(const CowParameters& base, const std::vector<FitParam>& params,
                        const std::vector<double>& values) {
    if (params.size() != values.size())
        throw std::invalid_argument("apply_fit: size mismatch");
    CowParameters p = base;
    for (std::size_t i = 0; i < params.size(); ++i) {
        switch (params[i]) {
            case FitParam::alpha: p.attenuation_db_per_km = values[i]; break;
            case FitParam::eta: p.detector_efficiency = values[i]; break;
            case FitParam::t_b: p.bob_transmittance_exp = std::log10(values[i]); break;
        }
    }
    return p;
}

namespace {

double base_value(const CowParameters& base, FitParam param) {
    switch (param) {
        case FitParam::alpha: return base.attenuation_db_per_km;
        case FitParam::eta: return base.detector_efficiency;
        case FitParam::t_b: return base.bob_transmittance();
    }
    throw std::logic_error("unreachable");
}

struct Objective {
    const FeatureFrame& frame;
    const CowParameters& base;
    const FitSpec& spec;
    const std::vector<double>& skr;
    const std::vector<double>& qber;
    const std::vector<double>& visibility;

    double operator()(const std::vector<double>& theta) const {
        const CowParameters p = apply_fit(base, spec.free_params, theta);
        double sum = 0.0;
        for (std::size_t i = 0; i < skr.size(); ++i) {
            if (skr[i] == 0.0) continue;  // outage rows carry no information
            ChannelObservables obs;
            obs.visibility = visibility[i];
            obs.measured_qber = qber[i];
            obs.use_model_qber = !spec.use_measured_qber;
            double model = 0.0;
            try {
                model = secret_key_rate(p, obs).skr;
            } catch (const std::domain_error&) {
                return std::numeric_limits<double>::infinity();
            }
            const double r = model - skr[i];
            sum += r * r;
        }
        return sum;
    }
};

}  // namespace

FitResult fit(const FeatureFrame& frame, const CowParameters& base, const FitSpec& spec) {
    if (frame.rows() == 0) throw std::invalid_argument("fit: empty frame");
    if (spec.free_params.empty()) throw std::invalid_argument("fit: no free parameters");
    for (std::size_t i = 0; i < spec.free_params.size(); ++i)
        for (std::size_t j = i + 1; j < spec.free_params.size(); ++j)
            if (spec.free_params[i] == spec.free_params[j])
                throw std::invalid_argument("fit: duplicate free parameter");

    const std::size_t dim = spec.free_params.size();
    std::vector<std::pair<double, double>> bounds = spec.bounds;
    if (bounds.empty())
        for (const FitParam p : spec.free_params) bounds.push_back(default_bounds(p, base));
    if (bounds.size() != dim) throw std::invalid_argument("fit: bounds size mismatch");
    for (const auto& [lo, hi] : bounds)
        if (!(lo < hi)) throw std::invalid_argument("fit: bound lower limit must be below upper");

    std::vector<double> start = spec.initial;
    if (start.empty())
        for (const FitParam p : spec.free_params) start.push_back(base_value(base, p));
    if (start.size() != dim) throw std::invalid_argument("fit: initial size mismatch");
    for (std::size_t d = 0; d < dim; ++d)
        if (start[d] < bounds[d].first || start[d] > bounds[d].second)
            throw std::invalid_argument("fit: initial value outside bounds");

    const std::vector<double>& skr = frame.column("skr");
    const std::vector<double>& qber = frame.column("qber");
    const std::vector<double>& visibility = frame.column("visibility");
    const std::size_t used = static_cast<std::size_t>(
        std::count_if(skr.begin(), skr.end(), [](double v) { return v != 0.0; }));
    if (used == 0) throw std::invalid_argument("fit: every measured rate is zero");

    const Objective objective{frame, base, spec, skr, qber, visibility};
    const auto project = [&](std::vector<double>& x) {
        for (std::size_t d = 0; d < dim; ++d) x[d] = std::clamp(x[d], bounds[d].first, bounds[d].second);
    };

    // initial simplex: the start point plus one step along each axis
    std::vector<std::vector<double>> vertex(dim + 1, start);
    for (std::size_t d = 0; d < dim; ++d) {
        const double step = 0.05 * (bounds[d].second - bounds[d].first);
        vertex[d + 1][d] = start[d] + step <= bounds[d].second ? start[d] + step : start[d] - step;
    }
    std::vector<double> value(dim + 1);
    for (std::size_t v = 0; v <= dim; ++v) value[v] = objective(vertex[v]);

    const auto simplex_size = [&]() {
        double size = 0.0;
        for (std::size_t v = 1; v <= dim; ++v)
            for (std::size_t d = 0; d < dim; ++d)
                size = std::max(size, std::abs(vertex[v][d] - vertex[0][d]) /
                                          (bounds[d].second - bounds[d].first));
        return size;
    };

    int iterations = 0;
    bool converged = false;
    std::vector<std::size_t> order(dim + 1);
    while (iterations < spec.max_iter) {
        std::iota(order.begin(), order.end(), 0);
        std::sort(order.begin(), order.end(),
                  [&](std::size_t a, std::size_t b) { return value[a] < value[b]; });
        {
            std::vector<std::vector<double>> vs(dim + 1);
            std::vector<double> fs(dim + 1);
            for (std::size_t v = 0; v <= dim; ++v) {
                vs[v] = vertex[order[v]];
                fs[v] = value[order[v]];
            }
            vertex = std::move(vs);
            value = std::move(fs);
        }
        if (simplex_size() < spec.tol && std::isfinite(value[0])) {
            converged = true;
            break;
        }
        ++iterations;

        std::vector<double> centroid(dim, 0.0);
        for (std::size_t v = 0; v < dim; ++v)
            for (std::size_t d = 0; d < dim; ++d) centroid[d] += vertex[v][d];
        for (double& c : centroid) c /= static_cast<double>(dim);

        const auto blend = [&](double coeff) {
            std::vector<double> x(dim);
            for (std::size_t d = 0; d < dim; ++d)
                x[d] = centroid[d] + coeff * (vertex[dim][d] - centroid[d]);
            project(x);
            return x;
        };

        const std::vector<double> reflected = blend(-1.0);
        const double f_reflected = objective(reflected);
        if (f_reflected < value[0]) {
            const std::vector<double> expanded = blend(-2.0);
            const double f_expanded = objective(expanded);
            if (f_expanded < f_reflected) {
                vertex[dim] = expanded;
                value[dim] = f_expanded;
            } else {
                vertex[dim] = reflected;
                value[dim] = f_reflected;
            }
            continue;
        }
        if (f_reflected < value[dim - 1]) {
            vertex[dim] = reflected;
            value[dim] = f_reflected;
            continue;
        }
        // contraction: outside toward the reflection or inside toward the worst
        const bool outside = f_reflected < value[dim];
        const std::vector<double> contracted = blend(outside ? -0.5 : 0.5);
        const double f_contracted = objective(contracted);
        if (f_contracted < (outside ? f_reflected : value[dim])) {
            vertex[dim] = contracted;
            value[dim] = f_contracted;
            continue;
        }
        // shrink toward the best vertex
        for (std::size_t v = 1; v <= dim; ++v) {
            for (std::size_t d = 0; d < dim; ++d)
                vertex[v][d] = vertex[0][d] + 0.5 * (vertex[v][d] - vertex[0][d]);
            project(vertex[v]);
            value[v] = objective(vertex[v]);
        }
    }

    std::size_t best = 0;
    for (std::size_t v = 1; v <= dim; ++v)
        if (value[v] < value[best]) best = v;

    FitResult result;
    result.free_params = spec.free_params;
    result.fitted = vertex[best];
    result.iterations = iterations;
    result.converged = converged && std::isfinite(value[best]);
    result.samples_used = used;
    result.residual_rms = std::sqrt(value[best] / static_cast<double>(used));

    const CowParameters fitted_params = apply_fit(base, spec.free_params, result.fitted);
    result.calculated_skr.reserve(frame.rows());
    for (std::size_t i = 0; i < frame.rows(); ++i) {
        ChannelObservables obs;
        obs.visibility = visibility[i];
        obs.measured_qber = qber[i];
        obs.use_model_qber = !spec.use_measured_qber;
        try {
            result.calculated_skr.push_back(secret_key_rate(fitted_params, obs).skr);
        } catch (const std::domain_error&) {
            result.calculated_skr.push_back(std::numeric_limits<double>::quiet_NaN());
        }
    }
    return result;
}

TimeSeries residual_series(const FeatureFrame& frame, const CowParameters& params,
                           bool use_measured_qber) {
    const std::vector<double>& skr = frame.column("skr");
    const std::vector<double>& qber = frame.column("qber");
    const std::vector<double>& visibility = frame.column("visibility");
    TimeSeries out;
    out.name = "residual";
    out.samples.reserve(frame.rows());
    for (std::size_t i = 0; i < frame.rows(); ++i) {
        ChannelObservables obs;
        obs.visibility = visibility[i];
        obs.measured_qber = qber[i];
        obs.use_model_qber = !use_measured_qber;
        out.samples.push_back({frame.timestamps[i], secret_key_rate(params, obs).skr - skr[i]});
    }
    return out;
}

}  // namespace cowlink
