#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "cowlink/cow_model.hpp"
#include "cowlink/time_series.hpp"

namespace cowlink {

// Stochastic texture of a generated link. Visibility and the key-rate gain
// follow mean-reverting AR(1) processes whose sigma fields are *stationary*
// standard deviations (innovations are scaled by sqrt(1 - ar1^2)).
struct NoiseSpec {
    double visibility_mean = 0.98;
    double visibility_ar1 = 0.99;
    double visibility_sigma = 0.005;
    double qber_jitter_sigma = 0.002;
    double skr_relative_noise = 0.05;
    double dropout_probability = 0.0005;  // per sample, outage onset
    std::uint64_t seed = 42;

    void validate() const;  // throws std::invalid_argument
};

struct LinkConfig {
    int link_id = 1;
    double distance_km = 46.0;
    // Feature fed to downstream models; defaults to the distance proxy.
    double link_loss = 46.0;
    CowParameters params;  // distance_km is overridden from this config
    NoiseSpec noise;
    // Operate at mu equal to the channel transmittance (the largest valid
    // value); set false when params.mean_photon_number is given explicitly.
    bool mu_at_upper_bound = true;
    bool use_model_qber_for_skr = false;

    void validate() const;
    // The parameter set actually driving generation.
    CowParameters effective_params() const;
};

// Four series keyed "visibility", "qber", "laserpower", "skr", on a shared
// grid of start + i*period; outage stretches emit no samples in any series.
// Deterministic for a given (noise.seed, link_id).
std::map<std::string, TimeSeries> generate_link(const LinkConfig& config,
                                                std::int64_t start_micros,
                                                std::int64_t duration_micros,
                                                std::int64_t period_micros);

struct Scenario {
    std::vector<LinkConfig> links;
    std::int64_t start_micros = 1704067200000000LL;  // 2024-01-01T00:00:00Z
    std::int64_t duration_micros = 86400LL * 1000000;
    std::int64_t period_micros = 10LL * 1000000;
};

// The five-link reference chain (46, 57, 42, 43, 50 km).
Scenario default_scenario();

// Key-value scenario text: global `start/period/duration/seed` keys, then
// one `[link]` section per link. Throws parse_error with line numbers.
Scenario parse_scenario_text(std::string_view text, const std::string& path);
Scenario parse_scenario(const std::string& path);

struct LinkSummary {
    int link_id = 0;
    std::size_t samples = 0;  // per series
};

// Writes out_dir/link<id>/{visibility,qber,laserpower,skr}.csv in the ingest
// format plus a link_info.txt with the link's constants.
std::vector<LinkSummary> generate_scenario(const Scenario& scenario, const std::string& out_dir);

}  // namespace cowlink
