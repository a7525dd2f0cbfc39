#pragma once

#include <cstdint>

namespace cowlink {

// Physical-layer parameters of a COW-protocol link. Defaults describe the
// reference link used throughout the tests.
struct CowParameters {
    double attenuation_db_per_km = 0.21;  // fiber attenuation
    double detector_efficiency = 0.07;    // eta
    double error_correction_eff = 1.0;    // eta_ec
    double dark_count_prob = 5e-6;        // per gate, per detector
    double after_pulse_prob = 0.0;
    double key_block_length_km = 10.0;    // L_s
    double bob_transmittance_exp = -0.265;  // t_B = 10^exp
    double dead_time_s = 1e-5;
    double pulse_rate_hz = 1.25e9;  // nu
    double mean_photon_number = 0.5;      // mu
    double distance_km = 40.0;            // L
    // When false, detector efficiency is left out of the detection
    // probability (it then only enters the eavesdropper bound's dark-count
    // denominator).
    bool include_eta_in_p_mu = true;

    double bob_transmittance() const;

    // Copy of the parameters with mu set to the channel transmittance, the
    // largest mean photon number for which the eavesdropper bound is defined
    // at this distance.
    CowParameters at_upper_bound() const;

    // Throws std::invalid_argument on out-of-range values.
    void validate() const;
};

// Per-window measurements taken from the running link.
struct ChannelObservables {
    double visibility = 0.98;
    double measured_qber = 0.02;
    // If true, the QBER used in the information-rate terms is derived from
    // the model instead of measured_qber.
    bool use_model_qber = false;
};

// Every intermediate of the secret-key-rate computation, for inspection and
// testing.
struct SkrBreakdown {
    double transmittance = 0.0;
    double detection_prob = 0.0;   // p_mu
    double dead_time_factor = 0.0;
    double duty_cycle_factor = 0.0;
    double sifted_rate = 0.0;      // bit/s
    double qber = 0.0;             // value actually used downstream
    double mutual_info_ab = 0.0;
    double mutual_info_ae = 0.0;
    double skr_raw = 0.0;          // before clamping at zero
    double skr = 0.0;              // bit/s, >= 0
};

struct DeadDuty {
    double dead_time_factor = 0.0;
    double duty_cycle_factor = 0.0;
};

struct MuSolveResult {
    double mu = 0.0;
    double residual = 0.0;  // skr(mu) - target
    bool bracketed = false; // false when the target exceeds the achievable peak
    int iterations = 0;
};

// 10^(-alpha*L/10)
double transmittance(double attenuation_db_per_km, double distance_km);

// Shannon binary entropy, H2(0)=H2(1)=0.
double binary_entropy(double p);

double detection_probability(double mu, double transmittance_t,
                             double bob_transmittance, double detector_efficiency);
double detection_probability(const CowParameters& p);

DeadDuty dead_duty_factors(const CowParameters& p);

double sifted_rate(const CowParameters& p);

// QBER predicted by the model from visibility; clamped to [0, 0.5].
double model_qber(const CowParameters& p, double visibility);

// 1 - eta_ec * H2(q); not clamped.
double mutual_info_ab(double qber, double error_correction_eff);

// Eavesdropper information bound. Throws std::domain_error when
// mu / t > 2 (bound undefined).
double mutual_info_ae(const CowParameters& p, double visibility);

// Full evaluation; fills every field of SkrBreakdown.
SkrBreakdown secret_key_rate(const CowParameters& p, const ChannelObservables& obs);

// Finds the smallest mu in [mu_lo, mu_hi] with skr(mu) == target_skr.
// The rate is unimodal in mu, so the rising branch is searched first; if the
// target exceeds the peak value the peak itself is returned with
// bracketed=false.
MuSolveResult solve_mu(const CowParameters& p, const ChannelObservables& obs,
                       double target_skr, double mu_lo, double mu_hi,
                       double tolerance = 1e-12, int max_iterations = 200);

}  // namespace cowlink
