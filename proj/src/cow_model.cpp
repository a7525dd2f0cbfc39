#include "cowlink/cow_model.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace cowlink {

namespace {

void require(bool ok, const char* what) {
    if (!ok) throw std::invalid_argument(std::string("invalid parameter: ") + what);
}

double clamp01(double x) { return std::clamp(x, 0.0, 1.0); }

}  // namespace

double CowParameters::bob_transmittance() const {
    return std::pow(10.0, bob_transmittance_exp);
}

CowParameters CowParameters::at_upper_bound() const {
    CowParameters q = *this;
    q.mean_photon_number = transmittance(attenuation_db_per_km, distance_km);
    return q;
}

void CowParameters::validate() const {
    require(attenuation_db_per_km > 0.0, "attenuation must be positive");
    require(detector_efficiency > 0.0 && detector_efficiency <= 1.0,
            "detector efficiency must be in (0, 1]");
    require(error_correction_eff >= 1.0, "error correction efficiency must be >= 1");
    require(dark_count_prob >= 0.0 && dark_count_prob < 1.0,
            "dark count probability must be in [0, 1)");
    require(after_pulse_prob >= 0.0 && after_pulse_prob < 1.0,
            "after-pulse probability must be in [0, 1)");
    require(key_block_length_km > 0.0, "key block length must be positive");
    require(bob_transmittance_exp <= 0.0, "Bob transmittance exponent must be <= 0");
    require(dead_time_s >= 0.0, "dead time must be >= 0");
    require(pulse_rate_hz > 0.0, "pulse rate must be positive");
    require(mean_photon_number > 0.0, "mean photon number must be positive");
    require(distance_km > 0.0, "distance must be positive");
}

double transmittance(double attenuation_db_per_km, double distance_km) {
    return std::pow(10.0, -attenuation_db_per_km * distance_km / 10.0);
}

double binary_entropy(double p) {
    if (p < 0.0 || p > 1.0) throw std::domain_error("binary_entropy: p outside [0, 1]");
    if (p == 0.0 || p == 1.0) return 0.0;
    return -p * std::log2(p) - (1.0 - p) * std::log2(1.0 - p);
}

double detection_probability(double mu, double transmittance_t,
                             double bob_transmittance, double detector_efficiency) {
    return 1.0 - std::exp(-mu * transmittance_t * bob_transmittance * detector_efficiency);
}

double detection_probability(const CowParameters& p) {
    const double t = transmittance(p.attenuation_db_per_km, p.distance_km);
    const double eta = p.include_eta_in_p_mu ? p.detector_efficiency : 1.0;
    return detection_probability(p.mean_photon_number, t, p.bob_transmittance(), eta);
}

DeadDuty dead_duty_factors(const CowParameters& p) {
    const double p_click =
        detection_probability(p) + 2.0 * p.dark_count_prob + p.after_pulse_prob;
    DeadDuty f;
    f.dead_time_factor = 1.0 / (1.0 + p_click * p.pulse_rate_hz * p.dead_time_s);
    f.duty_cycle_factor =
        p.key_block_length_km / (p.distance_km + 2.0 * p.key_block_length_km);
    return f;
}

double sifted_rate(const CowParameters& p) {
    const double p_click =
        detection_probability(p) + 2.0 * p.dark_count_prob + p.after_pulse_prob;
    const DeadDuty f = dead_duty_factors(p);
    return 0.5 * p_click * p.pulse_rate_hz * f.duty_cycle_factor * f.dead_time_factor;
}

double model_qber(const CowParameters& p, double visibility) {
    const double p_mu = detection_probability(p);
    const double p_click = p_mu + 2.0 * p.dark_count_prob + p.after_pulse_prob;
    const double q =
        ((1.0 - visibility) * p_mu + 2.0 * p.dark_count_prob + p.after_pulse_prob) /
        (2.0 * p_click);
    return std::clamp(q, 0.0, 0.5);
}

double mutual_info_ab(double qber, double error_correction_eff) {
    return 1.0 - error_correction_eff * binary_entropy(qber);
}

double mutual_info_ae(const CowParameters& p, double visibility) {
    const double t = transmittance(p.attenuation_db_per_km, p.distance_km);
    const double r = p.mean_photon_number / t;
    if (r > 2.0) throw std::domain_error("mutual_info_ae: mu exceeds twice the transmittance");
    double big_d;
    if (r == 2.0) {
        // The 2 - mu/t denominator vanishes; the limit is 1 for any
        // visibility below unity and 0 at perfect visibility.
        big_d = visibility < 1.0 ? 1.0 : 0.0;
    } else {
        big_d = clamp01((1.0 - visibility) / (2.0 - r));
    }
    const double big_p = 0.5 + std::sqrt(big_d * (1.0 - big_d));
    const double numerator =
        (1.0 - 0.5 * r) * (1.0 - binary_entropy(big_p)) + 0.5 * r;
    const double dark_term =
        1.0 + 2.0 * p.dark_count_prob / (p.mean_photon_number * t * p.detector_efficiency);
    return numerator / dark_term;
}

SkrBreakdown secret_key_rate(const CowParameters& p, const ChannelObservables& obs) {
    SkrBreakdown b;
    b.transmittance = transmittance(p.attenuation_db_per_km, p.distance_km);
    b.detection_prob = detection_probability(p);
    const DeadDuty f = dead_duty_factors(p);
    b.dead_time_factor = f.dead_time_factor;
    b.duty_cycle_factor = f.duty_cycle_factor;
    b.sifted_rate = sifted_rate(p);
    b.qber = obs.use_model_qber ? model_qber(p, obs.visibility) : obs.measured_qber;
    b.mutual_info_ab = mutual_info_ab(b.qber, p.error_correction_eff);
    b.mutual_info_ae = mutual_info_ae(p, obs.visibility);
    b.skr_raw = b.sifted_rate * (b.mutual_info_ab - b.mutual_info_ae);
    b.skr = std::max(0.0, b.skr_raw);
    return b;
}

namespace {

// skr as a function of mu with everything else fixed; mu values where the
// eavesdropper bound is undefined count as "no key".
double skr_at(CowParameters p, const ChannelObservables& obs, double mu) {
    p.mean_photon_number = mu;
    try {
        return secret_key_rate(p, obs).skr;
    } catch (const std::domain_error&) {
        return 0.0;
    }
}

}  // namespace

MuSolveResult solve_mu(const CowParameters& p, const ChannelObservables& obs,
                       double target_skr, double mu_lo, double mu_hi,
                       double tolerance, int max_iterations) {
    if (!(mu_lo > 0.0) || !(mu_hi > mu_lo))
        throw std::invalid_argument("solve_mu: need 0 < mu_lo < mu_hi");
    if (target_skr < 0.0)
        throw std::invalid_argument("solve_mu: target rate must be >= 0");

    MuSolveResult result;

    // Locate the peak of the unimodal rate curve by golden-section search in
    // log(mu).
    const double inv_phi = 0.6180339887498949;
    double a = std::log(mu_lo), b = std::log(mu_hi);
    double c = b - inv_phi * (b - a);
    double d = a + inv_phi * (b - a);
    double fc = skr_at(p, obs, std::exp(c));
    double fd = skr_at(p, obs, std::exp(d));
    int iterations = 0;
    while (b - a > 1e-13 && iterations < max_iterations) {
        if (fc > fd) {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = skr_at(p, obs, std::exp(c));
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = skr_at(p, obs, std::exp(d));
        }
        ++iterations;
    }
    const double log_peak = 0.5 * (a + b);
    const double mu_peak = std::exp(log_peak);
    const double skr_peak = skr_at(p, obs, mu_peak);

    if (target_skr > skr_peak) {
        result.mu = mu_peak;
        result.residual = skr_peak - target_skr;
        result.bracketed = false;
        result.iterations = iterations;
        return result;
    }

    // Bisect on the rising branch [mu_lo, mu_peak] so the smallest root is
    // the one reported. The rate at mu_lo may already exceed the target; in
    // that case the falling branch holds the only crossing.
    double lo = std::log(mu_lo), hi = log_peak;
    double f_lo = skr_at(p, obs, mu_lo) - target_skr;
    if (f_lo > 0.0) {
        const double f_hi = skr_at(p, obs, mu_hi) - target_skr;
        if (f_hi > 0.0) {
            // The whole range sits above the target; report the endpoint
            // that comes closest.
            result.mu = f_lo <= f_hi ? mu_lo : mu_hi;
            result.residual = std::min(f_lo, f_hi);
            result.bracketed = false;
            result.iterations = iterations;
            return result;
        }
        lo = log_peak;
        hi = std::log(mu_hi);
    }
    while (hi - lo > tolerance && iterations < max_iterations) {
        const double mid = 0.5 * (lo + hi);
        const double f_mid = skr_at(p, obs, std::exp(mid)) - target_skr;
        const bool mid_below = f_mid < 0.0;
        // On the rising branch the root is above any point below target; on
        // the falling branch it is the other way around.
        const bool rising = f_lo <= 0.0;
        if ((rising && mid_below) || (!rising && !mid_below)) {
            lo = mid;
        } else {
            hi = mid;
        }
        ++iterations;
    }
    result.mu = std::exp(0.5 * (lo + hi));
    result.residual = skr_at(p, obs, result.mu) - target_skr;
    result.bracketed = true;
    result.iterations = iterations;
    return result;
}

}  // namespace cowlink
