#include <doctest.h>

#include <cmath>
#include <stdexcept>

#include "cowlink/curve_fit.hpp"
#include "cowlink/synth.hpp"

using namespace cowlink;

namespace {

constexpr std::int64_t kSecond = 1000000;
constexpr std::int64_t kStart = 1704067200000000LL;

LinkConfig quiet_link_at(double alpha) {
    LinkConfig link;
    link.distance_km = 46.0;
    link.params.attenuation_db_per_km = alpha;
    link.noise.visibility_sigma = 0.0;
    link.noise.qber_jitter_sigma = 0.0;
    link.noise.skr_relative_noise = 0.0;
    link.noise.dropout_probability = 0.0;
    return link;
}

FeatureFrame frame_for(const LinkConfig& link, int samples) {
    const auto series =
        generate_link(link, kStart, samples * 10LL * kSecond, 10 * kSecond);
    return align({series.at("skr"), series.at("qber"), series.at("visibility")});
}

// base parameter set sharing the generator's operating point but starting
// the attenuation at the nominal 0.21 dB/km
CowParameters fitting_base(const LinkConfig& generator) {
    CowParameters base;
    base.distance_km = generator.distance_km;
    base.mean_photon_number = generator.effective_params().mean_photon_number;
    return base;
}

double unfitted_rms(const FeatureFrame& frame, const CowParameters& params) {
    const TimeSeries residuals = residual_series(frame, params);
    const auto& skr = frame.column("skr");
    double sum = 0.0;
    std::size_t used = 0;
    for (std::size_t i = 0; i < residuals.samples.size(); ++i) {
        if (skr[i] == 0.0) continue;
        sum += residuals.samples[i].value * residuals.samples[i].value;
        ++used;
    }
    return std::sqrt(sum / static_cast<double>(used));
}

}  // namespace

TEST_CASE("parameter names round trip") {
    for (const char* name : {"alpha", "eta", "t_B"})
        CHECK(fit_param_name(fit_param_from_name(name)) == name);
    CHECK_THROWS_AS(fit_param_from_name("bogus"), std::invalid_argument);
}

TEST_CASE("default bounds cover the physical test ranges") {
    const CowParameters base;
    CHECK(default_bounds(FitParam::alpha, base) == std::pair{0.15, 0.25});
    CHECK(default_bounds(FitParam::eta, base) == std::pair{0.02, 0.10});
    const auto [tb_lo, tb_hi] = default_bounds(FitParam::t_b, base);
    CHECK(tb_lo == doctest::Approx(0.5 * base.bob_transmittance()).epsilon(1e-15));
    CHECK(tb_hi == doctest::Approx(1.0));  // doubling the nominal exceeds 1
}

TEST_CASE("apply_fit writes each parameter to its slot") {
    const CowParameters base;
    const CowParameters p = apply_fit(base, {FitParam::alpha, FitParam::eta, FitParam::t_b},
                                      {0.19, 0.05, 0.4});
    CHECK(p.attenuation_db_per_km == 0.19);
    CHECK(p.detector_efficiency == 0.05);
    CHECK(p.bob_transmittance() == doctest::Approx(0.4).epsilon(1e-13));
}

TEST_CASE("noiseless attenuation recovery") {
    const LinkConfig generator = quiet_link_at(0.23);
    const FeatureFrame frame = frame_for(generator, 200);
    const CowParameters base = fitting_base(generator);

    FitSpec spec;
    spec.free_params = {FitParam::alpha};
    const FitResult r = fit(frame, base, spec);
    CHECK(r.converged);
    CHECK(r.fitted[0] == doctest::Approx(0.23).epsilon(0.01));
    CHECK(r.residual_rms < 1.0);
    CHECK(r.samples_used == frame.rows());
    CHECK(r.calculated_skr.size() == frame.rows());
}

TEST_CASE("a frame matching the start parameters is a fixed point") {
    const LinkConfig generator = quiet_link_at(0.21);
    const FeatureFrame frame = frame_for(generator, 100);
    const CowParameters base = fitting_base(generator);

    FitSpec spec;
    spec.free_params = {FitParam::alpha};
    const FitResult r = fit(frame, base, spec);
    CHECK(r.converged);
    CHECK(r.fitted[0] == 0.21);  // the zero-loss start vertex is never beaten
    CHECK(r.residual_rms == 0.0);
}

TEST_CASE("noisy attenuation recovery stays within five percent") {
    LinkConfig generator = quiet_link_at(0.23);
    generator.noise = NoiseSpec{};  // default 5% relative rate noise
    const FeatureFrame frame = frame_for(generator, 2000);
    const CowParameters base = fitting_base(generator);

    FitSpec spec;
    spec.free_params = {FitParam::alpha};
    const FitResult r = fit(frame, base, spec);
    CHECK(r.converged);
    CHECK(r.fitted[0] == doctest::Approx(0.23).epsilon(0.05));
}

TEST_CASE("fitting improves on the unfitted model") {
    LinkConfig generator = quiet_link_at(0.23);
    generator.noise = NoiseSpec{};
    const FeatureFrame frame = frame_for(generator, 1000);
    const CowParameters base = fitting_base(generator);

    FitSpec spec;
    spec.free_params = {FitParam::alpha, FitParam::eta};
    const FitResult r = fit(frame, base, spec);
    CHECK(r.residual_rms < unfitted_rms(frame, base));
}

TEST_CASE("nested fits never lose ground when seeded from the smaller fit") {
    LinkConfig generator = quiet_link_at(0.23);
    generator.noise = NoiseSpec{};
    const FeatureFrame frame = frame_for(generator, 1000);
    const CowParameters base = fitting_base(generator);

    FitSpec one;
    one.free_params = {FitParam::alpha};
    const FitResult r1 = fit(frame, base, one);

    FitSpec two;
    two.free_params = {FitParam::alpha, FitParam::eta};
    two.initial = {r1.fitted[0], base.detector_efficiency};
    const FitResult r2 = fit(frame, base, two);

    FitSpec three;
    three.free_params = {FitParam::alpha, FitParam::eta, FitParam::t_b};
    three.initial = {r2.fitted[0], r2.fitted[1], base.bob_transmittance()};
    const FitResult r3 = fit(frame, base, three);

    CHECK(r2.residual_rms <= r1.residual_rms + 1e-9);
    CHECK(r3.residual_rms <= r2.residual_rms + 1e-9);
}

TEST_CASE("fitted values respect their bounds") {
    const LinkConfig generator = quiet_link_at(0.23);
    const FeatureFrame frame = frame_for(generator, 200);
    const CowParameters base = fitting_base(generator);

    FitSpec spec;
    spec.free_params = {FitParam::alpha};
    spec.bounds = {{0.15, 0.20}};  // excludes the true value
    spec.initial = {0.18};
    const FitResult r = fit(frame, base, spec);
    CHECK(r.fitted[0] >= 0.15);
    CHECK(r.fitted[0] <= 0.20);
    CHECK(r.fitted[0] == doctest::Approx(0.20).epsilon(1e-3));  // pinned to the edge
}

TEST_CASE("outage rows are excluded from the objective") {
    const LinkConfig generator = quiet_link_at(0.23);
    FeatureFrame frame = frame_for(generator, 100);
    // fake an outage stretch
    for (std::size_t i = 0; i < 20; ++i) frame.column("skr")[i] = 0.0;
    const CowParameters base = fitting_base(generator);

    FitSpec spec;
    spec.free_params = {FitParam::alpha};
    const FitResult r = fit(frame, base, spec);
    CHECK(r.samples_used == 80);
    CHECK(r.fitted[0] == doctest::Approx(0.23).epsilon(0.01));

    FeatureFrame dead = frame;
    for (double& v : dead.column("skr")) v = 0.0;
    CHECK_THROWS_AS(fit(dead, base, spec), std::invalid_argument);
}

TEST_CASE("residuals vanish at the generating parameters") {
    const LinkConfig generator = quiet_link_at(0.23);
    const FeatureFrame frame = frame_for(generator, 100);
    const TimeSeries residuals = residual_series(frame, generator.effective_params());
    double typical = frame.column("skr")[0];
    for (const auto& s : residuals.samples)
        CHECK(std::abs(s.value) < 1e-6 * typical);
}

TEST_CASE("a constant measurement offset appears as a constant residual") {
    const LinkConfig generator = quiet_link_at(0.23);
    FeatureFrame frame = frame_for(generator, 50);
    for (double& v : frame.column("skr")) v += 100.0;
    const TimeSeries residuals = residual_series(frame, generator.effective_params());
    for (const auto& s : residuals.samples)
        CHECK(s.value == doctest::Approx(-100.0).epsilon(1e-9));
}

TEST_CASE("the qber source flag changes the model output") {
    LinkConfig generator = quiet_link_at(0.23);
    generator.noise.qber_jitter_sigma = 0.01;  // measured qber differs from modeled
    const FeatureFrame frame = frame_for(generator, 50);
    const CowParameters params = generator.effective_params();
    const TimeSeries measured = residual_series(frame, params, true);
    const TimeSeries modeled = residual_series(frame, params, false);
    bool any_different = false;
    for (std::size_t i = 0; i < measured.samples.size(); ++i)
        if (measured.samples[i].value != modeled.samples[i].value) any_different = true;
    CHECK(any_different);
}

TEST_CASE("fit input validation") {
    const LinkConfig generator = quiet_link_at(0.21);
    const FeatureFrame frame = frame_for(generator, 10);
    const CowParameters base = fitting_base(generator);

    FitSpec spec;  // no free parameters
    CHECK_THROWS_AS(fit(frame, base, spec), std::invalid_argument);

    spec.free_params = {FitParam::alpha, FitParam::alpha};
    CHECK_THROWS_AS(fit(frame, base, spec), std::invalid_argument);

    spec.free_params = {FitParam::alpha};
    spec.initial = {0.5};  // outside the default bounds
    CHECK_THROWS_AS(fit(frame, base, spec), std::invalid_argument);

    spec.initial = {0.21};
    spec.bounds = {{0.25, 0.15}};
    CHECK_THROWS_AS(fit(frame, base, spec), std::invalid_argument);

    FeatureFrame empty;
    empty.names = frame.names;
    empty.columns.resize(frame.columns.size());
    FitSpec ok;
    ok.free_params = {FitParam::alpha};
    CHECK_THROWS_AS(fit(empty, base, ok), std::invalid_argument);
}
