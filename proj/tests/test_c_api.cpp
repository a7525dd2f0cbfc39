#include <cmath>
#include <filesystem>
#include <string>

#include "cowlink.h"
#include "cowlink/cow_model.hpp"
#include "doctest.h"

namespace fs = std::filesystem;

namespace {

struct CtxGuard {
    cow_ctx* ctx = cow_ctx_new();
    ~CtxGuard() { cow_ctx_free(ctx); }
};

}  // namespace

TEST_CASE("c api defaults mirror the reference parameters") {
    cow_params params;
    cow_params_default(&params);
    const cowlink::CowParameters reference;
    CHECK(params.attenuation_db_per_km == reference.attenuation_db_per_km);
    CHECK(params.detector_efficiency == reference.detector_efficiency);
    CHECK(params.mean_photon_number == reference.mean_photon_number);
    CHECK(params.distance_km == reference.distance_km);
    CHECK(params.include_eta_in_p_mu == 1);

    cow_observables obs;
    cow_observables_default(&obs);
    CHECK(obs.visibility == 0.98);
    CHECK(obs.measured_qber == 0.02);
    CHECK(obs.use_model_qber == 0);

    CHECK(std::string(cow_version()) == "1.0.0");
}

TEST_CASE("c api secret key rate matches the library") {
    CtxGuard guard;
    cow_params params;
    cow_params_default(&params);
    cow_observables obs;
    cow_observables_default(&obs);

    // mu = transmittance keeps the eavesdropper bound defined at 40 km.
    cowlink::CowParameters cpp;
    cpp = cpp.at_upper_bound();
    params.mean_photon_number = cpp.mean_photon_number;

    cow_skr_breakdown breakdown;
    REQUIRE(cow_secret_key_rate(guard.ctx, &params, &obs, &breakdown) == COW_OK);
    CHECK(std::string(cow_last_error(guard.ctx)).empty());

    const auto expected = cowlink::secret_key_rate(cpp, cowlink::ChannelObservables{});
    CHECK(breakdown.skr == expected.skr);
    CHECK(breakdown.transmittance == expected.transmittance);
    CHECK(breakdown.sifted_rate == expected.sifted_rate);
    CHECK(breakdown.qber == expected.qber);
    CHECK(breakdown.skr > 0.0);

    cow_mu_solution solution;
    REQUIRE(cow_solve_mu(guard.ctx, &params, &obs, expected.skr, 1e-4,
                         params.mean_photon_number, &solution) == COW_OK);
    CHECK(solution.bracketed == 1);
    // mu = t sits on the falling branch; the solver prefers the smaller root.
    CHECK(solution.mu < params.mean_photon_number);
    cow_params at_root = params;
    at_root.mean_photon_number = solution.mu;
    cow_skr_breakdown at_root_breakdown;
    REQUIRE(cow_secret_key_rate(guard.ctx, &at_root, &obs, &at_root_breakdown) == COW_OK);
    CHECK(std::abs(at_root_breakdown.skr - expected.skr) / expected.skr < 1e-6);
}

TEST_CASE("c api maps exceptions to status codes") {
    CtxGuard guard;
    cow_params params;
    cow_params_default(&params);
    cow_observables obs;
    cow_observables_default(&obs);
    cow_skr_breakdown breakdown;

    // mu/t > 2 at the defaults: eavesdropper bound undefined.
    CHECK(cow_secret_key_rate(guard.ctx, &params, &obs, &breakdown) == COW_ERROR_DOMAIN);
    CHECK(!std::string(cow_last_error(guard.ctx)).empty());

    cow_mu_solution solution;
    CHECK(cow_solve_mu(guard.ctx, &params, &obs, 1000.0, 0.1, 0.1, &solution) ==
          COW_ERROR_INVALID_ARGUMENT);

    CHECK(cow_secret_key_rate(guard.ctx, nullptr, &obs, &breakdown) ==
          COW_ERROR_INVALID_ARGUMENT);
    CHECK(std::string(cow_last_error(guard.ctx)) == "null pointer argument");

    cow_prep_options prep = {};
    prep.in_dir = "c_api_tmp_no_such_dir";
    prep.out_path = "c_api_tmp_frame.csv";
    char* output = nullptr;
    char* diagnostics = nullptr;
    CHECK(cow_run_prep(guard.ctx, &prep, &output, &diagnostics) == COW_ERROR_IO);
    CHECK(output == nullptr);

    cow_string_free(nullptr);  // must be a no-op
}

TEST_CASE("c api drives the synth command") {
    CtxGuard guard;
    const std::string dir = "c_api_tmp_synth";
    fs::remove_all(dir);

    const std::string scenario_path = dir + "_scenario.txt";
    {
        std::FILE* f = std::fopen(scenario_path.c_str(), "wb");
        REQUIRE(f != nullptr);
        std::fputs("period = 10s\nduration = 600s\n[link]\nid = 1\ndistance_km = 46\n", f);
        std::fclose(f);
    }

    cow_synth_options options = {};
    options.scenario_path = scenario_path.c_str();
    options.out_dir = dir.c_str();
    char* output = nullptr;
    char* diagnostics = nullptr;
    REQUIRE(cow_run_synth(guard.ctx, &options, &output, &diagnostics) == COW_OK);
    REQUIRE(output != nullptr);
    CHECK(std::string(output).find("link 1: 60 samples") != std::string::npos);
    CHECK(fs::exists(fs::path(dir) / "link1" / "skr.csv"));
    cow_string_free(output);
    cow_string_free(diagnostics);

    fs::remove_all(dir);
    fs::remove(scenario_path);
}
