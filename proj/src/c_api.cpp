#include "cowlink.h"

#include <cstdlib>
#include <cstring>
#include <stdexcept>
#include <string>
#include <vector>

#include "cowlink/commands.hpp"
#include "cowlink/cow_model.hpp"
#include "cowlink/error.hpp"

struct cow_ctx {
    std::string last_error;
};

namespace {

constexpr const char* kVersion = "1.0.0";

cow_status set_error(cow_ctx* ctx, cow_status status, const char* message) {
    if (ctx) ctx->last_error = message;
    return status;
}

template <typename Fn>
cow_status guarded(cow_ctx* ctx, Fn&& fn) {
    try {
        const cow_status status = fn();
        if (ctx && status == COW_OK) ctx->last_error.clear();
        return status;
    } catch (const cowlink::parse_error& e) {
        return set_error(ctx, COW_ERROR_PARSE, e.what());
    } catch (const cowlink::io_error& e) {
        return set_error(ctx, COW_ERROR_IO, e.what());
    } catch (const cowlink::convergence_error& e) {
        return set_error(ctx, COW_ERROR_CONVERGENCE, e.what());
    } catch (const std::domain_error& e) {
        return set_error(ctx, COW_ERROR_DOMAIN, e.what());
    } catch (const std::invalid_argument& e) {
        return set_error(ctx, COW_ERROR_INVALID_ARGUMENT, e.what());
    } catch (const std::out_of_range& e) {
        return set_error(ctx, COW_ERROR_INVALID_ARGUMENT, e.what());
    } catch (const std::exception& e) {
        return set_error(ctx, COW_ERROR_INTERNAL, e.what());
    } catch (...) {
        return set_error(ctx, COW_ERROR_INTERNAL, "unknown error");
    }
}

char* copy_string(const std::string& text) {
    char* copy = static_cast<char*>(std::malloc(text.size() + 1));
    if (!copy) return nullptr;
    std::memcpy(copy, text.c_str(), text.size() + 1);
    return copy;
}

void deliver(const cowlink::CommandResult& result, char** output, char** diagnostics) {
    if (output) *output = copy_string(result.output);
    if (diagnostics) *diagnostics = copy_string(result.diagnostics);
}

cow_status require(cow_ctx* ctx, bool condition, const char* message) {
    if (condition) return COW_OK;
    return set_error(ctx, COW_ERROR_INVALID_ARGUMENT, message);
}

cowlink::CowParameters to_cpp(const cow_params& c) {
    cowlink::CowParameters p;
    p.attenuation_db_per_km = c.attenuation_db_per_km;
    p.detector_efficiency = c.detector_efficiency;
    p.error_correction_eff = c.error_correction_eff;
    p.dark_count_prob = c.dark_count_prob;
    p.after_pulse_prob = c.after_pulse_prob;
    p.key_block_length_km = c.key_block_length_km;
    p.bob_transmittance_exp = c.bob_transmittance_exp;
    p.dead_time_s = c.dead_time_s;
    p.pulse_rate_hz = c.pulse_rate_hz;
    p.mean_photon_number = c.mean_photon_number;
    p.distance_km = c.distance_km;
    p.include_eta_in_p_mu = c.include_eta_in_p_mu != 0;
    return p;
}

cowlink::ChannelObservables to_cpp(const cow_observables& c) {
    cowlink::ChannelObservables obs;
    obs.visibility = c.visibility;
    obs.measured_qber = c.measured_qber;
    obs.use_model_qber = c.use_model_qber != 0;
    return obs;
}

}  // namespace

extern "C" {

cow_ctx* cow_ctx_new(void) {
    try {
        return new cow_ctx();
    } catch (...) {
        return nullptr;
    }
}

void cow_ctx_free(cow_ctx* ctx) { delete ctx; }

const char* cow_last_error(const cow_ctx* ctx) { return ctx ? ctx->last_error.c_str() : ""; }

const char* cow_version(void) { return kVersion; }

void cow_string_free(char* text) { std::free(text); }

void cow_params_default(cow_params* params) {
    if (!params) return;
    const cowlink::CowParameters p;
    params->attenuation_db_per_km = p.attenuation_db_per_km;
    params->detector_efficiency = p.detector_efficiency;
    params->error_correction_eff = p.error_correction_eff;
    params->dark_count_prob = p.dark_count_prob;
    params->after_pulse_prob = p.after_pulse_prob;
    params->key_block_length_km = p.key_block_length_km;
    params->bob_transmittance_exp = p.bob_transmittance_exp;
    params->dead_time_s = p.dead_time_s;
    params->pulse_rate_hz = p.pulse_rate_hz;
    params->mean_photon_number = p.mean_photon_number;
    params->distance_km = p.distance_km;
    params->include_eta_in_p_mu = p.include_eta_in_p_mu ? 1 : 0;
}

void cow_observables_default(cow_observables* obs) {
    if (!obs) return;
    const cowlink::ChannelObservables o;
    obs->visibility = o.visibility;
    obs->measured_qber = o.measured_qber;
    obs->use_model_qber = o.use_model_qber ? 1 : 0;
}

cow_status cow_secret_key_rate(cow_ctx* ctx, const cow_params* params,
                               const cow_observables* obs, cow_skr_breakdown* out) {
    if (require(ctx, params && obs && out, "null pointer argument") != COW_OK) {
        return COW_ERROR_INVALID_ARGUMENT;
    }
    return guarded(ctx, [&] {
        const auto breakdown = cowlink::secret_key_rate(to_cpp(*params), to_cpp(*obs));
        out->transmittance = breakdown.transmittance;
        out->detection_prob = breakdown.detection_prob;
        out->dead_time_factor = breakdown.dead_time_factor;
        out->duty_cycle_factor = breakdown.duty_cycle_factor;
        out->sifted_rate = breakdown.sifted_rate;
        out->qber = breakdown.qber;
        out->mutual_info_ab = breakdown.mutual_info_ab;
        out->mutual_info_ae = breakdown.mutual_info_ae;
        out->skr_raw = breakdown.skr_raw;
        out->skr = breakdown.skr;
        return COW_OK;
    });
}

cow_status cow_solve_mu(cow_ctx* ctx, const cow_params* params, const cow_observables* obs,
                        double target_skr, double mu_lo, double mu_hi, cow_mu_solution* out) {
    if (require(ctx, params && obs && out, "null pointer argument") != COW_OK) {
        return COW_ERROR_INVALID_ARGUMENT;
    }
    return guarded(ctx, [&] {
        const auto solution =
            cowlink::solve_mu(to_cpp(*params), to_cpp(*obs), target_skr, mu_lo, mu_hi);
        out->mu = solution.mu;
        out->residual = solution.residual;
        out->bracketed = solution.bracketed ? 1 : 0;
        out->iterations = solution.iterations;
        return COW_OK;
    });
}

cow_status cow_run_synth(cow_ctx* ctx, const cow_synth_options* options, char** output,
                         char** diagnostics) {
    if (require(ctx, options && options->out_dir, "null pointer argument") != COW_OK) {
        return COW_ERROR_INVALID_ARGUMENT;
    }
    return guarded(ctx, [&] {
        cowlink::SynthOptions cpp;
        if (options->scenario_path) cpp.scenario_path = options->scenario_path;
        cpp.out_dir = options->out_dir;
        cpp.seed = options->seed;
        cpp.seed_set = options->seed_set != 0;
        deliver(cowlink::run_synth(cpp), output, diagnostics);
        return COW_OK;
    });
}

cow_status cow_run_prep(cow_ctx* ctx, const cow_prep_options* options, char** output,
                        char** diagnostics) {
    if (require(ctx, options && options->in_dir && options->out_path,
                "null pointer argument") != COW_OK) {
        return COW_ERROR_INVALID_ARGUMENT;
    }
    return guarded(ctx, [&] {
        cowlink::PrepOptions cpp;
        cpp.in_dir = options->in_dir;
        cpp.out_path = options->out_path;
        if (options->window) cpp.window = options->window;
        if (options->lags) cpp.lags = options->lags;
        cpp.link_loss = options->link_loss;
        cpp.link_loss_set = options->link_loss_set != 0;
        deliver(cowlink::run_prep(cpp), output, diagnostics);
        return COW_OK;
    });
}

cow_status cow_run_fit(cow_ctx* ctx, const cow_fit_options* options, char** output,
                       char** diagnostics) {
    if (require(ctx, options && options->frame_path && options->out_path,
                "null pointer argument") != COW_OK) {
        return COW_ERROR_INVALID_ARGUMENT;
    }
    return guarded(ctx, [&] {
        cowlink::FitOptions cpp;
        cpp.frame_path = options->frame_path;
        cpp.out_path = options->out_path;
        if (options->free_params) cpp.free_params = options->free_params;
        cpp.mu = options->mu;
        cpp.mu_set = options->mu_set != 0;
        cpp.distance_km = options->distance_km;
        cpp.distance_set = options->distance_set != 0;
        cpp.use_model_qber = options->use_model_qber != 0;
        deliver(cowlink::run_fit(cpp), output, diagnostics);
        return COW_OK;
    });
}

cow_status cow_run_train(cow_ctx* ctx, const cow_train_options* options, char** output,
                         char** diagnostics) {
    if (require(ctx,
                options && options->out_model && (options->n_frames == 0 || options->frame_paths),
                "null pointer argument") != COW_OK) {
        return COW_ERROR_INVALID_ARGUMENT;
    }
    return guarded(ctx, [&] {
        cowlink::TrainOptions cpp;
        for (size_t i = 0; i < options->n_frames; ++i) {
            if (!options->frame_paths[i]) {
                throw std::invalid_argument("null frame path");
            }
            cpp.frame_paths.emplace_back(options->frame_paths[i]);
        }
        cpp.out_model = options->out_model;
        if (options->features) cpp.features = options->features;
        if (options->history_lags > 0) cpp.history_lags = options->history_lags;
        if (options->epochs > 0) cpp.epochs = options->epochs;
        if (options->batch_size > 0) cpp.batch_size = options->batch_size;
        if (options->seed_set) cpp.seed = options->seed;
        deliver(cowlink::run_train(cpp), output, diagnostics);
        return COW_OK;
    });
}

cow_status cow_run_predict(cow_ctx* ctx, const cow_predict_options* options, char** output,
                           char** diagnostics) {
    if (require(ctx,
                options && options->model_path && options->frame_path && options->out_path &&
                    (options->n_overrides == 0 || options->link_loss_overrides),
                "null pointer argument") != COW_OK) {
        return COW_ERROR_INVALID_ARGUMENT;
    }
    return guarded(ctx, [&] {
        cowlink::PredictOptions cpp;
        cpp.model_path = options->model_path;
        cpp.frame_path = options->frame_path;
        cpp.out_path = options->out_path;
        cpp.link_loss_overrides.assign(options->link_loss_overrides,
                                       options->link_loss_overrides + options->n_overrides);
        deliver(cowlink::run_predict(cpp), output, diagnostics);
        return COW_OK;
    });
}

cow_status cow_run_evaluate(cow_ctx* ctx, const cow_evaluate_options* options, char** output,
                            char** diagnostics) {
    if (require(ctx,
                options && options->model_path && options->out_path &&
                    (options->n_frames == 0 || options->frame_paths),
                "null pointer argument") != COW_OK) {
        return COW_ERROR_INVALID_ARGUMENT;
    }
    return guarded(ctx, [&] {
        cowlink::EvaluateOptions cpp;
        cpp.model_path = options->model_path;
        for (size_t i = 0; i < options->n_frames; ++i) {
            if (!options->frame_paths[i]) {
                throw std::invalid_argument("null frame path");
            }
            cpp.frame_paths.emplace_back(options->frame_paths[i]);
        }
        cpp.out_path = options->out_path;
        deliver(cowlink::run_evaluate(cpp), output, diagnostics);
        return COW_OK;
    });
}

cow_status cow_run_correlate(cow_ctx* ctx, const cow_correlate_options* options, char** output,
                             char** diagnostics) {
    if (require(ctx, options && options->frame_path && options->out_path,
                "null pointer argument") != COW_OK) {
        return COW_ERROR_INVALID_ARGUMENT;
    }
    return guarded(ctx, [&] {
        cowlink::CorrelateOptions cpp;
        cpp.frame_path = options->frame_path;
        cpp.out_path = options->out_path;
        if (options->columns) cpp.columns = options->columns;
        deliver(cowlink::run_correlate(cpp), output, diagnostics);
        return COW_OK;
    });
}

}  // extern "C"
