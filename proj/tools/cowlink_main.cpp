#include <cstdio>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "cowlink.h"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitRuntime = 1;
constexpr int kExitUsage = 2;

const char* c_str_or_null(const std::string& s) { return s.empty() ? nullptr : s.c_str(); }

template <typename Options, typename Fn>
int run_command(const char* name, Fn fn, const Options& options) {
    cow_ctx* ctx = cow_ctx_new();
    if (ctx == nullptr) {
        std::fprintf(stderr, "cowlink: failed to allocate context\n");
        return kExitRuntime;
    }
    char* output = nullptr;
    char* diagnostics = nullptr;
    const cow_status status = fn(ctx, &options, &output, &diagnostics);
    if (diagnostics != nullptr && *diagnostics != '\0') std::fputs(diagnostics, stderr);
    int code = kExitOk;
    if (status != COW_OK) {
        std::fprintf(stderr, "cowlink %s: error: %s\n", name, cow_last_error(ctx));
        code = kExitRuntime;
    } else if (output != nullptr && *output != '\0') {
        std::fputs(output, stdout);
    }
    cow_string_free(output);
    cow_string_free(diagnostics);
    cow_ctx_free(ctx);
    return code;
}

std::vector<const char*> as_c_strings(const std::vector<std::string>& items) {
    std::vector<const char*> pointers;
    pointers.reserve(items.size());
    for (const auto& item : items) pointers.push_back(item.c_str());
    return pointers;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{
        "Quantum-link toolkit: synthetic telemetry, feature preparation, physics "
        "fits, and neural secret-key-rate prediction."};
    app.set_version_flag("--version", cow_version());
    app.set_help_all_flag("--help-all", "Print the full reference for every subcommand");
    app.require_subcommand(1);

    // synth
    std::string synth_scenario;
    std::string synth_out = "data";
    long long synth_seed = 0;
    auto* synth = app.add_subcommand(
        "synth", "Generate synthetic per-link telemetry from a scenario file");
    synth->add_option("--scenario", synth_scenario,
                      "Scenario file (omit for the built-in five-link scenario)")
        ->check(CLI::ExistingFile);
    synth->add_option("--out", synth_out, "Output directory")->capture_default_str();
    auto* synth_seed_opt =
        synth->add_option("--seed", synth_seed, "Override the noise seed of every link");

    // prep
    std::string prep_in;
    std::string prep_out;
    std::string prep_window = "10m";
    std::string prep_lags = "1,2,3";
    double prep_link_loss = 0.0;
    auto* prep = app.add_subcommand(
        "prep", "Clean, average, align, and lag raw link telemetry into a feature frame");
    prep->add_option("--in", prep_in, "Directory holding the raw per-series CSV files")
        ->required()
        ->check(CLI::ExistingDirectory);
    prep->add_option("--out", prep_out, "Feature frame CSV to write")->required();
    prep->add_option("--window", prep_window, "Averaging window (e.g. 600, 10m, 2h)")
        ->capture_default_str();
    prep->add_option("--lags", prep_lags,
                     "Comma-separated secret-key-rate lag steps, or 'none'")
        ->capture_default_str();
    auto* prep_loss_opt = prep->add_option(
        "--link-loss", prep_link_loss,
        "Link loss column value in dB (default: read link_info.txt in the directory)");

    // fit
    std::string fit_frame;
    std::string fit_out;
    std::string fit_free = "alpha";
    double fit_mu = 0.0;
    double fit_distance = 0.0;
    bool fit_model_qber = false;
    auto* fit = app.add_subcommand(
        "fit", "Fit channel parameters to the secret key rates in a feature frame");
    fit->add_option("--frame", fit_frame, "Feature frame CSV")
        ->required()
        ->check(CLI::ExistingFile);
    fit->add_option("--out", fit_out, "Fit report JSON to write")->required();
    fit->add_option("--free", fit_free, "Comma-separated free parameters")
        ->capture_default_str();
    auto* fit_mu_opt = fit->add_option(
        "--mu", fit_mu, "Mean photon number (default: mean laserpower column)");
    auto* fit_distance_opt = fit->add_option(
        "--distance", fit_distance, "Link distance in km (default: link_loss column)");
    fit->add_flag("--model-qber", fit_model_qber,
                  "Derive the error rate from visibility instead of the qber column");

    // train
    std::vector<std::string> train_frames;
    std::string train_out;
    std::string train_features = "qber,visibility,history";
    int train_history_lags = 3;
    int train_epochs = 50;
    int train_batch = 8;
    long long train_seed = 42;
    auto* train = app.add_subcommand(
        "train", "Train the neural secret-key-rate predictor on feature frames");
    train->add_option("--frame", train_frames, "Feature frame CSV (repeatable)")
        ->required()
        ->check(CLI::ExistingFile);
    train->add_option("--out", train_out, "Model file to write")->required();
    train->add_option("--features", train_features, "Comma-separated feature branches")
        ->capture_default_str();
    train->add_option("--history-lags", train_history_lags,
                      "Lagged secret-key-rate inputs used by the history branch")
        ->capture_default_str()
        ->check(CLI::PositiveNumber);
    train->add_option("--epochs", train_epochs, "Maximum training epochs")
        ->capture_default_str()
        ->check(CLI::PositiveNumber);
    train->add_option("--batch-size", train_batch, "Minibatch size")
        ->capture_default_str()
        ->check(CLI::PositiveNumber);
    auto* train_seed_opt =
        train->add_option("--seed", train_seed, "Weight and shuffle seed");
    train_seed_opt->capture_default_str();

    // predict
    std::string predict_model;
    std::string predict_frame;
    std::string predict_out;
    std::vector<double> predict_losses;
    auto* predict = app.add_subcommand(
        "predict", "Predict secret key rates for a feature frame with a trained model");
    predict->add_option("--model", predict_model, "Trained model file")
        ->required()
        ->check(CLI::ExistingFile);
    predict->add_option("--frame", predict_frame, "Feature frame CSV")
        ->required()
        ->check(CLI::ExistingFile);
    predict->add_option("--out", predict_out, "Prediction CSV to write")->required();
    predict->add_option("--link-loss", predict_losses,
                        "Override the link_loss input; repeat to sweep several values");

    // evaluate
    std::string evaluate_model;
    std::vector<std::string> evaluate_frames;
    std::string evaluate_out;
    auto* evaluate = app.add_subcommand(
        "evaluate", "Report prediction error metrics for one or more frames");
    evaluate->add_option("--model", evaluate_model, "Trained model file")
        ->required()
        ->check(CLI::ExistingFile);
    evaluate->add_option("--frame", evaluate_frames, "Feature frame CSV (repeatable)")
        ->required()
        ->check(CLI::ExistingFile);
    evaluate->add_option("--out", evaluate_out, "Metrics CSV to write")->required();

    // correlate
    std::string correlate_frame;
    std::string correlate_out;
    std::string correlate_columns;
    auto* correlate = app.add_subcommand(
        "correlate", "Write a Pearson correlation matrix for frame columns");
    correlate->add_option("--frame", correlate_frame, "Feature frame CSV")
        ->required()
        ->check(CLI::ExistingFile);
    correlate->add_option("--out", correlate_out, "Correlation matrix CSV to write")
        ->required();
    correlate->add_option("--columns", correlate_columns,
                          "Comma-separated columns (default: every column)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitUsage;
    }

    if (*synth) {
        cow_synth_options options = {};
        options.scenario_path = c_str_or_null(synth_scenario);
        options.out_dir = synth_out.c_str();
        options.seed = synth_seed;
        options.seed_set = synth_seed_opt->count() > 0 ? 1 : 0;
        return run_command("synth", cow_run_synth, options);
    }
    if (*prep) {
        cow_prep_options options = {};
        options.in_dir = prep_in.c_str();
        options.out_path = prep_out.c_str();
        options.window = prep_window.c_str();
        options.lags = prep_lags.c_str();
        options.link_loss = prep_link_loss;
        options.link_loss_set = prep_loss_opt->count() > 0 ? 1 : 0;
        return run_command("prep", cow_run_prep, options);
    }
    if (*fit) {
        cow_fit_options options = {};
        options.frame_path = fit_frame.c_str();
        options.out_path = fit_out.c_str();
        options.free_params = fit_free.c_str();
        options.mu = fit_mu;
        options.mu_set = fit_mu_opt->count() > 0 ? 1 : 0;
        options.distance_km = fit_distance;
        options.distance_set = fit_distance_opt->count() > 0 ? 1 : 0;
        options.use_model_qber = fit_model_qber ? 1 : 0;
        return run_command("fit", cow_run_fit, options);
    }
    if (*train) {
        const auto frames = as_c_strings(train_frames);
        cow_train_options options = {};
        options.frame_paths = frames.data();
        options.n_frames = frames.size();
        options.out_model = train_out.c_str();
        options.features = train_features.c_str();
        options.history_lags = train_history_lags;
        options.epochs = train_epochs;
        options.batch_size = train_batch;
        options.seed = train_seed;
        options.seed_set = 1;
        return run_command("train", cow_run_train, options);
    }
    if (*predict) {
        cow_predict_options options = {};
        options.model_path = predict_model.c_str();
        options.frame_path = predict_frame.c_str();
        options.out_path = predict_out.c_str();
        options.link_loss_overrides = predict_losses.empty() ? nullptr : predict_losses.data();
        options.n_overrides = predict_losses.size();
        return run_command("predict", cow_run_predict, options);
    }
    if (*evaluate) {
        const auto frames = as_c_strings(evaluate_frames);
        cow_evaluate_options options = {};
        options.model_path = evaluate_model.c_str();
        options.frame_paths = frames.data();
        options.n_frames = frames.size();
        options.out_path = evaluate_out.c_str();
        return run_command("evaluate", cow_run_evaluate, options);
    }
    if (*correlate) {
        cow_correlate_options options = {};
        options.frame_path = correlate_frame.c_str();
        options.out_path = correlate_out.c_str();
        options.columns = c_str_or_null(correlate_columns);
        return run_command("correlate", cow_run_correlate, options);
    }

    std::fprintf(stderr, "%s", app.help().c_str());
    return kExitUsage;
}
