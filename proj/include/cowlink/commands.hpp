#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace cowlink {

// Outcome of one orchestrated command. `output` belongs on standard output,
// `diagnostics` on standard error; hard failures are thrown as exceptions.
struct CommandResult {
    int exit_code = 0;
    std::string output;
    std::string diagnostics;
};

struct SynthOptions {
    std::string scenario_path;  // empty = built-in five-link chain
    std::string out_dir = "data";
    std::uint64_t seed = 0;
    bool seed_set = false;  // when true, overrides every link's noise seed
};
CommandResult run_synth(const SynthOptions& options);

struct PrepOptions {
    std::string in_dir;    // directory of <series>.csv files
    std::string out_path;  // feature-frame CSV
    std::string window = "10m";
    std::string lags = "1,2,3";  // skr history lags; "none" disables
    double link_loss = 0.0;
    bool link_loss_set = false;  // else taken from link_info.txt when present
};
CommandResult run_prep(const PrepOptions& options);

struct FitOptions {
    std::string frame_path;
    std::string out_path;               // JSON report; residual CSV beside it
    std::string free_params = "alpha";  // comma list of alpha,eta,t_B
    double mu = 0.0;
    bool mu_set = false;  // else the frame's mean laserpower when present
    double distance_km = 0.0;
    bool distance_set = false;  // else the frame's link_loss distance proxy
    bool use_model_qber = false;
};
CommandResult run_fit(const FitOptions& options);

struct TrainOptions {
    std::vector<std::string> frame_paths;
    std::string out_model;
    std::string features = "qber,visibility,history";
    int history_lags = 3;
    int epochs = 50;
    int batch_size = 8;
    std::uint64_t seed = 42;
};
CommandResult run_train(const TrainOptions& options);

struct PredictOptions {
    std::string model_path;
    std::string frame_path;
    std::string out_path;  // series CSV; link-loss sweeps suffix the name
    std::vector<double> link_loss_overrides;
};
CommandResult run_predict(const PredictOptions& options);

struct EvaluateOptions {
    std::string model_path;
    std::vector<std::string> frame_paths;
    std::string out_path;  // one metrics row per frame
};
CommandResult run_evaluate(const EvaluateOptions& options);

struct CorrelateOptions {
    std::string frame_path;
    std::string out_path;  // correlation matrix CSV
    std::string columns;   // comma list; empty = every frame column
};
CommandResult run_correlate(const CorrelateOptions& options);

}  // namespace cowlink
