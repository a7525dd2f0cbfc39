#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "cowlink/feature_frame.hpp"
#include "cowlink/metrics.hpp"
#include "cowlink/time_series.hpp"

namespace cowlink {

// One input branch: the frame columns it consumes (width = column count).
struct BranchSpec {
    std::string name;
    std::vector<std::string> columns;
};

struct MlpTopology {
    std::vector<BranchSpec> branches;
    std::vector<int> branch_hidden = {64, 16};
    std::vector<int> trunk_hidden = {64, 128, 32, 8};

    // Builds branches for a feature subset of {qber, visibility, link_loss,
    // history, laserpower}, always in that canonical order; "history" maps to
    // the skr_lag1..skr_lag<n> columns.
    static MlpTopology standard(const std::vector<std::string>& features, int history_lags = 3);
    void validate() const;  // throws std::invalid_argument
    std::vector<std::string> input_columns() const;
};

// Dense layer, weights row-major [out x in]. Doubles throughout.
struct Layer {
    int in = 0;
    int out = 0;
    std::vector<double> w;
    std::vector<double> b;
};

struct MlpModel {
    MlpTopology topology;
    std::vector<std::vector<Layer>> branch_layers;  // rectifier activations
    std::vector<Layer> trunk_layers;  // rectifier hidden stack + linear output
    MinMaxScaler input_scaler;        // per input column, fitted on the train split
    MinMaxScaler target_scaler;       // the skr column
    std::vector<double> train_history, val_history;  // per-epoch MSE (scaled)
    int best_epoch = 0;                              // 1-based; 0 = untrained
};

// Uniform weights on +-sqrt(6 / (fan_in + fan_out)), zero biases;
// deterministic per seed.
MlpModel init_model(const MlpTopology& topology, std::uint64_t seed);

// Scaled branch inputs -> scaled prediction. Pure.
double forward(const MlpModel& model, const std::vector<std::vector<double>>& branch_inputs);

// Gradient buffers mirror the layer shapes.
struct GradientBuffers {
    std::vector<std::vector<Layer>> branch;
    std::vector<Layer> trunk;
};
GradientBuffers zero_gradients(const MlpModel& model);

// Mean-squared loss over the batch plus exact backpropagation gradients
// (accumulated into `grads`, which must start zeroed). Returns the loss.
double batch_gradient(const MlpModel& model,
                      const std::vector<std::vector<std::vector<double>>>& batch_inputs,
                      const std::vector<double>& batch_targets, GradientBuffers& grads);

struct TrainConfig {
    int epochs = 50;
    int batch_size = 8;
    double initial_lr = 0.001;
    double lr_decay = 0.99;       // multiplicative, applied after decay_after_epoch
    int decay_after_epoch = 15;
    int early_stop_patience = 15; // epochs without validation improvement
    double train_fraction = 0.8;  // chronological split
    std::uint64_t seed = 42;
};

// 0.001 up to epoch 15, then x0.99 each epoch (epochs are 1-based).
double learning_rate(const TrainConfig& cfg, int epoch);

struct TrainReport {
    std::vector<double> train_loss, val_loss;  // scaled MSE per completed epoch
    int best_epoch = 0;    // epoch whose weights the model carries
    int stopped_epoch = 0; // last epoch actually run
};

// Fits scalers on the chronological train split, runs Adam (0.9 / 0.999 /
// 1e-8) over seed-shuffled mini-batches with the learning-rate schedule and
// early stopping, and leaves the best-validation weights in the model.
// The frame must hold raw (unscaled) values including an skr column.
TrainReport train(MlpModel& model, const FeatureFrame& frame, const TrainConfig& cfg);

// Multi-link variant: each frame contributes its chronological first 80%
// (train_fraction) to training and its tail to validation; scalers see the
// union of the training parts.
TrainReport train(MlpModel& model, const std::vector<FeatureFrame>& frames,
                  const TrainConfig& cfg);

// Predictions in scaled units, one per frame row.
std::vector<double> predict_scaled(const MlpModel& model, const FeatureFrame& frame);

// Predictions in bits/s on the frame's timestamps.
TimeSeries predict_frame(const MlpModel& model, const FeatureFrame& frame);

// Metrics of the model against the frame's measured skr column.
ErrorReport evaluate_frame(const MlpModel& model, const FeatureFrame& frame);

// Self-describing binary container; see docs/model-file-format.md.
void save_model(const MlpModel& model, const std::string& path);
MlpModel load_model(const std::string& path);

}  // namespace cowlink
