#include "cowlink/mlp.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <stdexcept>

#include "cowlink/error.hpp"
#include "cowlink/rng.hpp"

namespace cowlink {

static_assert(std::endian::native == std::endian::little,
              "model files are little-endian; big-endian hosts are unsupported");

namespace {

const char* const kKnownFeatures[] = {"qber", "visibility", "link_loss", "history", "laserpower"};

}  // namespace

MlpTopology MlpTopology::standard(const std::vector<std::string>& features, int history_lags) {
    if (history_lags < 1) {
        throw std::invalid_argument("history_lags must be at least 1");
    }
    for (const auto& f : features) {
        bool known = false;
        for (const char* k : kKnownFeatures) {
            if (f == k) known = true;
        }
        if (!known) {
            throw std::invalid_argument("unknown feature '" + f + "'");
        }
        if (std::count(features.begin(), features.end(), f) != 1) {
            throw std::invalid_argument("duplicate feature '" + f + "'");
        }
    }
    MlpTopology topo;
    for (const char* k : kKnownFeatures) {  // canonical order, not caller order
        if (std::find(features.begin(), features.end(), k) == features.end()) continue;
        BranchSpec spec;
        spec.name = k;
        if (spec.name == "history") {
            for (int lag = 1; lag <= history_lags; ++lag) {
                spec.columns.push_back("skr_lag" + std::to_string(lag));
            }
        } else {
            spec.columns.push_back(spec.name);
        }
        topo.branches.push_back(std::move(spec));
    }
    topo.validate();
    return topo;
}

void MlpTopology::validate() const {
    if (branches.empty()) {
        throw std::invalid_argument("topology needs at least one branch");
    }
    for (const auto& b : branches) {
        if (b.name.empty()) throw std::invalid_argument("branch name must not be empty");
        if (b.columns.empty()) {
            throw std::invalid_argument("branch '" + b.name + "' has no input columns");
        }
    }
    if (branch_hidden.empty() || trunk_hidden.empty()) {
        throw std::invalid_argument("branch and trunk hidden stacks must not be empty");
    }
    for (int w : branch_hidden) {
        if (w < 1) throw std::invalid_argument("branch hidden widths must be positive");
    }
    for (int w : trunk_hidden) {
        if (w < 1) throw std::invalid_argument("trunk hidden widths must be positive");
    }
}

std::vector<std::string> MlpTopology::input_columns() const {
    std::vector<std::string> cols;
    for (const auto& b : branches) {
        cols.insert(cols.end(), b.columns.begin(), b.columns.end());
    }
    return cols;
}

namespace {

Layer glorot_layer(int in, int out, Rng& rng) {
    Layer layer;
    layer.in = in;
    layer.out = out;
    layer.w.resize(static_cast<std::size_t>(in) * out);
    layer.b.assign(static_cast<std::size_t>(out), 0.0);
    const double limit = std::sqrt(6.0 / (in + out));
    for (auto& w : layer.w) w = rng.uniform(-limit, limit);
    return layer;
}

Layer zero_layer(int in, int out) {
    Layer layer;
    layer.in = in;
    layer.out = out;
    layer.w.assign(static_cast<std::size_t>(in) * out, 0.0);
    layer.b.assign(static_cast<std::size_t>(out), 0.0);
    return layer;
}

void affine(const Layer& layer, const double* in, double* z) {
    for (int o = 0; o < layer.out; ++o) {
        double s = layer.b[static_cast<std::size_t>(o)];
        const double* row = layer.w.data() + static_cast<std::size_t>(o) * layer.in;
        for (int i = 0; i < layer.in; ++i) s += row[i] * in[i];
        z[o] = s;
    }
}

double relu(double x) { return x > 0.0 ? x : 0.0; }

// Activations kept per layer for backpropagation.
struct ForwardCache {
    std::vector<std::vector<std::vector<double>>> branch_z, branch_a;
    std::vector<double> concat;
    std::vector<std::vector<double>> trunk_z, trunk_a;  // hidden layers only
    double output = 0.0;
};

double run_forward(const MlpModel& model, const std::vector<std::vector<double>>& branch_inputs,
                   ForwardCache* cache) {
    const auto& branches = model.branch_layers;
    if (branch_inputs.size() != branches.size()) {
        throw std::invalid_argument("branch input count does not match topology");
    }
    if (cache) {
        cache->branch_z.assign(branches.size(), {});
        cache->branch_a.assign(branches.size(), {});
    }
    std::vector<double> concat;
    std::vector<double> a, z;
    for (std::size_t k = 0; k < branches.size(); ++k) {
        const auto& stack = branches[k];
        if (static_cast<int>(branch_inputs[k].size()) != stack.front().in) {
            throw std::invalid_argument("branch input width does not match topology");
        }
        a = branch_inputs[k];
        for (const Layer& layer : stack) {
            z.assign(static_cast<std::size_t>(layer.out), 0.0);
            affine(layer, a.data(), z.data());
            if (cache) cache->branch_z[k].push_back(z);
            for (auto& v : z) v = relu(v);
            if (cache) cache->branch_a[k].push_back(z);
            a = z;
        }
        concat.insert(concat.end(), a.begin(), a.end());
    }
    if (cache) cache->concat = concat;

    if (cache) {
        cache->trunk_z.clear();
        cache->trunk_a.clear();
    }
    a = concat;
    const auto& trunk = model.trunk_layers;
    for (std::size_t l = 0; l + 1 < trunk.size(); ++l) {
        z.assign(static_cast<std::size_t>(trunk[l].out), 0.0);
        affine(trunk[l], a.data(), z.data());
        if (cache) cache->trunk_z.push_back(z);
        for (auto& v : z) v = relu(v);
        if (cache) cache->trunk_a.push_back(z);
        a = z;
    }
    double out = 0.0;
    affine(trunk.back(), a.data(), &out);
    if (cache) cache->output = out;
    return out;
}

void accumulate(Layer& grad, const std::vector<double>& delta, const double* a_prev) {
    for (int o = 0; o < grad.out; ++o) {
        const double d = delta[static_cast<std::size_t>(o)];
        double* row = grad.w.data() + static_cast<std::size_t>(o) * grad.in;
        for (int i = 0; i < grad.in; ++i) row[i] += d * a_prev[i];
        grad.b[static_cast<std::size_t>(o)] += d;
    }
}

std::vector<double> back_through(const Layer& layer, const std::vector<double>& delta) {
    std::vector<double> prev(static_cast<std::size_t>(layer.in), 0.0);
    for (int o = 0; o < layer.out; ++o) {
        const double d = delta[static_cast<std::size_t>(o)];
        const double* row = layer.w.data() + static_cast<std::size_t>(o) * layer.in;
        for (int i = 0; i < layer.in; ++i) prev[static_cast<std::size_t>(i)] += d * row[i];
    }
    return prev;
}

void backward_sample(const MlpModel& model, const std::vector<std::vector<double>>& branch_inputs,
                     const ForwardCache& cache, double dloss_dout, GradientBuffers& grads) {
    const auto& trunk = model.trunk_layers;
    const std::size_t hidden = trunk.size() - 1;

    std::vector<double> delta(1, dloss_dout);
    const double* a_prev = hidden > 0 ? cache.trunk_a.back().data() : cache.concat.data();
    accumulate(grads.trunk.back(), delta, a_prev);
    delta = back_through(trunk.back(), delta);

    for (std::size_t l = hidden; l-- > 0;) {
        const auto& zs = cache.trunk_z[l];
        for (std::size_t i = 0; i < delta.size(); ++i) {
            if (zs[i] <= 0.0) delta[i] = 0.0;
        }
        a_prev = l > 0 ? cache.trunk_a[l - 1].data() : cache.concat.data();
        accumulate(grads.trunk[l], delta, a_prev);
        delta = back_through(trunk[l], delta);
    }

    std::size_t offset = 0;
    for (std::size_t k = 0; k < model.branch_layers.size(); ++k) {
        const auto& stack = model.branch_layers[k];
        const std::size_t width = static_cast<std::size_t>(stack.back().out);
        std::vector<double> d(delta.begin() + offset, delta.begin() + offset + width);
        offset += width;
        for (std::size_t l = stack.size(); l-- > 0;) {
            const auto& zs = cache.branch_z[k][l];
            for (std::size_t i = 0; i < d.size(); ++i) {
                if (zs[i] <= 0.0) d[i] = 0.0;
            }
            a_prev = l > 0 ? cache.branch_a[k][l - 1].data() : branch_inputs[k].data();
            accumulate(grads.branch[k][l], d, a_prev);
            if (l > 0) d = back_through(stack[l], d);
        }
    }
}

}  // namespace

MlpModel init_model(const MlpTopology& topology, std::uint64_t seed) {
    topology.validate();
    MlpModel model;
    model.topology = topology;
    Rng rng(mix_seed(seed, 0));
    for (const auto& branch : topology.branches) {
        std::vector<Layer> stack;
        int in = static_cast<int>(branch.columns.size());
        for (int width : topology.branch_hidden) {
            stack.push_back(glorot_layer(in, width, rng));
            in = width;
        }
        model.branch_layers.push_back(std::move(stack));
    }
    int in = topology.branch_hidden.back() * static_cast<int>(topology.branches.size());
    for (int width : topology.trunk_hidden) {
        model.trunk_layers.push_back(glorot_layer(in, width, rng));
        in = width;
    }
    model.trunk_layers.push_back(glorot_layer(in, 1, rng));
    return model;
}

double forward(const MlpModel& model, const std::vector<std::vector<double>>& branch_inputs) {
    return run_forward(model, branch_inputs, nullptr);
}

GradientBuffers zero_gradients(const MlpModel& model) {
    GradientBuffers grads;
    for (const auto& stack : model.branch_layers) {
        std::vector<Layer> g;
        for (const Layer& layer : stack) g.push_back(zero_layer(layer.in, layer.out));
        grads.branch.push_back(std::move(g));
    }
    for (const Layer& layer : model.trunk_layers) {
        grads.trunk.push_back(zero_layer(layer.in, layer.out));
    }
    return grads;
}

double batch_gradient(const MlpModel& model,
                      const std::vector<std::vector<std::vector<double>>>& batch_inputs,
                      const std::vector<double>& batch_targets, GradientBuffers& grads) {
    if (batch_inputs.empty() || batch_inputs.size() != batch_targets.size()) {
        throw std::invalid_argument("batch inputs and targets must be non-empty and equal-sized");
    }
    const double inv_n = 1.0 / static_cast<double>(batch_inputs.size());
    double loss = 0.0;
    ForwardCache cache;
    for (std::size_t s = 0; s < batch_inputs.size(); ++s) {
        const double pred = run_forward(model, batch_inputs[s], &cache);
        const double err = pred - batch_targets[s];
        loss += err * err * inv_n;
        backward_sample(model, batch_inputs[s], cache, 2.0 * err * inv_n, grads);
    }
    return loss;
}

double learning_rate(const TrainConfig& cfg, int epoch) {
    if (epoch <= cfg.decay_after_epoch) return cfg.initial_lr;
    return cfg.initial_lr * std::pow(cfg.lr_decay, epoch - cfg.decay_after_epoch);
}

namespace {

// Adam first/second moments, one pair per weight tensor.
struct AdamState {
    GradientBuffers m, v;
    long long step = 0;
};

void adam_update_layer(Layer& layer, const Layer& grad, Layer& m, Layer& v, double lr,
                       double bias1, double bias2) {
    constexpr double kBeta1 = 0.9, kBeta2 = 0.999, kEps = 1e-8;
    for (std::size_t i = 0; i < layer.w.size(); ++i) {
        m.w[i] = kBeta1 * m.w[i] + (1.0 - kBeta1) * grad.w[i];
        v.w[i] = kBeta2 * v.w[i] + (1.0 - kBeta2) * grad.w[i] * grad.w[i];
        layer.w[i] -= lr * (m.w[i] / bias1) / (std::sqrt(v.w[i] / bias2) + kEps);
    }
    for (std::size_t i = 0; i < layer.b.size(); ++i) {
        m.b[i] = kBeta1 * m.b[i] + (1.0 - kBeta1) * grad.b[i];
        v.b[i] = kBeta2 * v.b[i] + (1.0 - kBeta2) * grad.b[i] * grad.b[i];
        layer.b[i] -= lr * (m.b[i] / bias1) / (std::sqrt(v.b[i] / bias2) + kEps);
    }
}

void adam_step(MlpModel& model, const GradientBuffers& grads, AdamState& state, double lr) {
    ++state.step;
    const double bias1 = 1.0 - std::pow(0.9, static_cast<double>(state.step));
    const double bias2 = 1.0 - std::pow(0.999, static_cast<double>(state.step));
    for (std::size_t k = 0; k < model.branch_layers.size(); ++k) {
        for (std::size_t l = 0; l < model.branch_layers[k].size(); ++l) {
            adam_update_layer(model.branch_layers[k][l], grads.branch[k][l], state.m.branch[k][l],
                              state.v.branch[k][l], lr, bias1, bias2);
        }
    }
    for (std::size_t l = 0; l < model.trunk_layers.size(); ++l) {
        adam_update_layer(model.trunk_layers[l], grads.trunk[l], state.m.trunk[l],
                          state.v.trunk[l], lr, bias1, bias2);
    }
}

void zero_buffers(GradientBuffers& grads) {
    for (auto& stack : grads.branch) {
        for (auto& layer : stack) {
            std::fill(layer.w.begin(), layer.w.end(), 0.0);
            std::fill(layer.b.begin(), layer.b.end(), 0.0);
        }
    }
    for (auto& layer : grads.trunk) {
        std::fill(layer.w.begin(), layer.w.end(), 0.0);
        std::fill(layer.b.begin(), layer.b.end(), 0.0);
    }
}

struct Weights {
    std::vector<std::vector<Layer>> branch;
    std::vector<Layer> trunk;
};

Weights snapshot(const MlpModel& model) { return {model.branch_layers, model.trunk_layers}; }

void restore(MlpModel& model, const Weights& w) {
    model.branch_layers = w.branch;
    model.trunk_layers = w.trunk;
}

double mean_squared_loss(const MlpModel& model,
                         const std::vector<std::vector<std::vector<double>>>& inputs,
                         const std::vector<double>& targets, std::size_t begin, std::size_t end) {
    double loss = 0.0;
    for (std::size_t s = begin; s < end; ++s) {
        const double err = run_forward(model, inputs[s], nullptr) - targets[s];
        loss += err * err;
    }
    return loss / static_cast<double>(end - begin);
}

}  // namespace

TrainReport train(MlpModel& model, const FeatureFrame& frame, const TrainConfig& cfg) {
    return train(model, std::vector<FeatureFrame>{frame}, cfg);
}

TrainReport train(MlpModel& model, const std::vector<FeatureFrame>& frames,
                  const TrainConfig& cfg) {
    model.topology.validate();
    if (frames.empty()) throw std::invalid_argument("need at least one frame to train on");
    if (cfg.epochs < 1) throw std::invalid_argument("epochs must be positive");
    if (cfg.batch_size < 1) throw std::invalid_argument("batch_size must be positive");
    if (!(cfg.train_fraction > 0.0 && cfg.train_fraction < 1.0)) {
        throw std::invalid_argument("train_fraction must lie in (0, 1)");
    }
    if (cfg.early_stop_patience < 1) throw std::invalid_argument("patience must be positive");
    const auto input_cols = model.topology.input_columns();
    std::size_t rows = 0, n_train = 0;
    std::vector<std::size_t> split(frames.size());
    for (std::size_t f = 0; f < frames.size(); ++f) {
        if (!frames[f].has_column("skr")) throw std::invalid_argument("frame has no skr column");
        for (const auto& col : input_cols) {
            if (!frames[f].has_column(col)) {
                throw std::invalid_argument("frame has no column '" + col + "'");
            }
        }
        const std::size_t n = frames[f].rows();
        split[f] = static_cast<std::size_t>(static_cast<double>(n) * cfg.train_fraction);
        if (split[f] < 1 || split[f] >= n) {
            throw std::invalid_argument("train split leaves an empty train or validation set");
        }
        rows += n;
        n_train += split[f];
    }
    if (rows < 2 * static_cast<std::size_t>(cfg.batch_size)) {
        throw std::invalid_argument("need at least 2 x batch_size rows to train");
    }

    // Scalers see only the chronological training parts.
    FeatureFrame scaler_frame;
    for (std::size_t f = 0; f < frames.size(); ++f) {
        scaler_frame.timestamps.insert(scaler_frame.timestamps.end(),
                                       frames[f].timestamps.begin(),
                                       frames[f].timestamps.begin() + split[f]);
    }
    std::vector<std::string> scaler_cols = input_cols;
    if (std::find(scaler_cols.begin(), scaler_cols.end(), "skr") == scaler_cols.end()) {
        scaler_cols.push_back("skr");
    }
    for (const auto& col : scaler_cols) {
        std::vector<double> values;
        values.reserve(n_train);
        for (std::size_t f = 0; f < frames.size(); ++f) {
            const auto& src = frames[f].column(col);
            values.insert(values.end(), src.begin(), src.begin() + split[f]);
        }
        scaler_frame.add_column(col, std::move(values));
    }
    model.input_scaler = MinMaxScaler();
    model.input_scaler.fit(scaler_frame, input_cols);
    model.target_scaler = MinMaxScaler();
    model.target_scaler.fit(scaler_frame, {"skr"});

    // Training rows first (frame order), then every validation tail.
    std::vector<std::vector<std::vector<double>>> inputs;
    std::vector<double> targets;
    inputs.reserve(rows);
    targets.reserve(rows);
    auto push_row = [&](const FeatureFrame& frame, std::size_t r) {
        std::vector<std::vector<double>> sample;
        for (const auto& branch : model.topology.branches) {
            std::vector<double> values;
            values.reserve(branch.columns.size());
            for (const auto& col : branch.columns) {
                values.push_back(model.input_scaler.transform_value(col, frame.column(col)[r]));
            }
            sample.push_back(std::move(values));
        }
        inputs.push_back(std::move(sample));
        targets.push_back(model.target_scaler.transform_value("skr", frame.column("skr")[r]));
    };
    for (std::size_t f = 0; f < frames.size(); ++f) {
        for (std::size_t r = 0; r < split[f]; ++r) push_row(frames[f], r);
    }
    for (std::size_t f = 0; f < frames.size(); ++f) {
        for (std::size_t r = split[f]; r < frames[f].rows(); ++r) push_row(frames[f], r);
    }

    GradientBuffers grads = zero_gradients(model);
    AdamState adam{zero_gradients(model), zero_gradients(model), 0};
    Rng shuffle_rng(mix_seed(cfg.seed, 1));
    std::vector<std::size_t> order(n_train);
    for (std::size_t i = 0; i < n_train; ++i) order[i] = i;

    TrainReport report;
    double best_val = std::numeric_limits<double>::infinity();
    Weights best = snapshot(model);
    int since_best = 0;

    std::vector<std::vector<std::vector<double>>> batch_inputs;
    std::vector<double> batch_targets;
    for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
        const double lr = learning_rate(cfg, epoch);
        shuffle_rng.shuffle(order);
        for (std::size_t start = 0; start < n_train; start += cfg.batch_size) {
            const std::size_t stop = std::min(n_train, start + cfg.batch_size);
            batch_inputs.clear();
            batch_targets.clear();
            for (std::size_t i = start; i < stop; ++i) {
                batch_inputs.push_back(inputs[order[i]]);
                batch_targets.push_back(targets[order[i]]);
            }
            zero_buffers(grads);
            batch_gradient(model, batch_inputs, batch_targets, grads);
            adam_step(model, grads, adam, lr);
        }

        report.train_loss.push_back(mean_squared_loss(model, inputs, targets, 0, n_train));
        const double val = mean_squared_loss(model, inputs, targets, n_train, rows);
        report.val_loss.push_back(val);
        report.stopped_epoch = epoch;

        if (val < best_val) {
            best_val = val;
            best = snapshot(model);
            report.best_epoch = epoch;
            since_best = 0;
        } else {
            ++since_best;
            if (since_best >= cfg.early_stop_patience) break;
        }
    }

    restore(model, best);  // best validation weights always win
    model.train_history = report.train_loss;
    model.val_history = report.val_loss;
    model.best_epoch = report.best_epoch;
    return report;
}

std::vector<double> predict_scaled(const MlpModel& model, const FeatureFrame& frame) {
    const std::size_t rows = frame.rows();
    std::vector<const std::vector<double>*> cols;
    std::vector<std::string> names;
    for (const auto& branch : model.topology.branches) {
        for (const auto& col : branch.columns) {
            cols.push_back(&frame.column(col));
            names.push_back(col);
        }
    }
    std::vector<double> out(rows);
    std::vector<std::vector<double>> sample;
    for (std::size_t r = 0; r < rows; ++r) {
        sample.clear();
        std::size_t flat = 0;
        for (const auto& branch : model.topology.branches) {
            std::vector<double> values;
            values.reserve(branch.columns.size());
            for (std::size_t c = 0; c < branch.columns.size(); ++c, ++flat) {
                values.push_back(model.input_scaler.transform_value(names[flat], (*cols[flat])[r]));
            }
            sample.push_back(std::move(values));
        }
        out[r] = forward(model, sample);
    }
    return out;
}

TimeSeries predict_frame(const MlpModel& model, const FeatureFrame& frame) {
    const auto scaled = predict_scaled(model, frame);
    TimeSeries series;
    series.name = "skr_predicted";
    series.samples.reserve(scaled.size());
    for (std::size_t r = 0; r < scaled.size(); ++r) {
        series.samples.push_back(
            {frame.timestamps[r], model.target_scaler.inverse_value("skr", scaled[r])});
    }
    return series;
}

ErrorReport evaluate_frame(const MlpModel& model, const FeatureFrame& frame) {
    const auto predicted_scaled = predict_scaled(model, frame);
    const auto& measured_raw = frame.column("skr");
    std::vector<double> measured_scaled(measured_raw.size());
    std::vector<double> predicted_raw(predicted_scaled.size());
    for (std::size_t i = 0; i < measured_raw.size(); ++i) {
        measured_scaled[i] = model.target_scaler.transform_value("skr", measured_raw[i]);
        predicted_raw[i] = model.target_scaler.inverse_value("skr", predicted_scaled[i]);
    }
    return compute_metrics(measured_raw, predicted_raw, measured_scaled, predicted_scaled);
}

namespace {

constexpr char kMagic[8] = {'C', 'O', 'W', 'M', 'L', 'P', '0', '1'};
constexpr std::uint32_t kVersion = 1;

void write_u32(std::ostream& out, std::uint32_t v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof v);
}

void write_f64(std::ostream& out, double v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof v);
}

void write_string(std::ostream& out, const std::string& s) {
    write_u32(out, static_cast<std::uint32_t>(s.size()));
    out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

void write_layer(std::ostream& out, const Layer& layer) {
    write_u32(out, static_cast<std::uint32_t>(layer.in));
    write_u32(out, static_cast<std::uint32_t>(layer.out));
    for (double v : layer.w) write_f64(out, v);
    for (double v : layer.b) write_f64(out, v);
}

void write_scaler(std::ostream& out, const MinMaxScaler& scaler) {
    const auto& cols = scaler.columns();
    write_u32(out, static_cast<std::uint32_t>(cols.size()));
    for (const auto& col : cols) {
        write_string(out, col);
        write_f64(out, scaler.min_of(col));
        write_f64(out, scaler.max_of(col));
    }
}

struct ModelReader {
    std::ifstream in;
    std::string path;

    void fail(const std::string& why) const { throw io_error(path + ": " + why); }

    void read_raw(void* dst, std::size_t n) {
        in.read(static_cast<char*>(dst), static_cast<std::streamsize>(n));
        if (in.gcount() != static_cast<std::streamsize>(n)) fail("truncated model file");
    }

    std::uint32_t read_u32() {
        std::uint32_t v = 0;
        read_raw(&v, sizeof v);
        return v;
    }

    double read_f64() {
        double v = 0;
        read_raw(&v, sizeof v);
        return v;
    }

    std::string read_string() {
        const std::uint32_t n = read_u32();
        if (n > (1u << 20)) fail("implausible string length");
        std::string s(n, '\0');
        if (n) read_raw(s.data(), n);
        return s;
    }

    Layer read_layer() {
        Layer layer;
        layer.in = static_cast<int>(read_u32());
        layer.out = static_cast<int>(read_u32());
        if (layer.in < 1 || layer.out < 1 || layer.in > 100000 || layer.out > 100000) {
            fail("implausible layer shape");
        }
        layer.w.resize(static_cast<std::size_t>(layer.in) * layer.out);
        for (auto& v : layer.w) v = read_f64();
        layer.b.resize(static_cast<std::size_t>(layer.out));
        for (auto& v : layer.b) v = read_f64();
        return layer;
    }

    MinMaxScaler read_scaler() {
        const std::uint32_t n = read_u32();
        if (n > 100000) fail("implausible scaler size");
        std::vector<std::string> cols(n);
        std::vector<double> mins(n), maxs(n);
        for (std::uint32_t i = 0; i < n; ++i) {
            cols[i] = read_string();
            mins[i] = read_f64();
            maxs[i] = read_f64();
        }
        MinMaxScaler scaler;
        scaler.set_state(cols, mins, maxs);
        return scaler;
    }
};

}  // namespace

void save_model(const MlpModel& model, const std::string& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw io_error("cannot open '" + path + "' for writing");
    out.write(kMagic, sizeof kMagic);
    write_u32(out, kVersion);

    write_u32(out, static_cast<std::uint32_t>(model.topology.branches.size()));
    for (const auto& branch : model.topology.branches) {
        write_string(out, branch.name);
        write_u32(out, static_cast<std::uint32_t>(branch.columns.size()));
        for (const auto& col : branch.columns) write_string(out, col);
    }
    write_u32(out, static_cast<std::uint32_t>(model.topology.branch_hidden.size()));
    for (int w : model.topology.branch_hidden) write_u32(out, static_cast<std::uint32_t>(w));
    write_u32(out, static_cast<std::uint32_t>(model.topology.trunk_hidden.size()));
    for (int w : model.topology.trunk_hidden) write_u32(out, static_cast<std::uint32_t>(w));

    for (const auto& stack : model.branch_layers) {
        for (const Layer& layer : stack) write_layer(out, layer);
    }
    for (const Layer& layer : model.trunk_layers) write_layer(out, layer);

    write_scaler(out, model.input_scaler);
    write_scaler(out, model.target_scaler);

    write_u32(out, static_cast<std::uint32_t>(model.train_history.size()));
    for (double v : model.train_history) write_f64(out, v);
    write_u32(out, static_cast<std::uint32_t>(model.val_history.size()));
    for (double v : model.val_history) write_f64(out, v);
    write_u32(out, static_cast<std::uint32_t>(model.best_epoch));

    out.flush();
    if (!out) throw io_error("failed writing '" + path + "'");
}

MlpModel load_model(const std::string& path) {
    ModelReader reader{std::ifstream(path, std::ios::binary), path};
    if (!reader.in) throw io_error("cannot open '" + path + "'");

    char magic[8];
    reader.read_raw(magic, sizeof magic);
    if (std::memcmp(magic, kMagic, sizeof magic) != 0) reader.fail("not a model file");
    const std::uint32_t version = reader.read_u32();
    if (version != kVersion) {
        reader.fail("unsupported model version " + std::to_string(version));
    }

    MlpModel model;
    const std::uint32_t n_branches = reader.read_u32();
    if (n_branches < 1 || n_branches > 1000) reader.fail("implausible branch count");
    for (std::uint32_t k = 0; k < n_branches; ++k) {
        BranchSpec spec;
        spec.name = reader.read_string();
        const std::uint32_t n_cols = reader.read_u32();
        if (n_cols < 1 || n_cols > 100000) reader.fail("implausible column count");
        for (std::uint32_t c = 0; c < n_cols; ++c) spec.columns.push_back(reader.read_string());
        model.topology.branches.push_back(std::move(spec));
    }
    const std::uint32_t n_bh = reader.read_u32();
    if (n_bh < 1 || n_bh > 100) reader.fail("implausible branch depth");
    model.topology.branch_hidden.clear();
    for (std::uint32_t i = 0; i < n_bh; ++i) {
        model.topology.branch_hidden.push_back(static_cast<int>(reader.read_u32()));
    }
    const std::uint32_t n_th = reader.read_u32();
    if (n_th < 1 || n_th > 100) reader.fail("implausible trunk depth");
    model.topology.trunk_hidden.clear();
    for (std::uint32_t i = 0; i < n_th; ++i) {
        model.topology.trunk_hidden.push_back(static_cast<int>(reader.read_u32()));
    }
    model.topology.validate();

    for (std::uint32_t k = 0; k < n_branches; ++k) {
        std::vector<Layer> stack;
        for (std::uint32_t l = 0; l < n_bh; ++l) stack.push_back(reader.read_layer());
        model.branch_layers.push_back(std::move(stack));
    }
    for (std::uint32_t l = 0; l < n_th + 1; ++l) {
        model.trunk_layers.push_back(reader.read_layer());
    }
    for (std::uint32_t k = 0; k < n_branches; ++k) {
        const auto& stack = model.branch_layers[k];
        int width = static_cast<int>(model.topology.branches[k].columns.size());
        for (const Layer& layer : stack) {
            if (layer.in != width) reader.fail("branch layer shapes do not chain");
            width = layer.out;
        }
        if (width != model.topology.branch_hidden.back()) {
            reader.fail("branch output width does not match the topology");
        }
    }
    int width = static_cast<int>(n_branches) * model.topology.branch_hidden.back();
    for (const Layer& layer : model.trunk_layers) {
        if (layer.in != width) reader.fail("trunk layer shapes do not chain");
        width = layer.out;
    }
    if (width != 1) reader.fail("trunk must end in a single output");

    model.input_scaler = reader.read_scaler();
    model.target_scaler = reader.read_scaler();

    const std::uint32_t n_train_hist = reader.read_u32();
    if (n_train_hist > 1000000) reader.fail("implausible history length");
    for (std::uint32_t i = 0; i < n_train_hist; ++i) {
        model.train_history.push_back(reader.read_f64());
    }
    const std::uint32_t n_val_hist = reader.read_u32();
    if (n_val_hist > 1000000) reader.fail("implausible history length");
    for (std::uint32_t i = 0; i < n_val_hist; ++i) model.val_history.push_back(reader.read_f64());
    model.best_epoch = static_cast<int>(reader.read_u32());
    return model;
}

}  // namespace cowlink
