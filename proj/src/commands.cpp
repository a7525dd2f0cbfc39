#include "cowlink/commands.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <sstream>
#include <stdexcept>

#include "cowlink/cow_model.hpp"
#include "cowlink/curve_fit.hpp"
#include "cowlink/error.hpp"
#include "cowlink/feature_frame.hpp"
#include "cowlink/metrics.hpp"
#include "cowlink/mlp.hpp"
#include "cowlink/synth.hpp"
#include "cowlink/time_series.hpp"
#include "cowlink/timestamp.hpp"
#include "json.hpp"
#include "util.hpp"

namespace fs = std::filesystem;

namespace cowlink {

namespace {

std::vector<std::string> split_list(std::string_view text) {
    std::vector<std::string> parts;
    std::size_t start = 0;
    while (start <= text.size()) {
        const std::size_t comma = text.find(',', start);
        const std::size_t stop = comma == std::string_view::npos ? text.size() : comma;
        std::string part(text.substr(start, stop - start));
        if (!part.empty()) parts.push_back(std::move(part));
        if (comma == std::string_view::npos) break;
        start = comma + 1;
    }
    return parts;
}

std::vector<int> parse_lags(const std::string& text) {
    if (text == "none") return {};
    std::vector<int> lags;
    for (const auto& part : split_list(text)) {
        int value = 0;
        const auto [ptr, ec] = std::from_chars(part.data(), part.data() + part.size(), value);
        if (ec != std::errc() || ptr != part.data() + part.size() || value < 1) {
            throw std::invalid_argument("bad lag '" + part + "' (want positive integers or none)");
        }
        lags.push_back(value);
    }
    if (lags.empty()) throw std::invalid_argument("empty lag list (use 'none' to disable)");
    return lags;
}

std::string file_stem(const std::string& path) { return fs::path(path).stem().string(); }

std::string trimmed(std::string_view text) {
    const auto first = text.find_first_not_of(" \t\r");
    if (first == std::string_view::npos) return "";
    const auto last = text.find_last_not_of(" \t\r");
    return std::string(text.substr(first, last - first + 1));
}

// link_info.txt: one `key = value` per line.
bool read_link_info_loss(const fs::path& path, double* link_loss) {
    if (!fs::exists(path)) return false;
    const std::string text = read_file_text(path.string());
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        const auto eq = line.find('=');
        if (eq == std::string::npos) continue;
        if (trimmed(line.substr(0, eq)) != "link_loss") continue;
        const std::string value = trimmed(line.substr(eq + 1));
        char* end = nullptr;
        const double parsed = std::strtod(value.c_str(), &end);
        if (end == value.c_str() || !std::isfinite(parsed)) {
            throw parse_error(path.string(), 0, "bad link_loss value '" + value + "'");
        }
        *link_loss = parsed;
        return true;
    }
    return false;
}

FeatureFrame load_frame(const std::string& path) { return read_frame_csv(path); }

}  // namespace

CommandResult run_synth(const SynthOptions& options) {
    Scenario scenario =
        options.scenario_path.empty() ? default_scenario() : parse_scenario(options.scenario_path);
    if (options.seed_set) {
        for (auto& link : scenario.links) link.noise.seed = options.seed;
    }
    const auto summaries = generate_scenario(scenario, options.out_dir);
    CommandResult result;
    std::ostringstream out;
    for (const auto& link : summaries) {
        out << "link " << link.link_id << ": " << link.samples << " samples per series\n";
    }
    out << "wrote " << summaries.size() << " link directories under " << options.out_dir << "\n";
    result.output = out.str();
    return result;
}

CommandResult run_prep(const PrepOptions& options) {
    if (options.in_dir.empty()) throw std::invalid_argument("prep: no input directory");
    if (options.out_path.empty()) throw std::invalid_argument("prep: no output path");
    const fs::path dir(options.in_dir);
    if (!fs::is_directory(dir)) {
        throw io_error("prep: '" + options.in_dir + "' is not a directory");
    }
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(dir)) {
        if (entry.is_regular_file() && entry.path().extension() == ".csv") {
            files.push_back(entry.path());
        }
    }
    std::sort(files.begin(), files.end());
    if (files.empty()) throw io_error("prep: no .csv files in '" + options.in_dir + "'");

    const auto window = parse_duration_micros(options.window);
    if (!window) {
        throw std::invalid_argument("prep: bad window '" + options.window +
                                    "' (want e.g. 600, 10m, 2h)");
    }
    const std::vector<int> lags = options.lags == "none" ? std::vector<int>{}
                                                         : parse_lags(options.lags);

    CommandResult result;
    std::ostringstream out, diag;
    std::vector<TimeSeries> averaged;
    for (const auto& file : files) {
        const std::string name = file.stem().string();
        const TimeSeries raw = ingest_csv(file.string(), name);
        CleanReport report;
        const TimeSeries cleaned = clean(raw, cleaning_rules_for(name), &report);
        if (cleaned.samples.empty()) {
            throw io_error("prep: series '" + name + "' is empty after cleaning");
        }
        averaged.push_back(temporal_average(cleaned, *window));
        out << name << ": " << raw.samples.size() << " samples, dropped "
            << report.dropped_nonfinite << " non-finite and " << report.dropped_out_of_range
            << " out-of-range, " << averaged.back().samples.size() << " windows\n";
    }

    FeatureFrame frame = align(averaged);
    double link_loss = options.link_loss;
    bool have_loss = options.link_loss_set;
    if (!have_loss) have_loss = read_link_info_loss(dir / "link_info.txt", &link_loss);
    if (have_loss) {
        frame.add_column("link_loss", std::vector<double>(frame.rows(), link_loss));
    }
    if (!lags.empty()) {
        if (!frame.has_column("skr")) {
            throw std::invalid_argument("prep: lags requested but no skr series present");
        }
        frame = add_lags(frame, "skr", lags);
    }

    write_frame_csv(frame, options.out_path);
    out << "frame: " << frame.rows() << " rows x " << frame.names.size() << " columns -> "
        << options.out_path << "\n";
    result.output = out.str();
    result.diagnostics = diag.str();
    return result;
}

CommandResult run_fit(const FitOptions& options) {
    if (options.frame_path.empty()) throw std::invalid_argument("fit: no frame given");
    if (options.out_path.empty()) throw std::invalid_argument("fit: no output path");
    const FeatureFrame frame = load_frame(options.frame_path);

    CowParameters base;
    if (options.distance_set) {
        base.distance_km = options.distance_km;
    } else if (frame.has_column("link_loss")) {
        base.distance_km = frame.column("link_loss").front();
    } else {
        throw std::invalid_argument(
            "fit: no link distance (frame lacks a link_loss column; pass --distance)");
    }
    std::string mu_source;
    if (options.mu_set) {
        base.mean_photon_number = options.mu;
        mu_source = "flag";
    } else if (frame.has_column("laserpower")) {
        const auto& power = frame.column("laserpower");
        double sum = 0.0;
        for (double v : power) sum += v;
        base.mean_photon_number = sum / static_cast<double>(power.size());
        mu_source = "mean laserpower";
    } else {
        base = base.at_upper_bound();
        mu_source = "channel transmittance";
    }

    FitSpec spec;
    for (const auto& name : split_list(options.free_params)) {
        spec.free_params.push_back(fit_param_from_name(name));
    }
    if (spec.free_params.empty()) throw std::invalid_argument("fit: empty free-parameter list");
    spec.use_measured_qber = !options.use_model_qber;

    const FitResult fit_result = fit(frame, base, spec);

    nlohmann::json report;
    report["frame"] = options.frame_path;
    report["free"] = nlohmann::json::array();
    report["fitted"] = nlohmann::json::object();
    for (std::size_t i = 0; i < fit_result.free_params.size(); ++i) {
        const std::string name(fit_param_name(fit_result.free_params[i]));
        report["free"].push_back(name);
        report["fitted"][name] = fit_result.fitted[i];
    }
    report["residual_rms"] = fit_result.residual_rms;
    report["iterations"] = fit_result.iterations;
    report["converged"] = fit_result.converged;
    report["samples_used"] = fit_result.samples_used;
    report["distance_km"] = base.distance_km;
    report["mu"] = base.mean_photon_number;
    report["mu_source"] = mu_source;
    report["qber_source"] = spec.use_measured_qber ? "measured" : "model";
    write_text_file(options.out_path, report.dump(2) + "\n");

    const CowParameters fitted_params =
        apply_fit(base, fit_result.free_params, fit_result.fitted);
    const TimeSeries residuals =
        residual_series(frame, fitted_params, spec.use_measured_qber);
    std::string residual_path = options.out_path;
    if (residual_path.size() > 5 && residual_path.ends_with(".json")) {
        residual_path.resize(residual_path.size() - 5);
    }
    residual_path += ".residuals.csv";
    write_series_csv(residuals, residual_path);

    CommandResult result;
    std::ostringstream out;
    out << "fit over " << fit_result.samples_used << " samples: ";
    for (std::size_t i = 0; i < fit_result.free_params.size(); ++i) {
        out << fit_param_name(fit_result.free_params[i]) << "="
            << format_double(fit_result.fitted[i]) << " ";
    }
    out << "residual_rms=" << format_double(fit_result.residual_rms) << " b/s in "
        << fit_result.iterations << " iterations -> " << options.out_path << "\n";
    if (!fit_result.converged) {
        result.diagnostics = "warning: fit did not converge within max_iter\n";
    }
    result.output = out.str();
    return result;
}

CommandResult run_train(const TrainOptions& options) {
    if (options.frame_paths.empty()) throw std::invalid_argument("train: no frames given");
    if (options.out_model.empty()) throw std::invalid_argument("train: no model output path");
    std::vector<FeatureFrame> frames;
    frames.reserve(options.frame_paths.size());
    for (const auto& path : options.frame_paths) frames.push_back(load_frame(path));

    const auto topo =
        MlpTopology::standard(split_list(options.features), options.history_lags);
    MlpModel model = init_model(topo, options.seed);
    TrainConfig cfg;
    cfg.epochs = options.epochs;
    cfg.batch_size = options.batch_size;
    cfg.seed = options.seed;
    const TrainReport report = train(model, frames, cfg);
    save_model(model, options.out_model);

    std::size_t rows = 0;
    for (const auto& frame : frames) rows += frame.rows();
    CommandResult result;
    std::ostringstream out;
    out << "trained on " << rows << " rows from " << frames.size() << " frame(s); stopped at epoch "
        << report.stopped_epoch << ", best epoch " << report.best_epoch << " (val MSE "
        << format_double(report.val_loss[static_cast<std::size_t>(report.best_epoch) - 1])
        << ") -> " << options.out_model << "\n";
    result.output = out.str();
    return result;
}

namespace {

std::string sweep_path(const std::string& out_path, double link_loss) {
    const fs::path path(out_path);
    fs::path named = path.parent_path();
    named /= path.stem().string() + "_loss" + format_double(link_loss) +
             path.extension().string();
    return named.string();
}

}  // namespace

CommandResult run_predict(const PredictOptions& options) {
    if (options.model_path.empty()) throw std::invalid_argument("predict: no model given");
    if (options.frame_path.empty()) throw std::invalid_argument("predict: no frame given");
    if (options.out_path.empty()) throw std::invalid_argument("predict: no output path");
    const MlpModel model = load_model(options.model_path);
    FeatureFrame frame = load_frame(options.frame_path);

    CommandResult result;
    std::ostringstream out;
    if (options.link_loss_overrides.empty()) {
        const TimeSeries predicted = predict_frame(model, frame);
        write_series_csv(predicted, options.out_path);
        out << predicted.samples.size() << " predictions -> " << options.out_path << "\n";
    } else {
        const auto cols = model.topology.input_columns();
        if (std::find(cols.begin(), cols.end(), "link_loss") == cols.end()) {
            throw std::invalid_argument("predict: model does not take a link_loss input");
        }
        for (double loss : options.link_loss_overrides) {
            if (frame.has_column("link_loss")) {
                auto& column = frame.column("link_loss");
                std::fill(column.begin(), column.end(), loss);
            } else {
                frame.add_column("link_loss", std::vector<double>(frame.rows(), loss));
            }
            const TimeSeries predicted = predict_frame(model, frame);
            const std::string path = options.link_loss_overrides.size() == 1
                                         ? options.out_path
                                         : sweep_path(options.out_path, loss);
            write_series_csv(predicted, path);
            out << predicted.samples.size() << " predictions at link_loss "
                << format_double(loss) << " -> " << path << "\n";
        }
    }
    result.output = out.str();
    return result;
}

CommandResult run_evaluate(const EvaluateOptions& options) {
    if (options.model_path.empty()) throw std::invalid_argument("evaluate: no model given");
    if (options.frame_paths.empty()) throw std::invalid_argument("evaluate: no frames given");
    if (options.out_path.empty()) throw std::invalid_argument("evaluate: no output path");
    const MlpModel model = load_model(options.model_path);

    CommandResult result;
    std::ostringstream csv, diag;
    csv << "frame,n,me,mae,mre,mse\n";
    for (const auto& path : options.frame_paths) {
        const FeatureFrame frame = load_frame(path);
        const ErrorReport report = evaluate_frame(model, frame);
        csv << file_stem(path) << "," << report.n << "," << format_double(report.me) << ","
            << format_double(report.mae) << ",";
        if (report.mre_defined) {
            csv << format_double(report.mre);
        } else {
            diag << "warning: " << file_stem(path)
                 << " has zero measured rates; mre omitted\n";
        }
        csv << "," << format_double(report.mse) << "\n";
    }
    write_text_file(options.out_path, csv.str());
    result.output = csv.str();
    result.diagnostics = diag.str();
    return result;
}

CommandResult run_correlate(const CorrelateOptions& options) {
    if (options.frame_path.empty()) throw std::invalid_argument("correlate: no frame given");
    if (options.out_path.empty()) throw std::invalid_argument("correlate: no output path");
    const FeatureFrame frame = load_frame(options.frame_path);
    const std::vector<std::string> columns =
        options.columns.empty() ? frame.names : split_list(options.columns);

    const CorrelationMatrix matrix = pearson_matrix(frame, columns);
    std::ostringstream csv, diag;
    csv << "column";
    for (const auto& label : matrix.labels) csv << "," << label;
    csv << "\n";
    for (std::size_t r = 0; r < matrix.labels.size(); ++r) {
        csv << matrix.labels[r];
        for (double v : matrix.values[r]) csv << "," << format_double(v);
        csv << "\n";
    }
    for (const auto& name : matrix.flagged) {
        diag << "warning: column '" << name << "' is constant; its coefficients are 0\n";
    }
    write_text_file(options.out_path, csv.str());

    CommandResult result;
    result.output = csv.str();
    result.diagnostics = diag.str();
    return result;
}

}  // namespace cowlink
