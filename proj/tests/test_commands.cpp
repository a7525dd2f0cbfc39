#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "cowlink/commands.hpp"
#include "cowlink/error.hpp"
#include "cowlink/feature_frame.hpp"
#include "cowlink/mlp.hpp"
#include "cowlink/synth.hpp"
#include "doctest.h"
#include "json.hpp"

using namespace cowlink;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    explicit TempDir(const std::string& name) : path(fs::path("cmd_tmp") / name) {
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
    std::string str(const std::string& leaf = "") const {
        return leaf.empty() ? path.string() : (path / leaf).string();
    }
};

void write_file(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    out << text;
}

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(in.good());
    return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

// Two short links, mild noise, fixed seed.
std::string small_scenario() {
    return "start = 2024-01-01T00:00:00Z\n"
           "period = 10s\n"
           "duration = 3000s\n"
           "seed = 7\n"
           "\n"
           "[link]\n"
           "id = 1\n"
           "distance_km = 46\n"
           "\n"
           "[link]\n"
           "id = 2\n"
           "distance_km = 57\n";
}

}  // namespace

TEST_CASE("synth writes link directories and reruns bit-identically") {
    TempDir tmp("synth");
    write_file(tmp.str("scenario.txt"), small_scenario());

    SynthOptions options;
    options.scenario_path = tmp.str("scenario.txt");
    options.out_dir = tmp.str("data");
    const auto result = run_synth(options);
    CHECK(result.exit_code == 0);
    CHECK(result.output.find("link 1: 300 samples") != std::string::npos);
    CHECK(result.output.find("link 2:") != std::string::npos);

    for (const char* series : {"visibility", "qber", "laserpower", "skr"}) {
        CHECK(fs::exists(fs::path(tmp.str("data")) / "link1" / (std::string(series) + ".csv")));
        CHECK(fs::exists(fs::path(tmp.str("data")) / "link2" / (std::string(series) + ".csv")));
    }
    CHECK(fs::exists(fs::path(tmp.str("data")) / "link1" / "link_info.txt"));

    const std::string first = slurp(tmp.str("data") + "/link1/skr.csv");
    run_synth(options);
    CHECK(slurp(tmp.str("data") + "/link1/skr.csv") == first);

    SynthOptions reseeded = options;
    reseeded.seed = 123;
    reseeded.seed_set = true;
    run_synth(reseeded);
    CHECK(slurp(tmp.str("data") + "/link1/skr.csv") != first);

    SynthOptions missing;
    missing.scenario_path = tmp.str("no_such.txt");
    missing.out_dir = tmp.str("data2");
    CHECK_THROWS_AS(run_synth(missing), io_error);
}

TEST_CASE("synth default scenario produces the five-link chain") {
    TempDir tmp("synth_default");
    SynthOptions options;
    options.out_dir = tmp.str("data");
    const auto result = run_synth(options);
    CHECK(result.output.find("wrote 5 link directories") != std::string::npos);
    for (int id = 1; id <= 5; ++id) {
        CHECK(fs::is_directory(fs::path(tmp.str("data")) / ("link" + std::to_string(id))));
    }
}

TEST_CASE("prep averages, aligns, injects link_loss, and adds history lags") {
    TempDir tmp("prep");
    write_file(tmp.str("scenario.txt"), small_scenario());
    SynthOptions synth;
    synth.scenario_path = tmp.str("scenario.txt");
    synth.out_dir = tmp.str("data");
    run_synth(synth);

    PrepOptions prep;
    prep.in_dir = tmp.str("data") + "/link1";
    prep.out_path = tmp.str("frame.csv");
    prep.window = "60s";
    const auto result = run_prep(prep);
    CHECK(result.exit_code == 0);
    CHECK(result.output.find("frame:") != std::string::npos);

    const FeatureFrame frame = read_frame_csv(tmp.str("frame.csv"));
    for (const char* col : {"qber", "visibility", "laserpower", "skr", "link_loss", "skr_lag1",
                            "skr_lag2", "skr_lag3"}) {
        CAPTURE(col);
        CHECK(frame.has_column(col));
    }
    // 300 samples -> 50 one-minute windows -> minus 3 lag rows.
    CHECK(frame.rows() == 47);
    CHECK(frame.column("link_loss").front() == 46.0);
    // Lag columns shift the skr column forward.
    CHECK(frame.column("skr_lag1")[1] == frame.column("skr")[0]);
    CHECK(frame.column("skr_lag3")[3] == frame.column("skr")[0]);

    PrepOptions no_lags = prep;
    no_lags.lags = "none";
    no_lags.link_loss = 12.5;
    no_lags.link_loss_set = true;
    no_lags.out_path = tmp.str("frame2.csv");
    run_prep(no_lags);
    const FeatureFrame frame2 = read_frame_csv(tmp.str("frame2.csv"));
    CHECK(frame2.rows() == 50);
    CHECK_FALSE(frame2.has_column("skr_lag1"));
    CHECK(frame2.column("link_loss").front() == 12.5);

    PrepOptions bad_window = prep;
    bad_window.window = "0s";
    CHECK_THROWS_AS(run_prep(bad_window), std::invalid_argument);
    PrepOptions bad_lags = prep;
    bad_lags.lags = "1,frog";
    CHECK_THROWS_AS(run_prep(bad_lags), std::invalid_argument);
}

TEST_CASE("prep reports parse failures with file and line") {
    TempDir tmp("prep_bad");
    fs::create_directories(tmp.str("in"));
    write_file(tmp.str("in") + "/skr.csv",
               "2024-01-01 00:00:00.000000+00:00,1000\nnot a line\n");
    PrepOptions prep;
    prep.in_dir = tmp.str("in");
    prep.out_path = tmp.str("frame.csv");
    prep.lags = "none";
    try {
        run_prep(prep);
        FAIL("expected parse_error");
    } catch (const parse_error& e) {
        CHECK(e.line() == 2);
        CHECK(std::string(e.what()).find("skr.csv") != std::string::npos);
    }
}

TEST_CASE("fit command recovers the generating attenuation from clean data") {
    TempDir tmp("fit");
    write_file(tmp.str("scenario.txt"),
               "period = 10s\n"
               "duration = 3000s\n"
               "seed = 11\n"
               "[link]\n"
               "id = 1\n"
               "distance_km = 46\n"
               "attenuation_db_per_km = 0.23\n"
               "visibility_sigma = 0\n"
               "qber_jitter_sigma = 0\n"
               "skr_relative_noise = 0\n"
               "dropout_probability = 0\n");
    SynthOptions synth;
    synth.scenario_path = tmp.str("scenario.txt");
    synth.out_dir = tmp.str("data");
    run_synth(synth);

    PrepOptions prep;
    prep.in_dir = tmp.str("data") + "/link1";
    prep.out_path = tmp.str("frame.csv");
    prep.window = "10s";
    prep.lags = "none";
    run_prep(prep);

    FitOptions fit;
    fit.frame_path = tmp.str("frame.csv");
    fit.out_path = tmp.str("fit.json");
    fit.free_params = "alpha";
    const auto result = run_fit(fit);
    CHECK(result.exit_code == 0);
    CHECK(result.diagnostics.empty());

    const auto report = nlohmann::json::parse(slurp(tmp.str("fit.json")));
    CHECK(report["converged"].get<bool>());
    CHECK(report["fitted"]["alpha"].get<double>() == doctest::Approx(0.23).epsilon(0.01));
    CHECK(report["distance_km"].get<double>() == 46.0);
    CHECK(report["mu_source"] == "mean laserpower");
    CHECK(fs::exists(tmp.str("fit.residuals.csv")));

    FitOptions bad = fit;
    bad.free_params = "alpha,flux";
    CHECK_THROWS_AS(run_fit(bad), std::invalid_argument);
}

TEST_CASE("train, predict, and evaluate round the pipeline") {
    TempDir tmp("train");
    write_file(tmp.str("scenario.txt"), small_scenario());
    SynthOptions synth;
    synth.scenario_path = tmp.str("scenario.txt");
    synth.out_dir = tmp.str("data");
    run_synth(synth);

    for (int id : {1, 2}) {
        PrepOptions prep;
        prep.in_dir = tmp.str("data") + "/link" + std::to_string(id);
        prep.out_path = tmp.str("frame" + std::to_string(id) + ".csv");
        prep.window = "30s";
        run_prep(prep);
    }

    TrainOptions train_options;
    train_options.frame_paths = {tmp.str("frame1.csv"), tmp.str("frame2.csv")};
    train_options.out_model = tmp.str("model.cowmlp");
    train_options.features = "qber,visibility,link_loss,history";
    train_options.epochs = 3;
    const auto trained = run_train(train_options);
    CHECK(trained.exit_code == 0);
    CHECK(trained.output.find("best epoch") != std::string::npos);
    REQUIRE(fs::exists(tmp.str("model.cowmlp")));

    // Deterministic: retraining writes the identical model file.
    const std::string model_bytes = slurp(tmp.str("model.cowmlp"));
    run_train(train_options);
    CHECK(slurp(tmp.str("model.cowmlp")) == model_bytes);

    PredictOptions predict;
    predict.model_path = tmp.str("model.cowmlp");
    predict.frame_path = tmp.str("frame1.csv");
    predict.out_path = tmp.str("pred.csv");
    const auto predicted = run_predict(predict);
    CHECK(predicted.exit_code == 0);
    CHECK(fs::exists(tmp.str("pred.csv")));

    PredictOptions sweep = predict;
    sweep.link_loss_overrides = {20.0, 57.0};
    run_predict(sweep);
    CHECK(fs::exists(tmp.str("pred_loss20.csv")));
    CHECK(fs::exists(tmp.str("pred_loss57.csv")));
    CHECK(slurp(tmp.str("pred_loss20.csv")) != slurp(tmp.str("pred_loss57.csv")));

    EvaluateOptions evaluate;
    evaluate.model_path = tmp.str("model.cowmlp");
    evaluate.frame_paths = {tmp.str("frame1.csv"), tmp.str("frame2.csv")};
    evaluate.out_path = tmp.str("metrics.csv");
    const auto evaluated = run_evaluate(evaluate);
    CHECK(evaluated.exit_code == 0);
    const std::string metrics = slurp(tmp.str("metrics.csv"));
    CHECK(metrics.rfind("frame,n,me,mae,mre,mse\n", 0) == 0);
    CHECK(metrics.find("frame1,") != std::string::npos);
    CHECK(metrics.find("frame2,") != std::string::npos);
    CHECK(evaluated.output == metrics);

    const auto rerun = run_evaluate(evaluate);
    CHECK(slurp(tmp.str("metrics.csv")) == metrics);
    CHECK(rerun.output == metrics);
}

TEST_CASE("correlate writes a labeled square matrix and flags constants") {
    TempDir tmp("correlate");
    FeatureFrame frame;
    frame.timestamps = {0, 1000000, 2000000, 3000000};
    frame.add_column("a", {1.0, 2.0, 3.0, 4.0});
    frame.add_column("b", {2.0, 4.0, 6.0, 8.0});
    frame.add_column("c", {5.0, 5.0, 5.0, 5.0});
    write_frame_csv(frame, tmp.str("frame.csv"));

    CorrelateOptions options;
    options.frame_path = tmp.str("frame.csv");
    options.out_path = tmp.str("corr.csv");
    const auto result = run_correlate(options);
    CHECK(result.exit_code == 0);
    const std::string csv = slurp(tmp.str("corr.csv"));
    CHECK(csv.rfind("column,a,b,c\n", 0) == 0);
    CHECK(csv.find("a,1,1,0\n") != std::string::npos);
    CHECK(result.diagnostics.find("'c' is constant") != std::string::npos);

    CorrelateOptions subset = options;
    subset.columns = "a,b";
    subset.out_path = tmp.str("corr2.csv");
    const auto sub = run_correlate(subset);
    CHECK(sub.diagnostics.empty());
    CHECK(slurp(tmp.str("corr2.csv")).rfind("column,a,b\n", 0) == 0);

    FeatureFrame one;
    one.timestamps = {0};
    one.add_column("a", {1.0});
    one.add_column("skr", {2.0});
    write_frame_csv(one, tmp.str("one.csv"));
    CorrelateOptions tiny = options;
    tiny.frame_path = tmp.str("one.csv");
    tiny.out_path = tmp.str("corr3.csv");
    CHECK_THROWS_AS(run_correlate(tiny), std::invalid_argument);
}
