#include "cowlink/synth.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>
#include <stdexcept>

#include "cowlink/error.hpp"
#include "cowlink/rng.hpp"
#include "cowlink/timestamp.hpp"
#include "util.hpp"

namespace cowlink {

namespace {

void require(bool ok, const char* what) {
    if (!ok) throw std::invalid_argument(std::string("invalid config: ") + what);
}

}  // namespace

void NoiseSpec::validate() const {
    require(visibility_mean > 0.0 && visibility_mean < 1.0, "visibility_mean must be in (0, 1)");
    require(visibility_ar1 >= 0.0 && visibility_ar1 < 1.0, "visibility_ar1 must be in [0, 1)");
    require(visibility_sigma >= 0.0, "visibility_sigma must be >= 0");
    require(qber_jitter_sigma >= 0.0, "qber_jitter_sigma must be >= 0");
    require(skr_relative_noise >= 0.0, "skr_relative_noise must be >= 0");
    require(dropout_probability >= 0.0 && dropout_probability < 1.0,
            "dropout_probability must be in [0, 1)");
}

void LinkConfig::validate() const {
    require(link_id >= 1 && link_id <= 5, "link_id must be in 1..5");
    require(distance_km > 0.0, "distance_km must be positive");
    noise.validate();
    effective_params().validate();
}

CowParameters LinkConfig::effective_params() const {
    CowParameters p = params;
    p.distance_km = distance_km;
    if (mu_at_upper_bound) p = p.at_upper_bound();
    return p;
}

std::map<std::string, TimeSeries> generate_link(const LinkConfig& config,
                                                std::int64_t start_micros,
                                                std::int64_t duration_micros,
                                                std::int64_t period_micros) {
    config.validate();
    require(period_micros > 0, "sample period must be positive");
    require(duration_micros >= period_micros, "duration must cover at least one sample");

    const CowParameters p = config.effective_params();
    const NoiseSpec& noise = config.noise;
    const std::int64_t n = duration_micros / period_micros;

    Rng rng(mix_seed(noise.seed, static_cast<std::uint64_t>(config.link_id)));

    std::map<std::string, TimeSeries> out;
    for (const char* name : {"visibility", "qber", "laserpower", "skr"}) {
        out[name].name = name;
        out[name].samples.reserve(static_cast<std::size_t>(n));
    }

    // AR(1) states start on their means; innovations are scaled so the
    // configured sigmas are the stationary standard deviations.
    double v_state = noise.visibility_mean;
    double gain_dev = 0.0;
    const double v_innov =
        noise.visibility_sigma * std::sqrt(1.0 - noise.visibility_ar1 * noise.visibility_ar1);
    const double gain_innov =
        noise.skr_relative_noise * std::sqrt(1.0 - noise.visibility_ar1 * noise.visibility_ar1);

    std::int64_t outage_left = 0;
    for (std::int64_t i = 0; i < n; ++i) {
        // one fixed block of draws per sample, whatever happens downstream
        const double z_v = rng.normal();
        const double z_gain = rng.normal();
        const double z_qber = rng.normal();
        const double z_power = rng.normal();
        const double u_dropout = rng.uniform01();

        v_state = noise.visibility_mean + noise.visibility_ar1 * (v_state - noise.visibility_mean) +
                  v_innov * z_v;
        const double visibility = std::clamp(v_state, 1e-9, 1.0);
        gain_dev = noise.visibility_ar1 * gain_dev + gain_innov * z_gain;

        if (outage_left > 0) {
            --outage_left;
            continue;
        }
        if (noise.dropout_probability > 0.0 && u_dropout < noise.dropout_probability) {
            outage_left = 30 + static_cast<std::int64_t>(rng.below(151));  // 30..180 samples
            continue;
        }

        const double qber =
            std::clamp(model_qber(p, visibility) + noise.qber_jitter_sigma * z_qber, 0.0, 0.5);
        ChannelObservables obs;
        obs.visibility = visibility;
        obs.measured_qber = qber;
        obs.use_model_qber = config.use_model_qber_for_skr;
        const double skr = std::max(0.0, secret_key_rate(p, obs).skr * (1.0 + gain_dev));
        const double laserpower = p.mean_photon_number * (1.0 + 0.001 * z_power);

        const std::int64_t ts = start_micros + i * period_micros;
        out["visibility"].samples.push_back({ts, visibility});
        out["qber"].samples.push_back({ts, qber});
        out["laserpower"].samples.push_back({ts, laserpower});
        out["skr"].samples.push_back({ts, skr});
    }
    return out;
}

Scenario default_scenario() {
    Scenario scenario;
    const double distances[] = {46.0, 57.0, 42.0, 43.0, 50.0};
    for (int i = 0; i < 5; ++i) {
        LinkConfig link;
        link.link_id = i + 1;
        link.distance_km = distances[i];
        link.link_loss = distances[i];
        scenario.links.push_back(link);
    }
    return scenario;
}

namespace {

struct ScenarioParser {
    const std::string& path;
    Scenario scenario;
    std::uint64_t global_seed = 42;
    bool in_link = false;
    // per-link loss bookkeeping
    bool loss_explicit = false;
    bool loss_mode_db = false;
    double insertion_loss_db = 0.0;

    [[noreturn]] void fail(std::size_t line, const std::string& message) const {
        throw parse_error(path, line, message);
    }

    double number(std::string_view v, std::size_t line) const {
        double out = 0.0;
        const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
        if (ec != std::errc{} || ptr != v.data() + v.size()) fail(line, "malformed number");
        return out;
    }

    std::uint64_t integer(std::string_view v, std::size_t line) const {
        std::uint64_t out = 0;
        const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
        if (ec != std::errc{} || ptr != v.data() + v.size()) fail(line, "malformed integer");
        return out;
    }

    void finish_link() {
        if (!in_link) return;
        LinkConfig& link = scenario.links.back();
        if (!loss_explicit) {
            link.link_loss = loss_mode_db
                                 ? link.params.attenuation_db_per_km * link.distance_km +
                                       insertion_loss_db
                                 : link.distance_km;
        }
    }

    void start_link() {
        finish_link();
        in_link = true;
        loss_explicit = false;
        loss_mode_db = false;
        insertion_loss_db = 0.0;
        LinkConfig link;
        link.link_id = static_cast<int>(scenario.links.size()) + 1;
        link.noise.seed = global_seed;
        scenario.links.push_back(link);
    }

    void global_key(std::string_view key, std::string_view value, std::size_t line) {
        if (key == "start") {
            const auto ts = parse_timestamp(value);
            if (!ts) fail(line, "malformed start timestamp");
            scenario.start_micros = *ts;
        } else if (key == "period") {
            const auto d = parse_duration_micros(value);
            if (!d) fail(line, "malformed period");
            scenario.period_micros = *d;
        } else if (key == "duration") {
            const auto d = parse_duration_micros(value);
            if (!d) fail(line, "malformed duration");
            scenario.duration_micros = *d;
        } else if (key == "seed") {
            global_seed = integer(value, line);
        } else {
            fail(line, "unknown global key: " + std::string(key));
        }
    }

    void link_key(std::string_view key, std::string_view value, std::size_t line) {
        LinkConfig& link = scenario.links.back();
        if (key == "id") {
            link.link_id = static_cast<int>(integer(value, line));
        } else if (key == "distance_km") {
            link.distance_km = number(value, line);
        } else if (key == "link_loss") {
            link.link_loss = number(value, line);
            loss_explicit = true;
        } else if (key == "loss_mode") {
            if (value == "db")
                loss_mode_db = true;
            else if (value == "distance")
                loss_mode_db = false;
            else
                fail(line, "loss_mode must be `distance` or `db`");
        } else if (key == "insertion_loss_db") {
            insertion_loss_db = number(value, line);
        } else if (key == "attenuation_db_per_km") {
            link.params.attenuation_db_per_km = number(value, line);
        } else if (key == "detector_efficiency") {
            link.params.detector_efficiency = number(value, line);
        } else if (key == "error_correction_eff") {
            link.params.error_correction_eff = number(value, line);
        } else if (key == "dark_count_prob") {
            link.params.dark_count_prob = number(value, line);
        } else if (key == "after_pulse_prob") {
            link.params.after_pulse_prob = number(value, line);
        } else if (key == "key_block_length_km") {
            link.params.key_block_length_km = number(value, line);
        } else if (key == "bob_transmittance_exp") {
            link.params.bob_transmittance_exp = number(value, line);
        } else if (key == "dead_time_s") {
            link.params.dead_time_s = number(value, line);
        } else if (key == "pulse_rate_hz") {
            link.params.pulse_rate_hz = number(value, line);
        } else if (key == "mu") {
            if (value == "auto") {
                link.mu_at_upper_bound = true;
            } else {
                link.params.mean_photon_number = number(value, line);
                link.mu_at_upper_bound = false;
            }
        } else if (key == "use_model_qber") {
            link.use_model_qber_for_skr = integer(value, line) != 0;
        } else if (key == "visibility_mean") {
            link.noise.visibility_mean = number(value, line);
        } else if (key == "visibility_ar1") {
            link.noise.visibility_ar1 = number(value, line);
        } else if (key == "visibility_sigma") {
            link.noise.visibility_sigma = number(value, line);
        } else if (key == "qber_jitter_sigma") {
            link.noise.qber_jitter_sigma = number(value, line);
        } else if (key == "skr_relative_noise") {
            link.noise.skr_relative_noise = number(value, line);
        } else if (key == "dropout_probability") {
            link.noise.dropout_probability = number(value, line);
        } else if (key == "seed") {
            link.noise.seed = integer(value, line);
        } else {
            fail(line, "unknown link key: " + std::string(key));
        }
    }
};

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r'))
        s.remove_suffix(1);
    return s;
}

}  // namespace

Scenario parse_scenario_text(std::string_view text, const std::string& path) {
    ScenarioParser parser{path, Scenario{}, 42, false, false, false, 0.0};
    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos < text.size()) {
        std::size_t eol = text.find('\n', pos);
        if (eol == std::string_view::npos) eol = text.size();
        std::string_view line = text.substr(pos, eol - pos);
        pos = eol + 1;
        ++line_no;
        const std::size_t hash = line.find('#');
        if (hash != std::string_view::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        if (line == "[link]") {
            parser.start_link();
            continue;
        }
        const std::size_t eq = line.find('=');
        if (eq == std::string_view::npos)
            parser.fail(line_no, "expected `key = value` or `[link]`");
        const std::string_view key = trim(line.substr(0, eq));
        const std::string_view value = trim(line.substr(eq + 1));
        if (key.empty() || value.empty()) parser.fail(line_no, "expected `key = value`");
        if (parser.in_link)
            parser.link_key(key, value, line_no);
        else
            parser.global_key(key, value, line_no);
    }
    parser.finish_link();
    if (parser.scenario.links.empty())
        throw parse_error(path, line_no, "scenario defines no links");
    return parser.scenario;
}

Scenario parse_scenario(const std::string& path) {
    return parse_scenario_text(read_file_text(path), path);
}

std::vector<LinkSummary> generate_scenario(const Scenario& scenario, const std::string& out_dir) {
    if (scenario.links.empty()) throw std::invalid_argument("scenario has no links");
    std::set<int> seen;
    for (const LinkConfig& link : scenario.links) {
        if (!seen.insert(link.link_id).second)
            throw std::invalid_argument("duplicate link_id: " + std::to_string(link.link_id));
        link.validate();
    }

    std::vector<LinkSummary> summaries;
    for (const LinkConfig& link : scenario.links) {
        const auto series = generate_link(link, scenario.start_micros, scenario.duration_micros,
                                          scenario.period_micros);
        const std::filesystem::path dir =
            std::filesystem::path(out_dir) / ("link" + std::to_string(link.link_id));
        std::error_code ec;
        std::filesystem::create_directories(dir, ec);
        if (ec) throw io_error(dir.string() + ": cannot create directory");
        for (const auto& [name, s] : series)
            write_series_csv(s, (dir / (name + ".csv")).string());

        std::ofstream info(dir / "link_info.txt", std::ios::binary);
        if (!info) throw io_error((dir / "link_info.txt").string() + ": cannot open for writing");
        info << "link_id = " << link.link_id << '\n'
             << "distance_km = " << format_double(link.distance_km) << '\n'
             << "link_loss = " << format_double(link.link_loss) << '\n';

        summaries.push_back({link.link_id, series.at("skr").samples.size()});
    }
    return summaries;
}

}  // namespace cowlink
