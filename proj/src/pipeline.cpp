#include "vevo/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <map>
#include <sstream>

#include "vevo/common.hpp"
#include "vevo/csv.hpp"

namespace vevo {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::uint64_t fnv1a(const std::string& bytes) {
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

std::string hex64(std::uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

template <class T>
T get_or(const json& j, const char* key, T fallback) {
    if (!j.contains(key)) return fallback;
    try {
        return j.at(key).get<T>();
    } catch (const json::exception& e) {
        throw ValidationError(std::string("config: bad value for '") + key + "': " + e.what());
    }
}

LMSettings parse_lm(const json& j) {
    LMSettings lm;
    lm.max_iterations = get_or(j, "max_iterations", lm.max_iterations);
    lm.gradient_tolerance = get_or(j, "gradient_tolerance", lm.gradient_tolerance);
    lm.step_tolerance = get_or(j, "step_tolerance", lm.step_tolerance);
    lm.initial_damping = get_or(j, "initial_damping", lm.initial_damping);
    lm.damping_up = get_or(j, "damping_up", lm.damping_up);
    lm.damping_down = get_or(j, "damping_down", lm.damping_down);
    lm.fd_step = get_or(j, "fd_step", lm.fd_step);
    const std::string jac = get_or<std::string>(j, "jacobian", "analytic");
    if (jac == "analytic")
        lm.jacobian = LMSettings::Jacobian::analytic;
    else if (jac == "central_difference")
        lm.jacobian = LMSettings::Jacobian::central_difference;
    else
        throw ValidationError("config: lm.jacobian must be 'analytic' or 'central_difference'");
    if (lm.max_iterations < 1 || !(lm.gradient_tolerance > 0) || !(lm.step_tolerance > 0) ||
        !(lm.initial_damping > 0) || !(lm.damping_up > 1.0) || !(lm.damping_down < 1.0) ||
        !(lm.damping_down > 0))
        throw ValidationError("config: lm settings out of range");
    return lm;
}

SDEConfig parse_sde(const json& j) {
    SDEConfig s;
    s.rho = get_or(j, "rho", s.rho);
    s.b = get_or(j, "b", s.b);
    s.c = get_or(j, "c", s.c);
    s.omega = get_or(j, "omega", s.omega);
    s.sigma_v = get_or(j, "sigma_v", s.sigma_v);
    s.dt = get_or(j, "dt", s.dt);
    s.t_end = get_or(j, "t_end", s.t_end);
    s.n_paths = get_or(j, "n_paths", s.n_paths);
    return s;
}

SyntheticConfig parse_synthetic(const json& j) {
    SyntheticConfig s;
    s.days = get_or(j, "days", s.days);
    s.base_volatility = get_or(j, "base_volatility", s.base_volatility);
    s.n_events = get_or(j, "n_events", s.n_events);
    s.news_fraction = get_or(j, "news_fraction", s.news_fraction);
    s.spike_multiple = get_or(j, "spike_multiple", s.spike_multiple);
    s.impulse_horizon = get_or(j, "impulse_horizon", s.impulse_horizon);
    s.noise_damping = get_or(j, "noise_damping", s.noise_damping);
    s.calibrated_threshold = get_or(j, "calibrated_threshold", s.calibrated_threshold);
    s.recommended_exclusion = get_or(j, "recommended_exclusion", s.recommended_exclusion);
    if (j.contains("impulse")) {
        const json& im = j.at("impulse");
        s.impulse.t_w = get_or(im, "t_w", s.impulse.t_w);
        s.impulse.rho1 = get_or(im, "rho1", s.impulse.rho1);
        s.impulse.b1 = get_or(im, "b1", s.impulse.b1);
        s.impulse.c1 = get_or(im, "c1", s.impulse.c1);
        s.impulse.rho2 = get_or(im, "rho2", s.impulse.rho2);
        s.impulse.b2 = get_or(im, "b2", s.impulse.b2);
        s.impulse.omega = get_or(im, "omega", s.impulse.omega);
    }
    return s;
}

}  // namespace

PipelineConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open config '" + path + "'");
    std::stringstream buffer;
    buffer << in.rdbuf();
    const std::string text = buffer.str();

    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw ValidationError("config '" + path + "' is not valid JSON: " + e.what());
    }

    const int version = get_or(j, "version", 1);
    if (version != 1) throw ValidationError("config: unsupported version " + std::to_string(version));

    PipelineConfig c;
    c.config_hash = hex64(fnv1a(text));
    c.data_path = get_or<std::string>(j, "data", "");
    c.news_path = get_or<std::string>(j, "news", "");
    c.calendar = j.contains("calendar")
                     ? SessionCalendar::parse(j.at("calendar").get<std::vector<std::string>>())
                     : SessionCalendar::sse();
    c.thresholds = get_or(j, "thresholds", c.thresholds);
    if (c.thresholds.empty()) throw ValidationError("config: thresholds must list at least one S");
    for (double s : c.thresholds)
        if (!(s > 0.0)) throw ValidationError("config: thresholds must be positive");
    c.horizon = get_or(j, "horizon", c.horizon);
    if (c.horizon < 1) throw ValidationError("config: horizon must be >= 1");
    if (j.contains("t_w_grid")) {
        const auto grid = j.at("t_w_grid").get<std::vector<int>>();
        if (grid.size() != 2) throw ValidationError("config: t_w_grid must be [min, max]");
        c.t_w_min = grid[0];
        c.t_w_max = grid[1];
        if (c.t_w_min < 0 || c.t_w_max < c.t_w_min)
            throw ValidationError("config: t_w_grid must satisfy 0 <= min <= max");
    }
    if (j.contains("omega")) {
        const json& om = j.at("omega");
        const std::string mode = get_or<std::string>(om, "mode", "zero");
        if (mode == "zero")
            c.omega = 0.0;
        else if (mode == "fixed")
            c.omega = om.at("value").get<double>();
        else
            throw ValidationError("config: omega.mode must be 'zero' or 'fixed'");
        if (c.omega < 0.0) throw ValidationError("config: omega must be non-negative");
    }
    if (j.contains("detection")) {
        const json& d = j.at("detection");
        const std::string mode = get_or<std::string>(d, "mean_mode", "pooled");
        if (mode == "pooled")
            c.detection.mean_mode = MeanMode::pooled_minutes;
        else if (mode == "daily")
            c.detection.mean_mode = MeanMode::daily_means;
        else
            throw ValidationError("config: detection.mean_mode must be 'pooled' or 'daily'");
        c.detection.exclusion_window = get_or(d, "exclusion_window", 0);
        c.detection.trim_minutes = get_or(d, "trim_minutes", 0);
        if (c.detection.exclusion_window < 0 || c.detection.trim_minutes < 0)
            throw ValidationError("config: detection windows must be non-negative");
    }
    if (j.contains("lm")) c.lm = parse_lm(j.at("lm"));
    if (j.contains("arma")) {
        c.arma.p = get_or(j.at("arma"), "max_p", c.arma.p);
        c.arma.q = get_or(j.at("arma"), "max_q", c.arma.q);
        if (c.arma.p < 0 || c.arma.q < 0 || c.arma.p + c.arma.q < 1)
            throw ValidationError("config: arma caps must be non-negative with max_p + max_q >= 1");
    }
    c.max_var_lag = get_or(j, "max_var_lag", c.max_var_lag);
    if (c.max_var_lag < 1) throw ValidationError("config: max_var_lag must be >= 1");
    c.heston = get_or(j, "heston", c.heston);
    c.out_dir = get_or<std::string>(j, "out", c.out_dir);
    c.seed = get_or<std::uint64_t>(j, "seed", c.seed);
    if (j.contains("sde")) {
        SdeRunConfig run;
        run.sde = parse_sde(j.at("sde"));
        run.sde.seed = c.seed;
        run.write_paths = get_or<std::string>(j.at("sde"), "output", "ensemble") == "paths";
        c.sde = run;
    }
    if (j.contains("synthetic")) {
        SyntheticConfig s = parse_synthetic(j.at("synthetic"));
        s.seed = c.seed;
        s.calendar = c.calendar;
        c.synthetic = s;
    }
    return c;
}

std::string config_schema() {
    return R"(vevo config schema (JSON, version 1). Keys and defaults:
{
  "version": 1,
  "data": "market.csv",          // minute bars: timestamp,price,volume (required by detect/fit/test)
  "news": "news.csv",            // optional news stamps: timestamp
  "calendar": ["09:30-11:30", "13:00-15:00"],   // closed intervals, minutes of day
  "thresholds": [2, 4, 6, 8],    // event thresholds S
  "horizon": 240,                // response-curve length T in minutes
  "t_w_grid": [0, 60],           // stage-boundary search range
  "omega": {"mode": "zero"},     // or {"mode": "fixed", "value": 0.0011}
  "detection": {
    "mean_mode": "pooled",       // or "daily": mean of per-day means
    "exclusion_window": 0,       // suppress events this many minutes after one
    "trim_minutes": 0            // session-edge bars excluded from the mean
  },
  "lm": {"max_iterations": 400, "gradient_tolerance": 1e-14, "step_tolerance": 1e-14,
          "initial_damping": 1e-3, "damping_up": 10, "damping_down": 0.1,
          "jacobian": "analytic", "fd_step": 1e-6},
  "arma": {"max_p": 2, "max_q": 2},   // order caps, AIC-selected
  "max_var_lag": 4,
  "heston": true,                // emit the exponential-baseline comparison
  "out": "out",
  "seed": 42,
  "sde": {"rho": 1.06e-3, "b": 0.05, "c": 1.0, "omega": 0, "sigma_v": 0,
           "dt": 0.001, "t_end": 100, "n_paths": 1, "output": "ensemble"},  // or "paths"
  "synthetic": {"days": 250, "n_events": 50, "news_fraction": 0.5,
                 "base_volatility": 2e-4, "spike_multiple": 12, "impulse_horizon": 240,
                 "noise_damping": 0.6, "calibrated_threshold": 6, "recommended_exclusion": 400,
                 "impulse": {"t_w": 10, "rho1": 1e-3, "b1": 0.45, "c1": 2.5,
                              "rho2": 1.2e-3, "b2": 0.1, "omega": 0}}
}
Exit codes: 0 ok, 2 validation failure, 3 insufficient data, 4 numerical failure.
)";
}

void apply_overrides(PipelineConfig& config, const CliOptions& options) {
    if (options.out_dir) config.out_dir = *options.out_dir;
    if (options.seed) {
        config.seed = *options.seed;
        if (config.sde) config.sde->sde.seed = *options.seed;
        if (config.synthetic) config.synthetic->seed = *options.seed;
    }
}

namespace {

std::string stamp(const PipelineConfig& c) {
    return std::string("vevo ") + kVersion + " config=" + c.config_hash +
           " seed=" + std::to_string(c.seed);
}

std::string out_path(const PipelineConfig& c, const std::string& name) {
    fs::create_directories(c.out_dir);
    return (fs::path(c.out_dir) / name).string();
}

const char* class_name(EventClass cls) {
    return cls == EventClass::exogenous ? "exogenous" : "endogenous";
}

const char* filter_name(ClassFilter f) {
    switch (f) {
        case ClassFilter::endogenous: return "endogenous";
        case ClassFilter::exogenous: return "exogenous";
        default: return "all";
    }
}

std::vector<ClassFilter> selected_classes(const CliOptions& options) {
    if (options.class_filter) return {*options.class_filter};
    return {ClassFilter::all, ClassFilter::endogenous, ClassFilter::exogenous};
}

MarketSeries load_market(const PipelineConfig& c) {
    if (c.data_path.empty())
        throw ValidationError("config: 'data' is required for this subcommand");
    return load_series(c.data_path, c.calendar);
}

std::vector<std::int64_t> load_news(const PipelineConfig& c) {
    if (c.news_path.empty()) return {};
    return load_news_minutes(c.news_path);
}

}  // namespace

std::string threshold_label(double s) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%g", s);
    return buf;
}

void write_events_csv(const std::string& path, const EventSet& events,
                      const std::string& header_comment) {
    csv::Writer w(path);
    w.comment(header_comment);
    w.raw_line("minute_index,timestamp,class,V,threshold");
    for (const auto& ev : events.events)
        w.row({csv::format_int(ev.row), timestamp_from_minutes(ev.minute), class_name(ev.cls),
               csv::format_double(ev.volatility), csv::format_double(events.threshold())});
}

EventSet read_events_csv(const std::string& path, double threshold_s, double mean_volatility) {
    csv::Reader reader(path);
    reader.expect_header("minute_index,timestamp,class,V,threshold");
    EventSet set;
    set.threshold_s = threshold_s;
    set.mean_volatility = mean_volatility;
    std::vector<std::string> fields;
    while (reader.next(fields)) {
        if (fields.size() != 5)
            throw ValidationError(path + ":" + std::to_string(reader.line_number()) +
                                  ": expected 5 fields");
        Event ev;
        ev.row = csv::parse_int(fields[0], path, reader.line_number());
        ev.minute = minutes_from_timestamp(fields[1]);
        if (fields[2] == "endogenous")
            ev.cls = EventClass::endogenous;
        else if (fields[2] == "exogenous")
            ev.cls = EventClass::exogenous;
        else
            throw ValidationError(path + ":" + std::to_string(reader.line_number()) +
                                  ": unknown class '" + fields[2] + "'");
        ev.volatility = csv::parse_double(fields[3], path, reader.line_number());
        set.events.push_back(ev);
    }
    return set;
}

void cmd_detect(const PipelineConfig& config) {
    const MarketSeries series = load_market(config);
    const std::vector<std::int64_t> news = load_news(config);

    csv::Writer counts(out_path(config, "event_counts.csv"));
    counts.comment(stamp(config));
    counts.raw_line("S,all,endogenous,exogenous");
    for (double s : config.thresholds) {
        EventSet events = classify_events(detect_events(series, s, config.detection), news);
        std::int64_t endo = 0, exo = 0;
        for (const auto& ev : events.events)
            (ev.cls == EventClass::endogenous ? endo : exo) += 1;
        counts.row({threshold_label(s), csv::format_int(static_cast<std::int64_t>(events.events.size())),
                    csv::format_int(endo), csv::format_int(exo)});
        write_events_csv(out_path(config, "events_S" + threshold_label(s) + ".csv"), events,
                         stamp(config) + " S=" + threshold_label(s) +
                             " mean_volatility=" + csv::format_double(events.mean_volatility));
    }
}

namespace {

void write_response_csv(const std::string& path, const ResponseCurve& curve,
                        const std::string& comment) {
    csv::Writer w(path);
    w.comment(comment);
    w.raw_line("t,mean_volatility,mean_log_volume,n");
    for (int t = 1; t <= curve.horizon; ++t)
        w.row({csv::format_int(t), csv::format_double(curve.mean_volatility[t - 1]),
               csv::format_double(curve.mean_log_volume[t - 1]),
               csv::format_int(curve.n_contributing[t - 1])});
}

ResponseCurve read_response_csv(const std::string& path) {
    csv::Reader reader(path);
    reader.expect_header("t,mean_volatility,mean_log_volume,n");
    std::vector<double> v, z;
    std::vector<int> n;
    std::vector<std::string> fields;
    while (reader.next(fields)) {
        if (fields.size() != 4)
            throw ValidationError(path + ":" + std::to_string(reader.line_number()) +
                                  ": expected 4 fields");
        v.push_back(csv::parse_double(fields[1], path, reader.line_number()));
        z.push_back(csv::parse_double(fields[2], path, reader.line_number()));
        n.push_back(static_cast<int>(csv::parse_int(fields[3], path, reader.line_number())));
    }
    ResponseCurve curve;
    curve.horizon = static_cast<int>(v.size());
    curve.mean_volatility = Eigen::Map<Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
    curve.mean_log_volume = Eigen::Map<Eigen::VectorXd>(z.data(), static_cast<Eigen::Index>(z.size()));
    curve.n_contributing = Eigen::Map<Eigen::VectorXi>(n.data(), static_cast<Eigen::Index>(n.size()));
    return curve;
}

std::string response_file(double s, ClassFilter f) {
    return "response_S" + threshold_label(s) + "_" + filter_name(f) + ".csv";
}

}  // namespace

void cmd_fit(const PipelineConfig& config, const CliOptions& options) {
    const MarketSeries series = load_market(config);
    const std::vector<int> grid = t_w_grid(config.t_w_min, config.t_w_max);

    for (ClassFilter filter : selected_classes(options)) {
        csv::Writer table(out_path(config, std::string("fit_") + filter_name(filter) + ".csv"));
        table.comment(stamp(config) + " omega=" + csv::format_double(config.omega));
        table.raw_line("S,t_w,rho1,b1,c1,rho2,b2,rss");

        std::optional<csv::Writer> heston_table, compare;
        if (config.heston) {
            heston_table.emplace(out_path(config, std::string("heston_") + filter_name(filter) + ".csv"));
            heston_table->comment(stamp(config));
            heston_table->raw_line("S,a,theta,omega,rss");
            compare.emplace(out_path(config, std::string("compare_") + filter_name(filter) + ".csv"));
            compare->comment(stamp(config));
            compare->raw_line("S,rank,model,rss");
        }

        for (double s : config.thresholds) {
            const std::string events_file = out_path(config, "events_S" + threshold_label(s) + ".csv");
            if (!fs::exists(events_file))
                throw ValidationError("cmd_fit: missing " + events_file + "; run detect first");
            // the recorded mean is recomputed deterministically from the data
            EventSet events = read_events_csv(events_file, s, 0.0);
            {
                EventSet fresh = detect_events(series, s, config.detection);
                events.mean_volatility = fresh.mean_volatility;
            }

            ResponseCurve curve;
            try {
                curve = build_response(series, events, config.horizon, filter);
            } catch (const InsufficientDataError&) {
                if (!options.allow_empty)
                    throw InsufficientDataError("cmd_fit: no " + std::string(filter_name(filter)) +
                                                " events for S=" + threshold_label(s) +
                                                " (use --allow-empty to continue)");
                table.row({threshold_label(s), "n/a", "n/a", "n/a", "n/a", "n/a", "n/a", "n/a"});
                continue;
            }
            write_response_csv(out_path(config, response_file(s, filter)), curve,
                               stamp(config) + " S=" + threshold_label(s));

            VEFit fit = fit_two_stage(curve, grid, config.omega, config.lm);
            const VEParams& p = fit.params;
            if (p.t_w > 0)
                table.row({threshold_label(s), csv::format_int(p.t_w), csv::format_double(p.rho1),
                           csv::format_double(p.b1), csv::format_double(p.c1),
                           csv::format_double(p.rho2), csv::format_double(p.b2),
                           csv::format_double(fit.rss)});
            else
                table.row({threshold_label(s), "0", "", "", "", csv::format_double(p.rho2),
                           csv::format_double(p.b2), csv::format_double(fit.rss)});

            // plot data: empirical curve with the fitted two-stage overlay
            csv::Writer plot(out_path(config, "fitcurve_S" + threshold_label(s) + "_" +
                                                  filter_name(filter) + ".csv"));
            plot.comment(stamp(config) + " S=" + threshold_label(s));
            plot.raw_line("t,empirical,fitted");
            auto [ts, ys] = usable_curve_points(curve);
            for (Eigen::Index i = 0; i < ts.size(); ++i)
                plot.row({csv::format_double(ts[i]), csv::format_double(ys[i]),
                          csv::format_double(ve_mean(p, ts[i]))});

            if (config.heston) {
                HestonFit hf = fit_heston(curve, events.mean_volatility, config.lm);
                heston_table->row({threshold_label(s), csv::format_double(hf.params.a),
                                   csv::format_double(hf.params.theta),
                                   csv::format_double(hf.params.omega), csv::format_double(hf.rss)});
                auto ranking = model_compare({{"ve", fit.rss, fit.n_points},
                                              {"heston", hf.rss, hf.n_points}});
                for (std::size_t r = 0; r < ranking.size(); ++r)
                    compare->row({threshold_label(s), csv::format_int(static_cast<std::int64_t>(r + 1)),
                                  ranking[r].label, csv::format_double(ranking[r].rss)});
            }
        }
    }
}

namespace {

struct FitRow {
    double s = 0.0;
    int t_w = 0;
    bool available = false;
};

std::vector<FitRow> read_fit_rows(const std::string& path) {
    csv::Reader reader(path);
    reader.expect_header("S,t_w,rho1,b1,c1,rho2,b2,rss");
    std::vector<FitRow> rows;
    std::vector<std::string> fields;
    while (reader.next(fields)) {
        if (fields.size() != 8)
            throw ValidationError(path + ":" + std::to_string(reader.line_number()) +
                                  ": expected 8 fields");
        FitRow row;
        row.s = csv::parse_double(fields[0], path, reader.line_number());
        row.available = fields[1] != "n/a";
        if (row.available)
            row.t_w = static_cast<int>(csv::parse_int(fields[1], path, reader.line_number()));
        rows.push_back(row);
    }
    return rows;
}

struct BatteryWriters {
    csv::Writer adf;
    csv::Writer granger;
    csv::Writer regression;
};

void write_battery(BatteryWriters& w, const std::string& s_label, const StageBattery& battery) {
    if (battery.adf_volatility) {
        const auto& a = *battery.adf_volatility;
        w.adf.row({s_label, "volatility", csv::format_double(a.statistic),
                   csv::format_int(a.selected_lag), a.reject_unit_root_at_5pct ? "1" : "0"});
    }
    if (battery.adf_volume) {
        const auto& a = *battery.adf_volume;
        w.adf.row({s_label, "log_volume", csv::format_double(a.statistic),
                   csv::format_int(a.selected_lag), a.reject_unit_root_at_5pct ? "1" : "0"});
    }
    if (battery.granger_volume_to_volatility) {
        const auto& g = *battery.granger_volume_to_volatility;
        w.granger.row({s_label, "volume does not Granger-cause volatility",
                       csv::format_double(g.f_statistic), csv::format_double(g.p_value)});
    }
    if (battery.granger_volatility_to_volume) {
        const auto& g = *battery.granger_volatility_to_volume;
        w.granger.row({s_label, "volatility does not Granger-cause volume",
                       csv::format_double(g.f_statistic), csv::format_double(g.p_value)});
    }
    if (battery.volume_volatility) {
        const auto& r = *battery.volume_volatility;
        w.regression.row({s_label, csv::format_double(r.coefficients[0]),
                          csv::format_double(r.coefficients[1]), csv::format_double(r.coefficients[2]),
                          csv::format_double(r.t_pvalues[0]), csv::format_double(r.t_pvalues[1]),
                          csv::format_double(r.t_pvalues[2]), csv::format_double(r.f_pvalue)});
    }
}

}  // namespace

void cmd_test(const PipelineConfig& config, const CliOptions& options) {
    for (ClassFilter filter : selected_classes(options)) {
        const std::string fit_file = out_path(config, std::string("fit_") + filter_name(filter) + ".csv");
        if (!fs::exists(fit_file))
            throw ValidationError("cmd_test: missing " + fit_file + "; run fit first");
        const std::vector<FitRow> fit_rows = read_fit_rows(fit_file);

        csv::Writer status(out_path(config, std::string("test_status_") + filter_name(filter) + ".csv"));
        status.comment(stamp(config));
        status.raw_line("S,stage,test,status");

        for (int stage = 1; stage <= 2; ++stage) {
            BatteryWriters writers{
                csv::Writer(out_path(config, std::string("adf_") + filter_name(filter) + "_stage" +
                                                 std::to_string(stage) + ".csv")),
                csv::Writer(out_path(config, std::string("granger_") + filter_name(filter) + "_stage" +
                                                 std::to_string(stage) + ".csv")),
                csv::Writer(out_path(config, std::string("regression_") + filter_name(filter) +
                                                 "_stage" + std::to_string(stage) + ".csv")),
            };
            writers.adf.comment(stamp(config));
            writers.adf.raw_line("S,series,statistic,selected_lag,reject_5pct");
            writers.granger.comment(stamp(config));
            writers.granger.raw_line("S,null_hypothesis,F,p");
            writers.regression.comment(stamp(config));
            writers.regression.raw_line("S,beta0,beta_i,beta_u,p_beta0,p_beta_i,p_beta_u,f_pvalue");

            for (const FitRow& row : fit_rows) {
                const std::string s_label = threshold_label(row.s);
                if (!row.available) {
                    status.row({s_label, std::to_string(stage), "all", "insufficient sample"});
                    continue;
                }
                const std::string curve_file = out_path(config, response_file(row.s, filter));
                if (!fs::exists(curve_file))
                    throw ValidationError("cmd_test: missing " + curve_file + "; run fit first");
                const ResponseCurve curve = read_response_csv(curve_file);

                std::vector<double> v, z;
                for (int t = 1; t <= curve.horizon; ++t) {
                    if (curve.n_contributing[t - 1] <= 0) continue;
                    const double cv = curve.mean_volatility[t - 1];
                    const double cz = curve.mean_log_volume[t - 1];
                    if (!std::isfinite(cv) || !std::isfinite(cz)) continue;
                    const bool in_stage1 = t <= row.t_w;
                    if ((stage == 1) != in_stage1) continue;
                    v.push_back(cv);
                    z.push_back(cz);
                }
                if (stage == 1 && row.t_w == 0) {
                    status.row({s_label, "1", "all", "no stage 1 (t_w = 0)"});
                    continue;
                }
                if (v.size() < 3) {
                    status.row({s_label, std::to_string(stage), "all", "insufficient sample"});
                    continue;
                }
                const Eigen::Map<const Eigen::VectorXd> vv(v.data(), static_cast<Eigen::Index>(v.size()));
                const Eigen::Map<const Eigen::VectorXd> zv(z.data(), static_cast<Eigen::Index>(z.size()));
                StageBattery battery =
                    run_stage_battery(vv, zv, config.max_var_lag, config.arma, config.lm);
                write_battery(writers, s_label, battery);
                for (const std::string& note : battery.skipped) {
                    const std::size_t colon = note.find(':');
                    status.row({s_label, std::to_string(stage), note.substr(0, colon),
                                "insufficient sample"});
                }
                if (battery.skipped.empty())
                    status.row({s_label, std::to_string(stage), "all", "ok"});
            }
        }
    }
}

void cmd_simulate(const PipelineConfig& config) {
    if (!config.sde && !config.synthetic)
        throw ValidationError("cmd_simulate: config needs an 'sde' or 'synthetic' section");

    if (config.sde) {
        const SimulationResult sim = simulate(config.sde->sde);
        if (config.sde->write_paths) {
            csv::Writer w(out_path(config, "paths.csv"));
            w.comment(stamp(config));
            w.raw_line("path,t,V");
            for (Eigen::Index p = 0; p < sim.paths.rows(); ++p)
                for (Eigen::Index m = 0; m < sim.paths.cols(); ++m)
                    w.row({csv::format_int(p), csv::format_double(sim.minutes[m]),
                           csv::format_double(sim.paths(p, m))});
        } else {
            const Eigen::VectorXd mean = sim.ensemble_mean();
            const Eigen::VectorXd se = sim.ensemble_stderr();
            csv::Writer w(out_path(config, "ensemble.csv"));
            w.comment(stamp(config));
            w.raw_line("t,mean_V,stderr");
            for (Eigen::Index m = 0; m < mean.size(); ++m)
                w.row({csv::format_double(sim.minutes[m]), csv::format_double(mean[m]),
                       csv::format_double(se[m])});
        }
    }

    if (config.synthetic) {
        const SyntheticMarket market = generate_market(*config.synthetic);
        csv::Writer w(out_path(config, "market.csv"));
        w.comment(stamp(config));
        w.raw_line("timestamp,price,volume");
        for (Eigen::Index i = 0; i < market.series.rows(); ++i) {
            const double vol = market.series.has_log_volume(i)
                                   ? std::exp(market.series.log_volume[i])
                                   : 0.0;
            w.row({timestamp_from_minutes(market.series.minute[static_cast<std::size_t>(i)]),
                   csv::format_double(market.series.price[i]),
                   csv::format_int(static_cast<std::int64_t>(std::llround(vol)))});
        }
        csv::Writer news(out_path(config, "news.csv"));
        news.comment(stamp(config));
        news.raw_line("timestamp");
        for (std::int64_t m : market.news_minutes) news.row({timestamp_from_minutes(m)});

        json truth;
        truth["calibrated_threshold"] = market.config.calibrated_threshold;
        truth["recommended_exclusion"] = market.config.recommended_exclusion;
        truth["base_volatility"] = market.config.base_volatility;
        truth["impulse"] = {{"t_w", market.config.impulse.t_w}, {"rho1", market.config.impulse.rho1},
                            {"b1", market.config.impulse.b1},   {"c1", market.config.impulse.c1},
                            {"rho2", market.config.impulse.rho2}, {"b2", market.config.impulse.b2},
                            {"omega", market.config.impulse.omega}};
        json ev = json::array();
        for (std::size_t i = 0; i < market.event_minutes.size(); ++i)
            ev.push_back({{"timestamp", timestamp_from_minutes(market.event_minutes[i])},
                          {"class", class_name(market.event_classes[i])}});
        truth["events"] = ev;
        std::ofstream tf(out_path(config, "truth.json"));
        tf << truth.dump(2) << '\n';
    }
}

void cmd_report(const PipelineConfig& config, const CliOptions& options) {
    cmd_detect(config);
    cmd_fit(config, options);
    cmd_test(config, options);
}

}  // namespace vevo
