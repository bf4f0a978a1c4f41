#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "vevo/econometrics.hpp"
#include "vevo/events.hpp"
#include "vevo/fitting.hpp"
#include "vevo/synthetic.hpp"
#include "vevo/ve_model.hpp"

namespace vevo {

struct SdeRunConfig {
    SDEConfig sde;
    bool write_paths = false;  // per-path CSV instead of the reduced ensemble
};

struct PipelineConfig {
    std::string data_path;
    std::string news_path;  // optional
    SessionCalendar calendar;
    std::vector<double> thresholds{2.0, 4.0, 6.0, 8.0};
    int horizon = 240;
    int t_w_min = 0;
    int t_w_max = 60;
    double omega = 0.0;  // fixed level entering the fits; 0 in the default variant
    DetectOptions detection;
    LMSettings lm;
    ArmaOrder arma;
    int max_var_lag = 4;
    bool heston = true;
    std::string out_dir = "out";
    std::uint64_t seed = 0;
    std::optional<SdeRunConfig> sde;
    std::optional<SyntheticConfig> synthetic;

    std::string config_hash;  // FNV-1a of the config file bytes
};

/// Parses and validates the JSON config document.
PipelineConfig load_config(const std::string& path);

/// Human-readable schema of the config document, printed by --print-schema.
std::string config_schema();

struct CliOptions {
    std::optional<std::string> out_dir;
    std::optional<std::uint64_t> seed;
    std::optional<ClassFilter> class_filter;
    bool allow_empty = false;
};

void apply_overrides(PipelineConfig& config, const CliOptions& options);

/// Subcommands. Each communicates with the next only through files in
/// config.out_dir and throws Validation/InsufficientData/NumericalError on
/// failure (mapped to exit codes 2/3/4 by the CLI).
void cmd_detect(const PipelineConfig& config);
void cmd_fit(const PipelineConfig& config, const CliOptions& options);
void cmd_test(const PipelineConfig& config, const CliOptions& options);
void cmd_simulate(const PipelineConfig& config);
void cmd_report(const PipelineConfig& config, const CliOptions& options);

/// Event CSV round-trip used by the pipeline stages.
void write_events_csv(const std::string& path, const EventSet& events,
                      const std::string& header_comment);
EventSet read_events_csv(const std::string& path, double threshold_s, double mean_volatility);

std::string threshold_label(double s);

}  // namespace vevo
