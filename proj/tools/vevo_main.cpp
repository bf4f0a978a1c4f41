#include <CLI11.hpp>
#include <cstdio>
#include <exception>
#include <string>

#include "vevo/common.hpp"
#include "vevo/pipeline.hpp"

namespace {

struct Args {
    std::string config_path;
    vevo::CliOptions options;
    std::string class_name;
};

void add_common(CLI::App* cmd, Args& args, bool with_class) {
    cmd->add_option("--config", args.config_path, "pipeline config (JSON)")->required();
    cmd->add_option("--out", args.options.out_dir, "output directory override");
    cmd->add_option("--seed", args.options.seed, "RNG seed override");
    if (with_class)
        cmd->add_option("--class", args.class_name, "restrict to one event class")
            ->check(CLI::IsMember({"all", "endo", "exo"}));
    cmd->add_flag("--allow-empty", args.options.allow_empty,
                  "emit n/a rows instead of failing on empty event sets");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"volatility evolution after extreme events: detection, fitting and tests"};
    app.require_subcommand(0, 1);
    bool print_schema = false;
    app.add_flag("--print-schema", print_schema, "print the config schema and exit");

    Args args;
    CLI::App* detect = app.add_subcommand("detect", "find extreme events and classify them");
    add_common(detect, args, false);
    CLI::App* fit = app.add_subcommand("fit", "build response curves and fit the decay models");
    add_common(fit, args, true);
    CLI::App* test = app.add_subcommand("test", "run the two-stage assumption test battery");
    add_common(test, args, true);
    CLI::App* simulate = app.add_subcommand("simulate", "run the SDE simulator / synthetic market");
    add_common(simulate, args, false);
    CLI::App* report = app.add_subcommand("report", "detect + fit + test in one pass");
    add_common(report, args, true);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);  // --help
        app.exit(e);
        return 2;
    }

    if (print_schema) {
        std::fputs(vevo::config_schema().c_str(), stdout);
        return 0;
    }
    if (app.get_subcommands().empty()) {
        std::fputs(app.help().c_str(), stdout);
        return 0;
    }

    if (args.class_name == "endo") args.options.class_filter = vevo::ClassFilter::endogenous;
    if (args.class_name == "exo") args.options.class_filter = vevo::ClassFilter::exogenous;
    if (args.class_name == "all") args.options.class_filter = vevo::ClassFilter::all;

    try {
        vevo::PipelineConfig config = vevo::load_config(args.config_path);
        vevo::apply_overrides(config, args.options);
        if (detect->parsed()) vevo::cmd_detect(config);
        if (fit->parsed()) vevo::cmd_fit(config, args.options);
        if (test->parsed()) vevo::cmd_test(config, args.options);
        if (simulate->parsed()) vevo::cmd_simulate(config);
        if (report->parsed()) vevo::cmd_report(config, args.options);
        return 0;
    } catch (const vevo::ValidationError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    } catch (const vevo::InsufficientDataError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 3;
    } catch (const vevo::NumericalError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 4;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
}
