// Experiment harness for the momentum-methods library: config-driven runs,
// oscillator energy traces, and convergence-rate certificates as CSV data.
//
// Exit codes: 0 success, 2 certificate violated, 1 config or runtime error.

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <string>

#include "momentum/experiments.hpp"

namespace {

struct CommonOptions {
    std::string config_path;
    std::string preset_name;
    std::string out_dir;
    bool plot_data = false;
};

void add_common(CLI::App* cmd, CommonOptions& opts) {
    cmd->add_option("--config", opts.config_path, "key = value experiment file");
    cmd->add_option("--preset", opts.preset_name, "built-in experiment: fig1..fig5");
    cmd->add_option("--out", opts.out_dir, "output directory (overrides the config)");
    cmd->add_flag("--plot-data", opts.plot_data, "also emit downsampled *_plot.csv files");
}

momentum::ExperimentConfig load(const CommonOptions& opts) {
    if (opts.config_path.empty() == opts.preset_name.empty()) {
        throw momentum::config_error("give exactly one of --config or --preset");
    }
    momentum::ExperimentConfig cfg;
    if (!opts.preset_name.empty()) {
        cfg = momentum::preset(opts.preset_name);
    } else {
        std::ifstream is(opts.config_path);
        if (!is) {
            throw momentum::config_error("cannot open config file '" + opts.config_path + "'");
        }
        cfg = momentum::parse_config(is);
    }
    if (!opts.out_dir.empty()) cfg.out_dir = opts.out_dir;
    if (opts.plot_data) cfg.plot_data = true;
    return cfg;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"momentum-methods laboratory"};
    app.require_subcommand(1);

    CommonOptions run_opts, energy_opts, certify_opts;
    CLI::App* cmd_run = app.add_subcommand("run", "run methods, write trajectory and monitor CSVs");
    CLI::App* cmd_energy = app.add_subcommand("energy", "simulate the oscillator, write energy CSV");
    CLI::App* cmd_certify = app.add_subcommand("certify", "run and check the rate certificate");
    add_common(cmd_run, run_opts);
    add_common(cmd_energy, energy_opts);
    add_common(cmd_certify, certify_opts);

    CLI11_PARSE(app, argc, argv);

    try {
        if (cmd_run->parsed()) return momentum::cmd_run(load(run_opts), std::cout);
        if (cmd_energy->parsed()) return momentum::cmd_energy(load(energy_opts), std::cout);
        if (cmd_certify->parsed()) return momentum::cmd_certify(load(certify_opts), std::cout);
    } catch (const momentum::config_error& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return momentum::kExitError;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return momentum::kExitError;
    }
    return momentum::kExitError;
}
