#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <sstream>

#include "benes/commands.hpp"
#include "benes/config.hpp"
#include "benes/parallel.hpp"

namespace {

struct Overrides {
    std::string config_path;
    std::string output;
    int steps = 0;
    int epochs = 0;
    int batch = 0;
    long mc_samples = 0;
    std::vector<std::string> set;
};

void add_common(CLI::App* cmd, Overrides& o) {
    cmd->add_option("-c,--config", o.config_path, "config file (key = value lines)")->check(CLI::ExistingFile);
    cmd->add_option("-o,--output", o.output, "output directory");
    cmd->add_option("--steps", o.steps, "number of filter steps")->check(CLI::PositiveNumber);
    cmd->add_option("--epochs", o.epochs, "training epochs per step")->check(CLI::PositiveNumber);
    cmd->add_option("--batch", o.batch, "training batch size")->check(CLI::PositiveNumber);
    cmd->add_option("--mc-samples", o.mc_samples, "normalisation samples per step")->check(CLI::PositiveNumber);
    cmd->add_option("--set", o.set, "extra key=value config overrides");
}

// Overrides are appended as config lines so they go through the same parser and checks.
benes::RunConfig build_config(const Overrides& o) {
    std::ostringstream text;
    if (!o.config_path.empty()) {
        std::ifstream in(o.config_path);
        if (!in) throw benes::ConfigError("cannot open config file " + o.config_path);
        text << in.rdbuf() << '\n';
    }
    if (!o.output.empty()) text << "output_dir = " << o.output << '\n';
    if (o.steps > 0) text << "steps = " << o.steps << '\n';
    if (o.epochs > 0) text << "epochs = " << o.epochs << '\n';
    if (o.batch > 0) text << "batch_size = " << o.batch << '\n';
    if (o.mc_samples > 0) text << "mc_samples = " << o.mc_samples << '\n';
    for (const auto& kv : o.set) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos) throw benes::ConfigError("--set expects key=value, got '" + kv + "'");
        text << kv.substr(0, eq) << " = " << kv.substr(eq + 1) << '\n';
    }
    std::istringstream in(text.str());
    return benes::parse_config(in, o.config_path.empty() ? "<arguments>" : o.config_path);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Deep splitting filter for the Benes model"};
    app.require_subcommand(1);
    int workers = 1;
    app.add_option("--workers", workers, "worker threads (results do not depend on it)")
        ->check(CLI::PositiveNumber);

    Overrides sim_o, run_o, exact_o, particle_o;
    auto* simulate = app.add_subcommand("simulate", "simulate and store signal and observation paths");
    add_common(simulate, sim_o);

    auto* run = app.add_subcommand("run", "run the deep filter");
    add_common(run, run_o);
    std::string mode;
    run->add_option("--mode", mode, "domain mode, overrides domain_mode from the config")->check(CLI::IsMember({"fixed", "adapted"}));

    auto* exact = app.add_subcommand("exact", "closed-form posterior on the observation path");
    add_common(exact, exact_o);

    auto* particle = app.add_subcommand("particle", "bootstrap particle filter on the observation path");
    add_common(particle, particle_o);

    auto* validate = app.add_subcommand("validate", "run the oracle checks");
    benes::ValidateOptions vopt;
    std::string checkpoint, csv_dir;
    validate->add_flag("--quick", vopt.quick, "10x fewer samples, wider tolerances");
    validate->add_option("--checkpoint", checkpoint, "network checkpoint to load first");
    validate->add_option("--csv-dir", csv_dir, "directory for per-check CSVs");

    auto* plot = app.add_subcommand("plot", "redraw plots of a run directory");
    std::string run_dir;
    plot->add_option("dir", run_dir, "run output directory")->required();

    CLI11_PARSE(app, argc, argv);
    benes::set_worker_count(static_cast<unsigned>(workers));

    try {
        if (simulate->parsed()) return benes::cmd_simulate(build_config(sim_o), std::cout);
        if (run->parsed()) {
            const benes::RunConfig config = build_config(run_o);
            return benes::cmd_run(config, mode.empty() ? config.domain_mode : benes::parse_domain_mode(mode), std::cout);
        }
        if (exact->parsed()) return benes::cmd_exact(build_config(exact_o), std::cout);
        if (particle->parsed()) return benes::cmd_particle(build_config(particle_o), std::cout);
        if (validate->parsed()) {
            if (!checkpoint.empty()) vopt.checkpoint = checkpoint;
            vopt.csv_dir = csv_dir;
            return benes::cmd_validate(vopt, std::cout);
        }
        if (plot->parsed()) return benes::cmd_plot(run_dir, std::cout);
    } catch (const benes::ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
