#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <vector>

#include "benes/config.hpp"
#include "benes/model.hpp"
#include "benes/splitting.hpp"

namespace benes {

// Fine-grid signal and observation paths of one experiment.
struct PathPair {
    PathRecord signal;
    PathRecord observation;
};

// Loads signal_csv/observation_csv when set, otherwise simulates from the seeds.
PathPair experiment_paths(const RunConfig& config);

FilterSettings filter_settings(const RunConfig& config);

// One entry for the fixed domain, N+1 entries (from the closed-form posterior) when adapted.
std::vector<Domain1D> domain_schedule(const RunConfig& config, DomainMode mode, const PathRecord& observation);

void write_domains_csv(const std::filesystem::path& path, std::span<const Domain1D> domains);

// Subcommands. Each returns a process exit status and writes into config.output_dir.
int cmd_simulate(const RunConfig& config, std::ostream& log);
int cmd_run(const RunConfig& config, DomainMode mode, std::ostream& log);
int cmd_exact(const RunConfig& config, std::ostream& log);
int cmd_particle(const RunConfig& config, std::ostream& log);

struct ValidateOptions {
    bool quick = false;
    std::optional<std::filesystem::path> checkpoint;  // network file to load and check
    std::filesystem::path csv_dir;                    // per-check CSVs, empty skips
};
int cmd_validate(const ValidateOptions& options, std::ostream& log);

// Regenerates the SVG plots of a finished run directory from its CSVs.
int cmd_plot(const std::filesystem::path& run_dir, std::ostream& log);

}  // namespace benes
