#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <stdexcept>
#include <string>

#include "benes/exact.hpp"
#include "benes/model.hpp"
#include "benes/network.hpp"

namespace benes {

enum class DomainMode { fixed, adapted };

std::string to_string(DomainMode mode);
DomainMode parse_domain_mode(const std::string& s);

// Everything needed to reproduce a run. Defaults reproduce the reference experiment.
struct RunConfig {
    BenesParameters model;
    TimeGrid grid;
    double prior_mean = 0.0;
    double prior_std = 0.001;
    DomainMode domain_mode = DomainMode::fixed;
    Domain1D domain{-9.0, 2.5, 1000};
    double pad_stds = 5.0;
    TrainingConfig training;
    long mc_samples = 10'000'000;
    int reference_samples = 1000;  // Monte-Carlo reference prior samples per grid point, 0 disables
    int particles = 100'000;
    double resample_threshold = 0.5;
    BenesOptions exact;

    std::uint64_t seed_signal = 4;
    std::uint64_t seed_observation = 4;
    std::uint64_t seed_training = 7;
    std::uint64_t seed_normalization = 8;
    std::uint64_t seed_reference = 9;
    std::uint64_t seed_particle = 10;

    std::string output_dir = "benes_run";
    // Pre-recorded paths (fine time grid); empty means simulate from the seeds.
    std::string signal_csv;
    std::string observation_csv;

    // Throws ConfigError naming the offending key.
    void validate() const;
};

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Flat `key = value` lines, '#' starts a comment, unknown keys are rejected and missing
// keys keep their defaults.
RunConfig parse_config(std::istream& in, const std::string& source = "<config>");
RunConfig load_config(const std::filesystem::path& path);

// Writes every key; parse_config(format_config(c)) reproduces c exactly.
std::string format_config(const RunConfig& config);

}  // namespace benes
