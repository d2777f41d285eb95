#pragma once

#include <filesystem>
#include <random>
#include <vector>

#include "benes/model.hpp"
#include "benes/random.hpp"

namespace benes {

// Start point, end point and discretised Feynman-Kac exponent sum_j r(X_j) dtau
// of one auxiliary diffusion path.
struct WeightedEndpoint {
    double start = 0.0;
    double end = 0.0;
    double log_weight = 0.0;
};

// Auxiliary batches draw one engine per block of this many entries.
inline constexpr std::size_t kAuxiliaryChunk = 256;

PathRecord simulate_signal(const BenesParameters& p, const TimeGrid& grid, RngSeed rng);

PathRecord simulate_observation(const BenesParameters& p, const PathRecord& signal, RngSeed rng);

std::vector<WeightedEndpoint> sample_auxiliary_batch(const BenesParameters& p, const Domain1D& domain,
                                                     double dt, int substeps, std::size_t batch,
                                                     RngSeed rng);

// Advances one auxiliary path from `start` over [0, dt] with left-endpoint weights.
inline WeightedEndpoint propagate_auxiliary(const BenesParameters& p, double start, double dt,
                                            int substeps, Engine& engine,
                                            std::normal_distribution<double>& normal) {
    const double h = dt / substeps;
    const double noise = p.sigma * std::sqrt(h);
    double x = start;
    double log_w = 0.0;
    for (int j = 0; j < substeps; ++j) {
        log_w += potential_r(p, x) * h;
        x += auxiliary_drift_b(p, x) * h + noise * normal(engine);
    }
    return {start, x, log_w};
}

void write_path_csv(const std::filesystem::path& path, const PathRecord& record);
PathRecord read_path_csv(const std::filesystem::path& path, PathKind kind);

}  // namespace benes
