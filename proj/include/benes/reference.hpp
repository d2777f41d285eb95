#pragma once

#include <filesystem>
#include <span>
#include <vector>

#include "benes/model.hpp"
#include "benes/random.hpp"

namespace benes {

struct ParticleEnsemble {
    std::vector<double> positions;
    std::vector<double> weights;  // normalised
    double ess = 0.0;

    static ParticleEnsemble at_point(double x, std::size_t count);

    std::size_t size() const { return positions.size(); }
    double mean() const;
    double variance() const;
    // Delta-method standard error of the self-normalised mean, sqrt(sum w_i^2 (x_i - m)^2).
    double standard_error() const;
};

// Bootstrap filter over one observation interval: reweight by
// exp(h(x) dY - h(x)^2 dt / 2) at the pre-propagation position, move every particle
// `substeps` Euler-Maruyama steps under the signal drift, renormalise, and resample
// systematically when ESS < resample_threshold * P.
ParticleEnsemble particle_filter_step(const ParticleEnsemble& ens, const BenesParameters& p,
                                      double obs_increment, double dt, int substeps, RngSeed rng,
                                      double resample_threshold = 0.5);

// Systematic resampling in place; weights become uniform.
void systematic_resample(ParticleEnsemble& ens, Engine& engine);

struct KalmanState {
    double mean = 0.0;
    double variance = 1.0;
};

// Exact update for the linear subcase (alpha = 0): predict var += sigma^2 dt, then
// condition on z_n = obs_increment/dt = h1 x + h2 + noise with variance 1/dt.
KalmanState kalman_bucy_step(const KalmanState& state, const BenesParameters& p, double obs_increment, double dt);

struct EnsembleSummary {
    int step = 0;
    double mean = 0.0;
    double variance = 0.0;
    double ess = 0.0;
    double standard_error = 0.0;
};

void write_ensemble_csv(const std::filesystem::path& path, std::span<const EnsembleSummary> rows);

}  // namespace benes
