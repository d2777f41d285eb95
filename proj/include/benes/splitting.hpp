#pragma once

#include <filesystem>
#include <functional>
#include <memory>
#include <span>
#include <vector>

#include "benes/diagnostics.hpp"
#include "benes/exact.hpp"
#include "benes/model.hpp"
#include "benes/network.hpp"
#include "benes/random.hpp"
#include "benes/training.hpp"

namespace benes {

// xi_n(z) = exp(-dt/2 (z_n - h(z))^2)
inline double likelihood_xi(const BenesParameters& p, double z_n, double dt, double z) {
    const double r = z_n - sensor_h(p, z);
    return std::exp(-0.5 * dt * r * r);
}

struct NormalizationRecord {
    double z_n = 0.0;
    double c_n = 1.0;
    long mc_samples = 0;
    double acceptance_rate = 0.0;  // fraction of samples inside the network's domain
    double standard_error = 0.0;
};

// C_n = sqrt(2 pi / (dt h1^2)) E[NN(Z)], Z ~ N((z_n - h2)/h1, 1/(dt h1^2)), with NN = 0
// outside the domain. Throws NormalizationFailure (tagged with `step`) unless C_n > 0.
NormalizationRecord normalize_step(const Network& net, const Domain1D& domain, const BenesParameters& p,
                                   double obs_increment, double dt, long mc_samples, RngSeed rng,
                                   int step = 0);

struct FilterStepResult {
    int step = 0;
    double time = 0.0;
    Domain1D domain;
    std::shared_ptr<const Network> prior_net;
    NormalizationRecord normalization;
    std::vector<double> prior_grid;       // NN on the domain grid
    std::vector<double> likelihood_grid;  // xi_n on the domain grid
    std::vector<double> posterior_grid;   // max(0, xi_n NN / C_n)
    std::vector<double> reference_prior;  // empty unless a reference was requested
    TrainingTrace trace;
    StepDiagnostics diagnostics;
};

struct FilterSettings {
    TrainingConfig training;
    long mc_samples = 10'000'000;
    RngSeed training_seed{3, 0};
    RngSeed normalization_seed{4, 0};
    RngSeed reference_seed{5, 0};
    int reference_samples_per_point = 0;  // 0 skips the Monte-Carlo reference prior
    BenesOptions exact;                   // for the mean_exact diagnostic
    std::filesystem::path checkpoint_dir; // empty: no checkpoints
};

using StepCallback = std::function<void(const FilterStepResult&)>;

// `domains` has one entry (fixed domain), N entries (domain of step n at n-1) or N+1 entries
// as returned by benes_support_schedule (domain of step n at n).
std::vector<FilterStepResult> run_filter(const BenesParameters& p, const TimeGrid& grid,
                                         const DensityHandle& initial, std::span<const Domain1D> domains,
                                         const FilterSettings& settings, const PathRecord& obs,
                                         const StepCallback& on_step = {});

// Posterior state of a completed step, enough to continue the recursion.
struct StepCheckpoint {
    int step = 0;
    Domain1D domain;
    std::shared_ptr<const Network> net;
    NormalizationRecord normalization;
};

void save_step_checkpoint(const std::filesystem::path& dir, const FilterStepResult& result);
StepCheckpoint load_step_checkpoint(const std::filesystem::path& dir, int step);

DensityHandle posterior_handle(const BenesParameters& p, double dt, const StepCheckpoint& cp);

// Continues the recursion after `from.step` for steps from.step+1 .. grid.n_steps.
std::vector<FilterStepResult> resume_filter(const BenesParameters& p, const TimeGrid& grid,
                                            const StepCheckpoint& from, std::span<const Domain1D> domains,
                                            const FilterSettings& settings, const PathRecord& obs,
                                            const StepCallback& on_step = {});

void write_posterior_csv(const std::filesystem::path& path, const FilterStepResult& r);
void write_diagnostics_csv(const std::filesystem::path& path, std::span<const FilterStepResult> results);

}  // namespace benes
