#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "benes/model.hpp"

namespace benes {

// Outcome of one oracle check. `detail` is a one-line human summary.
struct CheckResult {
    std::string name;
    bool passed = false;
    std::string detail;
    double seconds = 0.0;
};

// Analytic gradient of the training loss against central finite differences over
// random nets and batches. Passes when every net's relative error is below `tolerance`.
struct GradientCheckOptions {
    int nets = 20;
    int batch = 16;
    double step = 1e-5;
    double tolerance = 1e-4;
    std::uint64_t seed = 11;
    std::filesystem::path csv;  // per-net errors, empty skips
};
CheckResult check_gradients(const GradientCheckOptions& o);

// Closed-form posterior mean against a bootstrap particle filter fed the fine observation
// increments. A step passes when |difference| < se_multiple particle standard errors.
struct ExactCheckOptions {
    BenesParameters params;
    TimeGrid grid{0.0, 0.1, 40, 100};
    long particles = 100'000;
    double se_multiple = 3.0;
    int min_passing = 38;
    std::uint64_t seed_signal = 21;
    std::uint64_t seed_observation = 22;
    std::uint64_t seed_particles = 23;
    std::filesystem::path csv;
};
CheckResult check_exact_vs_particles(const ExactCheckOptions& o);

// Full filter pipeline on the linear model against the Kalman-Bucy recursion. The domain of
// step n covers the Kalman predicted and posterior means padded by pad_stds predicted
// standard deviations.
struct LinearCheckOptions {
    BenesParameters params{0.0, 0.0, 0.5, 3.0, 0.0, 0.0};
    TimeGrid grid{0.0, 0.1, 10, 10};
    double prior_std = 0.25;
    double pad_stds = 5.0;
    int resolution = 1000;
    int epochs = 1202;
    int batch = 256;
    long mc_samples = 100'000;
    double mean_tolerance = 0.1;
    double variance_relative_tolerance = 0.3;
    std::uint64_t seed = 31;
    std::filesystem::path csv;
};
CheckResult check_linear_pipeline(const LinearCheckOptions& o);

// One prediction step with zero drift from N(0, prior_std^2); the trained prior must match
// N(0, prior_std^2 + sigma^2 dt) in relative L2 on the grid.
struct HeatKernelCheckOptions {
    double sigma = 0.5;
    double dt = 0.1;
    int substeps = 10;
    double prior_std = 0.25;
    Domain1D domain{-2.0, 2.0, 1000};
    int epochs = 6002;
    int batch = 600;
    double tolerance = 0.05;
    std::uint64_t seed = 41;
    std::filesystem::path csv;
};
CheckResult check_heat_kernel(const HeatKernelCheckOptions& o);

// Monte-Carlo normalisation constant against dense trapezoid quadrature of xi * NN for
// random positive nets and observations.
struct NormalizationCheckOptions {
    BenesParameters params;
    Domain1D domain{-9.0, 2.5, 1000};
    double dt = 0.1;
    int nets = 20;
    long mc_samples = 100'000;
    int quadrature_points = 100'000;
    double se_multiple = 3.0;
    std::uint64_t seed = 51;
    std::filesystem::path csv;
};
CheckResult check_normalization(const NormalizationCheckOptions& o);

// Reduced sample counts (10x smaller) and widened tolerances.
GradientCheckOptions quick(GradientCheckOptions o);
ExactCheckOptions quick(ExactCheckOptions o);
LinearCheckOptions quick(LinearCheckOptions o);
HeatKernelCheckOptions quick(HeatKernelCheckOptions o);
NormalizationCheckOptions quick(NormalizationCheckOptions o);

}  // namespace benes
