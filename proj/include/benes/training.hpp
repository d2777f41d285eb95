#pragma once

#include <filesystem>
#include <memory>
#include <optional>
#include <span>
#include <variant>
#include <vector>

#include "benes/exact.hpp"
#include "benes/model.hpp"
#include "benes/network.hpp"
#include "benes/random.hpp"
#include "benes/sde.hpp"

namespace benes {

struct GaussianDensity {
    double mean = 0.0;
    double std = 1.0;
};

struct ZeroDensity {};

// p^{n-1}(z) = xi_{n-1}(z) * NN_{n-1}(z) / C_{n-1} on the previous domain, zero outside it.
struct CompositePosterior {
    std::shared_ptr<const Network> net;
    Domain1D domain;
    BenesParameters params;
    double z_n = 0.0;
    double dt = 0.1;
    double c_n = 1.0;
};

// Density that seeds a prediction step.
class DensityHandle {
public:
    using Variant = std::variant<GaussianDensity, GaussianMixture2, CompositePosterior, ZeroDensity>;

    DensityHandle() : v_(ZeroDensity{}) {}
    DensityHandle(Variant v) : v_(std::move(v)) {}

    static DensityHandle gaussian(double mean, double std) { return DensityHandle(GaussianDensity{mean, std}); }
    static DensityHandle zero() { return DensityHandle(ZeroDensity{}); }

    double operator()(double z) const;
    void evaluate(std::span<const double> z, std::span<double> out) const;

    const Variant& variant() const { return v_; }

private:
    Variant v_;
};

struct TrainingBatch {
    std::vector<double> xi;
    std::vector<double> target;
};

// target_i = prev(end_i) * exp(log_weight_i), xi_i = start_i.
TrainingBatch make_targets(const DensityHandle& prev, std::span<const WeightedEndpoint> endpoints);

struct TrainingTrace {
    std::vector<double> loss;  // one entry per epoch
    std::vector<double> lr;
    std::vector<int> l2_epochs;  // epochs at which l2_error was measured
    std::vector<double> l2_error;
};

struct TrainedPrior {
    Network net;
    TrainingTrace trace;
};

struct PredictionProblem {
    const DensityHandle* prev = nullptr;
    BenesParameters params;
    Domain1D domain;
    double dt = 0.1;
    int substeps = 10;
    // Optional reference prior on the domain grid for the L2 trace.
    const std::vector<double>* reference = nullptr;
    // Starting point when TrainingConfig::warm_start is set.
    const Network* warm_start = nullptr;
};

// Fits NN(z) ~ E[prev(X_T) exp(int r) | X_0 = z] on the domain with a fresh batch of
// auxiliary paths every epoch. Throws TrainingFailure on a non-finite loss.
TrainedPrior train_prediction_step(const PredictionProblem& problem, const TrainingConfig& cfg, RngSeed rng);

void write_trace_csv(const std::filesystem::path& path, const TrainingTrace& trace);

}  // namespace benes
