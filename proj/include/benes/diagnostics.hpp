#pragma once

#include <span>
#include <vector>

#include "benes/model.hpp"
#include "benes/random.hpp"

namespace benes {

class DensityHandle;

double trapezoid(std::span<const double> values, double spacing);

double probability_mass(const Domain1D& grid, std::span<const double> values);

// Self-normalised trapezoid mean; throws std::domain_error on zero mass.
double density_mean(const Domain1D& grid, std::span<const double> values);
double density_variance(const Domain1D& grid, std::span<const double> values);

// sqrt(sum (a_i - b_i)^2 * spacing)
double l2_grid_error(std::span<const double> a, std::span<const double> b, double spacing);

// |mean(a) - mean(b)| for two gridded densities.
double abs_error_means(const Domain1D& grid_a, std::span<const double> a, const Domain1D& grid_b,
                       std::span<const double> b);

// Direct Feynman-Kac estimate of the prior: for each grid point z, the mean of
// prev(X_T) exp(sum r dtau) over auxiliary paths started at z.
std::vector<double> mc_reference_prior(const DensityHandle& prev, const BenesParameters& p,
                                       const Domain1D& domain, double dt, int substeps,
                                       int samples_per_point, RngSeed rng,
                                       std::vector<double>* standard_errors = nullptr);

struct StepDiagnostics {
    int step = 0;
    double time = 0.0;
    double mean_estimate = 0.0;
    double mean_exact = 0.0;
    double abs_error_means = 0.0;
    double l2_error_prior = 0.0;  // NaN when no reference prior was computed
    double prior_mass = 0.0;
    double acceptance_rate = 0.0;
};

}  // namespace benes
