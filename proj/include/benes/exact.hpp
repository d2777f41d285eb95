#pragma once

#include <filesystem>
#include <vector>

#include "benes/model.hpp"

namespace benes {

// Closed-form constants. `corrected` uses zeta = |h1| and weights carrying exp(+-beta),
// which is what the Girsanov reduction of the tanh drift gives and what the particle
// filter confirms. `literal` keeps zeta = sqrt(alpha^2/sigma^2 + h1^2) and beta-free weights.
enum class BenesFormula { corrected, literal };

// Quadrature of the deterministic kernel against the observation increments.
enum class IntegralRule { trapezoid, left };

struct BenesOptions {
    BenesFormula formula = BenesFormula::corrected;
    IntegralRule rule = IntegralRule::trapezoid;
};

struct BenesMomentState {
    double t = 0.0;
    double m_plus = 0.0;
    double m_minus = 0.0;
    double v = 0.0;
    double zeta = 0.0;
    double log_weight_shift = 0.0;  // +-beta added to the log weights (0 for the literal form)
};

struct GaussianMixture2 {
    double w_plus = 0.5;
    double w_minus = 0.5;
    double mu_plus = 0.0;
    double mu_minus = 0.0;
    double variance = 1.0;

    double pdf(double z) const;
    double mean() const { return w_plus * mu_plus + w_minus * mu_minus; }
    // Variance of the mixture, including the spread between the two components.
    double total_variance() const;
};

// Moments at time t from every observation sample up to t. Pass coarsen(obs, grid) to use
// only the filter increments, or the raw substep path for oracle studies.
BenesMomentState benes_moments(const BenesParameters& p, const PathRecord& obs, double t,
                               const BenesOptions& opts = {});

GaussianMixture2 benes_density(const BenesMomentState& state);

// Entry 0 is `initial`; entry n >= 1 spans both component means at t_n padded by
// pad_stds component standard deviations.
std::vector<Domain1D> benes_support_schedule(const BenesParameters& p, const PathRecord& obs,
                                             const TimeGrid& grid, double pad_stds,
                                             const Domain1D& initial, const BenesOptions& opts = {});

void write_density_csv(const std::filesystem::path& path, const GaussianMixture2& mixture,
                       const Domain1D& domain);

}  // namespace benes
