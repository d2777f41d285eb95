#include "benes/diagnostics.hpp"

#include <cmath>
#include <stdexcept>

#include "benes/parallel.hpp"
#include "benes/sde.hpp"
#include "benes/training.hpp"

namespace benes {

double trapezoid(std::span<const double> values, double spacing) {
    if (values.size() < 2) return 0.0;
    double s = 0.5 * (values.front() + values.back());
    for (std::size_t i = 1; i + 1 < values.size(); ++i) s += values[i];
    return s * spacing;
}

namespace {
void require_on_grid(const Domain1D& grid, std::span<const double> values) {
    if (values.size() != static_cast<std::size_t>(grid.resolution))
        throw std::invalid_argument("values do not match the grid resolution");
}
}  // namespace

double probability_mass(const Domain1D& grid, std::span<const double> values) {
    require_on_grid(grid, values);
    return trapezoid(values, grid.spacing());
}

double density_mean(const Domain1D& grid, std::span<const double> values) {
    require_on_grid(grid, values);
    const double mass = trapezoid(values, grid.spacing());
    if (mass == 0.0) throw std::domain_error("density_mean: zero mass");
    std::vector<double> zp(values.size());
    for (int i = 0; i < grid.resolution; ++i) zp[i] = grid.point(i) * values[i];
    return trapezoid(zp, grid.spacing()) / mass;
}

double density_variance(const Domain1D& grid, std::span<const double> values) {
    const double m = density_mean(grid, values);
    std::vector<double> w(values.size());
    for (int i = 0; i < grid.resolution; ++i) {
        const double d = grid.point(i) - m;
        w[i] = d * d * values[i];
    }
    return trapezoid(w, grid.spacing()) / trapezoid(values, grid.spacing());
}

double l2_grid_error(std::span<const double> a, std::span<const double> b, double spacing) {
    if (a.size() != b.size()) throw std::invalid_argument("l2_grid_error: length mismatch");
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
    return std::sqrt(s * spacing);
}

double abs_error_means(const Domain1D& grid_a, std::span<const double> a, const Domain1D& grid_b,
                       std::span<const double> b) {
    return std::abs(density_mean(grid_a, a) - density_mean(grid_b, b));
}

std::vector<double> mc_reference_prior(const DensityHandle& prev, const BenesParameters& p,
                                       const Domain1D& domain, double dt, int substeps,
                                       int samples_per_point, RngSeed rng,
                                       std::vector<double>* standard_errors) {
    if (samples_per_point < 1) throw std::invalid_argument("samples_per_point must be at least 1");
    domain.validate();
    const auto n = static_cast<std::size_t>(domain.resolution);
    std::vector<double> mean(n);
    if (standard_errors) standard_errors->assign(n, 0.0);
    parallel_for(n, [&](std::size_t i) {
        Engine engine = make_engine(rng, i);
        std::normal_distribution<double> normal;
        const double z = domain.point(static_cast<int>(i));
        std::vector<double> ends(samples_per_point);
        std::vector<double> weights(samples_per_point);
        for (int k = 0; k < samples_per_point; ++k) {
            const WeightedEndpoint e = propagate_auxiliary(p, z, dt, substeps, engine, normal);
            ends[k] = e.end;
            weights[k] = std::exp(e.log_weight);
        }
        std::vector<double> values(samples_per_point);
        prev.evaluate(ends, values);
        double s = 0.0;
        double s2 = 0.0;
        for (int k = 0; k < samples_per_point; ++k) {
            const double v = values[k] * weights[k];
            s += v;
            s2 += v * v;
        }
        const double m = s / samples_per_point;
        mean[i] = m;
        if (standard_errors && samples_per_point > 1) {
            const double var = std::max(0.0, (s2 - samples_per_point * m * m) / (samples_per_point - 1));
            (*standard_errors)[i] = std::sqrt(var / samples_per_point);
        }
    });
    return mean;
}

}  // namespace benes
