#include "benes/exact.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include "benes/csv.hpp"

namespace benes {

namespace {

// sinh(a)/sinh(b) for 0 <= a <= b without overflow.
double sinh_ratio(double a, double b) {
    if (a == 0.0) return 0.0;
    return std::exp(a - b) * (-std::expm1(-2.0 * a)) / (-std::expm1(-2.0 * b));
}

}  // namespace

double GaussianMixture2::pdf(double z) const {
    const double norm = 1.0 / std::sqrt(2.0 * std::numbers::pi * variance);
    const double dp = z - mu_plus;
    const double dm = z - mu_minus;
    return norm * (w_plus * std::exp(-dp * dp / (2.0 * variance)) +
                   w_minus * std::exp(-dm * dm / (2.0 * variance)));
}

double GaussianMixture2::total_variance() const {
    const double m = mean();
    return variance + w_plus * (mu_plus - m) * (mu_plus - m) + w_minus * (mu_minus - m) * (mu_minus - m);
}

BenesMomentState benes_moments(const BenesParameters& p, const PathRecord& obs, double t,
                               const BenesOptions& opts) {
    if (!(t > 0.0)) throw std::domain_error("Benes moments are singular at t <= 0");
    p.validate();
    const std::size_t last = obs.index_of(t);
    if (last == 0) throw std::domain_error("Benes moments need at least one observation increment");

    // kappa is the exponential rate of the kernel sinh(kappa s)/sinh(kappa t).
    double zeta = 0.0;
    double kappa = 0.0;
    if (opts.formula == BenesFormula::corrected) {
        zeta = std::abs(p.h1);
        kappa = p.h1 * p.sigma;
    } else {
        zeta = std::sqrt(p.alpha * p.alpha / (p.sigma * p.sigma) + p.h1 * p.h1);
        kappa = zeta * p.sigma;
    }
    const double akt = std::abs(kappa) * t;
    const double s_t = std::sinh(kappa * t);
    const double coth_t = 1.0 / std::tanh(kappa * t);

    double integral = 0.0;
    double k_prev = sinh_ratio(std::abs(kappa) * obs.times[0], akt);
    for (std::size_t k = 0; k < last; ++k) {
        const double k_next = sinh_ratio(std::abs(kappa) * obs.times[k + 1], akt);
        const double weight = opts.rule == IntegralRule::trapezoid ? 0.5 * (k_prev + k_next) : k_prev;
        integral += weight * (obs.values[k + 1] - obs.values[k]);
        k_prev = k_next;
    }

    const double center = p.h1 * integral + (p.h2 + p.h1 * p.x0) / (p.sigma * s_t) -
                          (p.h2 / p.sigma) * coth_t;
    BenesMomentState state;
    state.t = t;
    state.m_plus = center + p.alpha / p.sigma;
    state.m_minus = center - p.alpha / p.sigma;
    state.v = p.h1 * coth_t / (2.0 * p.sigma);
    state.zeta = zeta;
    state.log_weight_shift = opts.formula == BenesFormula::corrected ? p.beta : 0.0;
    return state;
}

GaussianMixture2 benes_density(const BenesMomentState& s) {
    const double lp = s.m_plus * s.m_plus / (4.0 * s.v) + s.log_weight_shift;
    const double lm = s.m_minus * s.m_minus / (4.0 * s.v) - s.log_weight_shift;
    const double top = std::max(lp, lm);
    const double ep = std::exp(lp - top);
    const double em = std::exp(lm - top);
    GaussianMixture2 g;
    g.w_plus = ep / (ep + em);
    g.w_minus = em / (ep + em);
    g.mu_plus = s.m_plus / (2.0 * s.v);
    g.mu_minus = s.m_minus / (2.0 * s.v);
    g.variance = 1.0 / (2.0 * s.v);
    return g;
}

std::vector<Domain1D> benes_support_schedule(const BenesParameters& p, const PathRecord& obs,
                                             const TimeGrid& grid, double pad_stds,
                                             const Domain1D& initial, const BenesOptions& opts) {
    std::vector<Domain1D> out;
    out.reserve(grid.n_steps + 1);
    out.push_back(initial);
    for (int n = 1; n <= grid.n_steps; ++n) {
        const GaussianMixture2 g = benes_density(benes_moments(p, obs, grid.time(n), opts));
        const double pad = pad_stds * std::sqrt(g.variance);
        Domain1D d;
        d.lo = std::min(g.mu_plus, g.mu_minus) - pad;
        d.hi = std::max(g.mu_plus, g.mu_minus) + pad;
        d.resolution = initial.resolution;
        out.push_back(d);
    }
    return out;
}

void write_density_csv(const std::filesystem::path& path, const GaussianMixture2& mixture,
                       const Domain1D& domain) {
    CsvWriter csv(path, {"z", "density"});
    for (int i = 0; i < domain.resolution; ++i) {
        const double z = domain.point(i);
        csv.row({z, mixture.pdf(z)});
    }
}

}  // namespace benes
