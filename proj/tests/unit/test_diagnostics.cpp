#include "doctest.h"

#include <cmath>
#include <numbers>
#include <stdexcept>

#include "benes/diagnostics.hpp"
#include "benes/exact.hpp"
#include "benes/training.hpp"

using namespace benes;

namespace {

std::vector<double> sample_pdf(const Domain1D& d, double m, double sd) {
    std::vector<double> v(d.resolution);
    for (int i = 0; i < d.resolution; ++i) {
        const double u = (d.point(i) - m) / sd;
        v[i] = std::exp(-0.5 * u * u) / (sd * std::sqrt(2 * std::numbers::pi));
    }
    return v;
}

}  // namespace

TEST_CASE("trapezoid rule") {
    CHECK(trapezoid(std::vector<double>{1.0, 1.0, 1.0}, 0.5) == 1.0);
    CHECK(trapezoid(std::vector<double>{0.0, 1.0}, 2.0) == 1.0);
    CHECK(trapezoid(std::vector<double>{3.0}, 1.0) == 0.0);
}

TEST_CASE("density mean examples") {
    const Domain1D sym{-1.0, 3.0, 201};
    std::vector<double> tri(sym.resolution);
    for (int i = 0; i < sym.resolution; ++i) tri[i] = std::max(0.0, 2.0 - std::abs(sym.point(i) - 1.0));
    CHECK(density_mean(sym, tri) == doctest::Approx(1.0).epsilon(1e-12));

    const Domain1D d{-2.0, 4.0, 1000};
    CHECK(std::abs(density_mean(d, sample_pdf(d, 1.0, 0.1)) - 1.0) < 1e-6);
    CHECK(density_variance(d, sample_pdf(d, 1.0, 0.1)) == doctest::Approx(0.01).epsilon(1e-5));

    const GaussianMixture2 g{0.3, 0.7, 1.5, -0.5, 0.04};
    std::vector<double> v(d.resolution);
    for (int i = 0; i < d.resolution; ++i) v[i] = g.pdf(d.point(i));
    CHECK(std::abs(density_mean(d, v) - g.mean()) < 1e-6);

    CHECK_THROWS_AS(density_mean(d, std::vector<double>(1000, 0.0)), std::domain_error);
    CHECK_THROWS_AS(density_mean(d, std::vector<double>(999, 1.0)), std::invalid_argument);
}

TEST_CASE("probability mass examples") {
    const Domain1D d{-9.0, 2.5, 1000};
    // the domain cuts the Gaussian at +5 sd: exact mass is Phi(5) - Phi(-18)
    const double inside = 0.5 * (std::erf(5.0 / std::sqrt(2.0)) - std::erf(-18.0 / std::sqrt(2.0)));
    CHECK(std::abs(probability_mass(d, sample_pdf(d, 0.0, 0.5)) - inside) < 1e-8);
    CHECK(std::abs(probability_mass(d, sample_pdf(d, -3.0, 0.5)) - 1.0) < 1e-8);
    CHECK(probability_mass(d, std::vector<double>(1000, 0.0)) == 0.0);
}

TEST_CASE("L2 distance examples") {
    const std::vector<double> a{1.0, 2.0, 3.0};
    CHECK(l2_grid_error(a, a, 0.1) == 0.0);
    const Domain1D unit{0.0, 1.0, 101};
    std::vector<double> x(101, 0.0), y(101, 0.3);
    CHECK(l2_grid_error(x, y, unit.spacing()) == doctest::Approx(0.3 * std::sqrt(1.01)).epsilon(1e-12));
    CHECK_THROWS(l2_grid_error(a, std::vector<double>{1.0}, 0.1));

    // closed form: ||phi - phi(.-mu)||^2 = (1 - exp(-mu^2/4)) / sqrt(pi)
    const Domain1D d{-6.0, 6.0, 1000};
    const double exact = std::sqrt((1.0 - std::exp(-0.01 / 4.0)) / std::sqrt(std::numbers::pi));
    const double est = l2_grid_error(sample_pdf(d, 0.0, 1.0), sample_pdf(d, 0.1, 1.0), d.spacing());
    CHECK(std::abs(est - exact) < 1e-3);
}

TEST_CASE("abs error of means is symmetric") {
    const Domain1D a{-3.0, 3.0, 300};
    const Domain1D b{-1.0, 5.0, 500};
    const auto pa = sample_pdf(a, 0.2, 0.4);
    const auto pb = sample_pdf(b, 1.7, 0.6);
    CHECK(abs_error_means(a, pa, b, pb) == abs_error_means(b, pb, a, pa));
    CHECK(abs_error_means(a, pa, b, pb) == doctest::Approx(1.5).epsilon(1e-4));
}

TEST_CASE("reference prior matches the heat kernel without drift") {
    BenesParameters p{0.0, 0.0, 0.5, 3.0, 0.0, 0.0};
    const DensityHandle prev = DensityHandle::gaussian(0.0, 0.25);
    const Domain1D d{-1.5, 1.5, 61};
    std::vector<double> se;
    const auto ref = mc_reference_prior(prev, p, d, 0.1, 10, 20'000, RngSeed{1, 0}, &se);
    const auto exact = sample_pdf(d, 0.0, std::sqrt(0.0875));
    int outside = 0;
    for (int i = 0; i < d.resolution; ++i) outside += std::abs(ref[i] - exact[i]) > 3 * se[i];
    // 3 standard errors leave about 0.3% of independent points outside
    CHECK(outside <= 2);

    const auto zero = mc_reference_prior(DensityHandle::zero(), p, d, 0.1, 10, 10, RngSeed{2, 0});
    for (double v : zero) CHECK(v == 0.0);
    CHECK(mc_reference_prior(prev, p, d, 0.1, 10, 10, RngSeed{3, 0}) ==
          mc_reference_prior(prev, p, d, 0.1, 10, 10, RngSeed{3, 0}));
    CHECK_THROWS(mc_reference_prior(prev, p, d, 0.1, 10, 0, RngSeed{}));
}
