#include "doctest.h"

#include <cmath>
#include <filesystem>
#include <numeric>

#include "benes/csv.hpp"
#include "benes/errors.hpp"
#include "benes/reference.hpp"

using namespace benes;

namespace {

ParticleEnsemble gaussian_ensemble(std::size_t n, double mean, double sd, std::uint64_t seed) {
    Engine e = make_engine(RngSeed{seed, 0});
    std::normal_distribution<double> g(mean, sd);
    ParticleEnsemble ens = ParticleEnsemble::at_point(0.0, n);
    for (auto& x : ens.positions) x = g(e);
    return ens;
}

}  // namespace

TEST_CASE("without a sensor the weights stay uniform") {
    BenesParameters p{0.0, 0.0, 0.5, 0.0, 0.0, 0.0};
    const ParticleEnsemble start = gaussian_ensemble(50'000, 0.0, 0.2, 1);
    const ParticleEnsemble out = particle_filter_step(start, p, 0.7, 0.1, 10, RngSeed{2, 0});
    for (double w : out.weights) CHECK(w == doctest::Approx(1.0 / 50'000).epsilon(1e-12));
    CHECK(out.ess == doctest::Approx(50'000));
    // pure diffusion adds sigma^2 dt = 0.025 to the variance
    CHECK(out.variance() == doctest::Approx(0.04 + 0.025).epsilon(0.03));
}

TEST_CASE("a single particle is its own mean") {
    BenesParameters p;
    const ParticleEnsemble out = particle_filter_step(ParticleEnsemble::at_point(0.3, 1), p, 0.2, 0.1, 10, RngSeed{3, 0});
    CHECK(out.weights[0] == 1.0);
    CHECK(out.mean() == out.positions[0]);
}

TEST_CASE("weights are normalised and ess is bounded") {
    BenesParameters p;
    ParticleEnsemble ens = gaussian_ensemble(10'000, 0.0, 1.0, 4);
    for (int k = 0; k < 5; ++k) {
        ens = particle_filter_step(ens, p, 0.3 * (k - 2), 0.1, 10, RngSeed{5, static_cast<std::uint64_t>(k)}, 0.0);
        const double total = std::accumulate(ens.weights.begin(), ens.weights.end(), 0.0);
        CHECK(std::abs(total - 1.0) < 1e-12);
        for (double w : ens.weights) CHECK(w >= 0.0);
        CHECK(ens.ess >= 1.0);
        CHECK(ens.ess <= 10'000.0 * (1 + 1e-12));
    }
}

TEST_CASE("systematic resampling preserves the weighted mean in expectation") {
    ParticleEnsemble ens = gaussian_ensemble(200, 1.0, 2.0, 6);
    Engine e = make_engine(RngSeed{7, 0});
    std::uniform_real_distribution<double> u(0.0, 1.0);
    double total = 0;
    for (auto& w : ens.weights) total += (w = u(e));
    for (auto& w : ens.weights) w /= total;
    const double target = ens.mean();
    double s = 0, s2 = 0;
    const int trials = 1000;
    for (int t = 0; t < trials; ++t) {
        ParticleEnsemble copy = ens;
        systematic_resample(copy, e);
        const double m = copy.mean();
        s += m;
        s2 += m * m;
        CHECK(copy.ess == 200.0);
    }
    const double mean = s / trials;
    const double se = std::sqrt((s2 / trials - mean * mean) / trials);
    CHECK(std::abs(mean - target) < 3 * se + 1e-12);
}

TEST_CASE("vanishing weights are a degenerate ensemble") {
    BenesParameters p;
    ParticleEnsemble ens = ParticleEnsemble::at_point(0.0, 10);
    std::fill(ens.weights.begin(), ens.weights.end(), 0.0);
    CHECK_THROWS_AS(particle_filter_step(ens, p, 0.1, 0.1, 10, RngSeed{}), DegenerateEnsemble);
    CHECK_THROWS(particle_filter_step(ParticleEnsemble{}, p, 0.1, 0.1, 10, RngSeed{}));
}

TEST_CASE("kalman examples") {
    BenesParameters p{0.0, 0.0, 0.5, 1e-12, 0.0, 0.0};
    const KalmanState s{0.2, 0.3};
    const KalmanState a = kalman_bucy_step(s, p, 0.5, 0.1);
    CHECK(a.variance == doctest::Approx(0.3 + 0.025).epsilon(1e-9));
    CHECK(a.mean == doctest::Approx(0.2).epsilon(1e-9));

    p.h1 = 1e6;
    p.h2 = 2.0;
    const double truth = 0.4;
    const double inc = (p.h1 * truth + p.h2) * 0.1;
    const KalmanState b = kalman_bucy_step({truth, 1e-4}, p, inc, 0.1);
    CHECK(b.mean == doctest::Approx(truth).epsilon(1e-9));

    p.alpha = 1.0;
    CHECK_THROWS_AS(kalman_bucy_step(s, p, 0.1, 0.1), std::invalid_argument);
}

TEST_CASE("kalman variance grows monotonically without updates") {
    BenesParameters p{0.0, 0.0, 0.5, 1e-12, 0.0, 0.0};
    KalmanState s{0.0, 1e-6};
    for (int k = 0; k < 50; ++k) {
        const KalmanState next = kalman_bucy_step(s, p, 0.0, 0.1);
        CHECK(next.variance > s.variance);
        s = next;
    }
}

TEST_CASE("kalman recursion matches a million-particle filter on the linear model") {
    // The particle step weights before it moves, so the matching Kalman order is
    // update, then predict: an update-only step (sigma = 0) followed by ordinary steps.
    BenesParameters p{0.0, 0.0, 0.5, 3.0, 0.2, 0.0};
    BenesParameters update_only = p;
    update_only.sigma = 0.0;
    const std::vector<double> inc{0.05, -0.1, 0.2, 0.31, 0.0, -0.25, 0.12, 0.4, 0.33, -0.05};
    ParticleEnsemble ens = gaussian_ensemble(1'000'000, 0.0, 0.25, 8);
    KalmanState ks{0.0, 0.0625};
    for (std::size_t k = 0; k < inc.size(); ++k) {
        ens = particle_filter_step(ens, p, inc[k], 0.1, 10, RngSeed{9, k});
        ks = kalman_bucy_step(ks, k == 0 ? update_only : p, inc[k], 0.1);
        const KalmanState predicted{ks.mean, ks.variance + p.sigma * p.sigma * 0.1};
        CAPTURE(k);
        CHECK(std::abs(ens.mean() - predicted.mean) < 3 * ens.standard_error());
        // variance of the sample variance of a Gaussian: 2 v^2 / n_eff
        const double var_se = predicted.variance * std::sqrt(2.0 / ens.ess);
        CHECK(std::abs(ens.variance() - predicted.variance) < 3 * var_se);
    }
}

TEST_CASE("ensemble summary CSV") {
    const std::vector<EnsembleSummary> rows{{1, 0.5, 0.1, 900, 0.01}, {2, -0.25, 0.2, 800, 0.02}};
    const auto file = std::filesystem::temp_directory_path() / "benes_ens.csv";
    write_ensemble_csv(file, rows);
    const CsvTable t = read_csv(file);
    CHECK(t.header == std::vector<std::string>{"step", "mean", "variance", "ess"});
    REQUIRE(t.rows.size() == 2);
    CHECK(parse_double(t.rows[1][1]) == -0.25);
    std::filesystem::remove(file);
}
