#include "doctest.h"

#include <cmath>
#include <filesystem>
#include <numeric>

#include "benes/parallel.hpp"
#include "benes/sde.hpp"

using namespace benes;

namespace {

struct Moments {
    double mean = 0, se = 0;
};

template <class F>
Moments sample_mean(std::size_t n, F&& draw) {
    double s = 0, s2 = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const double v = draw(i);
        s += v;
        s2 += v * v;
    }
    const double m = s / n;
    return {m, std::sqrt((s2 / n - m * m) / n)};
}

}  // namespace

TEST_CASE("signal without drift or noise stays at x0") {
    BenesParameters p{0.0, 0.0, 1e-300, 3.0, 0.0, 0.0};
    const PathRecord x = simulate_signal(p, TimeGrid{0.0, 0.1, 5, 10}, RngSeed{1, 0});
    REQUIRE(x.size() == 51);
    for (double v : x.values) CHECK(std::abs(v) < 1e-290);
    CHECK(x.times.back() == doctest::Approx(0.5));
}

TEST_CASE("signal is Brownian with variance sigma^2 t when alpha = 0") {
    BenesParameters p{0.0, 0.0, 0.5, 3.0, 0.0, 0.0};
    const TimeGrid g{0.0, 0.1, 40, 10};
    const std::size_t n = 100'000;
    std::vector<double> end(n);
    for (std::size_t s = 0; s < n; ++s) end[s] = simulate_signal(p, g, RngSeed{s, 0}).values.back();
    const Moments m2 = sample_mean(n, [&](std::size_t i) { return end[i] * end[i]; });
    CHECK(std::abs(m2.mean - 1.0) < 3 * m2.se);
}

TEST_CASE("signal moves away from the origin at about alpha*sigma") {
    BenesParameters p{3.0, 0.0, 0.5, 3.0, 0.0, 0.0};
    const TimeGrid g{0.0, 0.1, 40, 10};
    const std::size_t n = 10'000;
    double a2 = 0, a4 = 0;
    for (std::size_t s = 0; s < n; ++s) {
        const PathRecord x = simulate_signal(p, g, RngSeed{s, 7});
        a2 += std::abs(x.value_at(2.0));
        a4 += std::abs(x.value_at(4.0));
    }
    const double speed = (a4 - a2) / n / 2.0;
    CHECK(speed == doctest::Approx(1.5).epsilon(0.05));
}

TEST_CASE("signal first four moments after one step without drift") {
    BenesParameters p{0.0, 0.0, 0.5, 3.0, 0.0, 0.3};
    const TimeGrid g{0.0, 0.1, 1, 10};
    const std::size_t n = 1'000'000;
    std::vector<double> d(n);
    for (std::size_t s = 0; s < n; ++s) d[s] = simulate_signal(p, g, RngSeed{s, 3}).values.back() - p.x0;
    const double v = 0.25 * 0.1;
    const double exact[4] = {0.0, v, 0.0, 3 * v * v};
    for (int k = 1; k <= 4; ++k) {
        const Moments m = sample_mean(n, [&](std::size_t i) { return std::pow(d[i], k); });
        CAPTURE(k);
        CHECK(std::abs(m.mean - exact[k - 1]) < 4 * m.se);
    }
}

TEST_CASE("observation examples") {
    BenesParameters p{3.0, 0.0, 0.5, 0.0, 0.0, 0.0};
    const TimeGrid g{0.0, 0.1, 10, 10};
    PathRecord flat;
    flat.times = simulate_signal(p, g, RngSeed{1, 0}).times;
    flat.values.assign(flat.times.size(), 1.0);

    SUBCASE("h identically zero gives Brownian increments") {
        p.h1 = 1e-300;
        const std::size_t n = 20'000;
        const Moments m = sample_mean(n, [&](std::size_t s) {
            const double y = simulate_observation(p, flat, RngSeed{s, 1}).value_at(1.0);
            return y * y;
        });
        CHECK(std::abs(m.mean - 1.0) < 3 * m.se);
    }
    SUBCASE("frozen signal gives E[Y_t] = 3t") {
        p.h1 = 3.0;
        const std::size_t n = 10'000;
        const Moments m = sample_mean(n, [&](std::size_t s) {
            return simulate_observation(p, flat, RngSeed{s, 2}).value_at(1.0);
        });
        CHECK(std::abs(m.mean - 3.0) < 3 * m.se);
    }
    SUBCASE("starts at zero") {
        p.h1 = 3.0;
        const PathRecord y = simulate_observation(p, flat, RngSeed{5, 5});
        CHECK(y.values[0] == 0.0);
        CHECK(y.kind == PathKind::observation);
        CHECK_NOTHROW(y.validate());
    }
}

TEST_CASE("identical seeds reproduce paths bit for bit") {
    BenesParameters p;
    const TimeGrid g{0.0, 0.1, 40, 10};
    const PathRecord a = simulate_signal(p, g, RngSeed{9, 0});
    const PathRecord b = simulate_signal(p, g, RngSeed{9, 0});
    CHECK(a.values == b.values);
    CHECK(simulate_signal(p, g, RngSeed{9, 1}).values != a.values);
    CHECK(simulate_observation(p, a, RngSeed{2, 1}).values == simulate_observation(p, b, RngSeed{2, 1}).values);
}

TEST_CASE("auxiliary batch examples") {
    const Domain1D dom{-9.0, 2.5, 1000};
    SUBCASE("zero drift carries no weight") {
        BenesParameters p{0.0, 0.0, 0.5, 3.0, 0.0, 0.0};
        for (const auto& e : sample_auxiliary_batch(p, dom, 0.1, 10, 1000, RngSeed{1, 0})) {
            CHECK(e.log_weight == 0.0);
            CHECK(e.start >= dom.lo);
            CHECK(e.start <= dom.hi);
        }
    }
    SUBCASE("single substep weight uses the left endpoint only") {
        BenesParameters p;
        const Domain1D tiny{-1e-20, 1e-20, 2};
        for (const auto& e : sample_auxiliary_batch(p, tiny, 0.1, 1, 100, RngSeed{2, 0})) {
            CHECK(e.log_weight == doctest::Approx(-0.9).epsilon(1e-12));
            CHECK(e.end != e.start);
        }
    }
    SUBCASE("weights are non-positive logs and finite") {
        BenesParameters p;
        const auto batch = sample_auxiliary_batch(p, dom, 0.1, 10, 1'000'000, RngSeed{3, 0});
        for (const auto& e : batch) {
            REQUIRE(std::isfinite(e.end));
            REQUIRE(e.log_weight <= 0.0);
        }
    }
}

TEST_CASE("auxiliary weights converge under substep refinement") {
    // Euler-Maruyama has weak order one: at J = 10 the bias of E[exp(log_weight)] is about
    // 6e-4, visible at 1e6 samples but far below the noise of a 600-sample training batch.
    BenesParameters p;
    const Domain1D dom{-9.0, 2.5, 1000};
    const std::size_t n = 1'000'000;
    auto weight_mean = [&](int substeps, std::uint64_t stream) {
        const auto b = sample_auxiliary_batch(p, dom, 0.1, substeps, n, RngSeed{4, stream});
        return sample_mean(n, [&](std::size_t i) { return std::exp(b[i].log_weight); });
    };
    const Moments j10 = weight_mean(10, 0);
    const Moments j40 = weight_mean(40, 1);
    const Moments j400 = weight_mean(400, 2);
    CHECK(std::abs(j40.mean - j400.mean) < 3 * std::hypot(j40.se, j400.se));
    const double batch_se = j10.se * std::sqrt(static_cast<double>(n) / 600.0);
    CHECK(std::abs(j10.mean - j400.mean) < 0.25 * batch_se);
}

TEST_CASE("auxiliary batches do not depend on the worker count") {
    BenesParameters p;
    const Domain1D dom{-9.0, 2.5, 1000};
    set_worker_count(1);
    const auto a = sample_auxiliary_batch(p, dom, 0.1, 10, 5000, RngSeed{5, 0});
    set_worker_count(4);
    const auto b = sample_auxiliary_batch(p, dom, 0.1, 10, 5000, RngSeed{5, 0});
    set_worker_count(1);
    REQUIRE(a.size() == b.size());
    bool same = true;
    for (std::size_t i = 0; i < a.size(); ++i)
        same = same && a[i].start == b[i].start && a[i].end == b[i].end && a[i].log_weight == b[i].log_weight;
    CHECK(same);
    CHECK_THROWS(sample_auxiliary_batch(p, dom, 0.1, 10, 0, RngSeed{}));
}

TEST_CASE("path CSV round trip") {
    BenesParameters p;
    const PathRecord x = simulate_signal(p, TimeGrid{0.0, 0.1, 4, 10}, RngSeed{6, 0});
    const auto file = std::filesystem::temp_directory_path() / "benes_test_path.csv";
    write_path_csv(file, x);
    const PathRecord y = read_path_csv(file, PathKind::signal);
    CHECK(y.times == x.times);
    CHECK(y.values == x.values);
    std::filesystem::remove(file);
}
