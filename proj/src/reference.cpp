#include "benes/reference.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "benes/csv.hpp"
#include "benes/errors.hpp"
#include "benes/parallel.hpp"

namespace benes {

namespace {
constexpr std::size_t kParticleChunk = 4096;
}

ParticleEnsemble ParticleEnsemble::at_point(double x, std::size_t count) {
    ParticleEnsemble e;
    e.positions.assign(count, x);
    e.weights.assign(count, 1.0 / static_cast<double>(count));
    e.ess = static_cast<double>(count);
    return e;
}

double ParticleEnsemble::mean() const {
    double m = 0.0;
    for (std::size_t i = 0; i < size(); ++i) m += weights[i] * positions[i];
    return m;
}

double ParticleEnsemble::variance() const {
    const double m = mean();
    double v = 0.0;
    for (std::size_t i = 0; i < size(); ++i) v += weights[i] * (positions[i] - m) * (positions[i] - m);
    return v;
}

double ParticleEnsemble::standard_error() const {
    const double m = mean();
    double s = 0.0;
    for (std::size_t i = 0; i < size(); ++i) {
        const double d = weights[i] * (positions[i] - m);
        s += d * d;
    }
    return std::sqrt(s);
}

void systematic_resample(ParticleEnsemble& ens, Engine& engine) {
    const std::size_t n = ens.size();
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const double offset = u(engine);
    std::vector<double> out(n);
    double cumulative = ens.weights[0];
    std::size_t j = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const double target = (static_cast<double>(i) + offset) / static_cast<double>(n);
        while (target > cumulative && j + 1 < n) cumulative += ens.weights[++j];
        out[i] = ens.positions[j];
    }
    ens.positions = std::move(out);
    ens.weights.assign(n, 1.0 / static_cast<double>(n));
    ens.ess = static_cast<double>(n);
}

ParticleEnsemble particle_filter_step(const ParticleEnsemble& ens, const BenesParameters& p,
                                      double obs_increment, double dt, int substeps, RngSeed rng,
                                      double resample_threshold) {
    if (ens.size() < 1) throw std::invalid_argument("particle filter needs at least one particle");
    if (substeps < 1 || !(dt > 0.0)) throw std::invalid_argument("invalid particle time step");
    const std::size_t n = ens.size();
    ParticleEnsemble out;
    out.positions = ens.positions;
    out.weights.resize(n);

    std::vector<double> log_w(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double hx = sensor_h(p, ens.positions[i]);
        log_w[i] = (ens.weights[i] > 0.0 ? std::log(ens.weights[i]) : -std::numeric_limits<double>::infinity()) +
                   hx * obs_increment - 0.5 * hx * hx * dt;
    }
    const double top = *std::max_element(log_w.begin(), log_w.end());
    if (!std::isfinite(top)) throw DegenerateEnsemble("all particle weights vanished");
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        out.weights[i] = std::exp(log_w[i] - top);
        total += out.weights[i];
    }
    if (!(total > 0.0) || !std::isfinite(total)) throw DegenerateEnsemble("all particle weights vanished");
    double sum_sq = 0.0;
    for (auto& w : out.weights) {
        w /= total;
        sum_sq += w * w;
    }
    out.ess = 1.0 / sum_sq;

    const double h = dt / substeps;
    const double noise = p.sigma * std::sqrt(h);
    parallel_for(chunk_count(n, kParticleChunk), [&](std::size_t c) {
        Engine engine = make_engine(rng, c);
        std::normal_distribution<double> normal;
        const std::size_t end = std::min(n, (c + 1) * kParticleChunk);
        for (std::size_t i = c * kParticleChunk; i < end; ++i) {
            double x = out.positions[i];
            for (int j = 0; j < substeps; ++j) x += drift_f(p, x) * h + noise * normal(engine);
            out.positions[i] = x;
        }
    });

    if (out.ess < resample_threshold * static_cast<double>(n)) {
        Engine engine = make_engine(rng.child(0x7e5a3b1e), 0);
        systematic_resample(out, engine);
    }
    return out;
}

KalmanState kalman_bucy_step(const KalmanState& s, const BenesParameters& p, double obs_increment, double dt) {
    if (p.alpha != 0.0) throw std::invalid_argument("Kalman-Bucy reference requires alpha = 0");
    if (!(dt > 0.0)) throw std::invalid_argument("dt must be positive");
    const double pred_var = s.variance + p.sigma * p.sigma * dt;
    const double z = obs_increment / dt;
    const double noise_var = 1.0 / dt;
    const double innovation_var = p.h1 * p.h1 * pred_var + noise_var;
    const double gain = pred_var * p.h1 / innovation_var;
    KalmanState out;
    out.mean = s.mean + gain * (z - p.h1 * s.mean - p.h2);
    out.variance = (1.0 - gain * p.h1) * pred_var;
    return out;
}

void write_ensemble_csv(const std::filesystem::path& path, std::span<const EnsembleSummary> rows) {
    CsvWriter csv(path, {"step", "mean", "variance", "ess"});
    for (const auto& r : rows)
        csv.row({std::to_string(r.step), format_double(r.mean), format_double(r.variance), format_double(r.ess)});
}

}  // namespace benes
