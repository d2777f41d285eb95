#include "benes/validation.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numbers>
#include <optional>
#include <random>
#include <sstream>

#include "benes/csv.hpp"
#include "benes/diagnostics.hpp"
#include "benes/exact.hpp"
#include "benes/network.hpp"
#include "benes/reference.hpp"
#include "benes/sde.hpp"
#include "benes/splitting.hpp"
#include "benes/training.hpp"

namespace benes {

namespace {

class Stopwatch {
public:
    double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    }

private:
    std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

double normal_pdf(double x, double mean, double var) {
    const double d = x - mean;
    return std::exp(-0.5 * d * d / var) / std::sqrt(2.0 * std::numbers::pi * var);
}

// Loss recomputed from train-mode outputs, independent of the backward pass.
double loss_from_outputs(Network& net, std::span<const double> x, std::span<const double> y, double lambda) {
    const std::vector<double> o = forward(net, x, Mode::train);
    double data = 0.0, pen = 0.0;
    for (std::size_t i = 0; i < o.size(); ++i) {
        data += (o[i] - y[i]) * (o[i] - y[i]);
        pen += std::max(0.0, -o[i]);
    }
    return (data + lambda * pen) / static_cast<double>(o.size());
}

// Three equal plateaus over the run, 6002 epochs giving the default 2001.
LearningRateSchedule schedule_for(int epochs) { return LearningRateSchedule{1e-2, std::max(1, (epochs + 2) / 3)}; }

std::string fmt(double x) {
    std::ostringstream o;
    o.precision(4);
    o << x;
    return o.str();
}

}  // namespace

CheckResult check_gradients(const GradientCheckOptions& o) {
    Stopwatch clock;
    CheckResult res{"gradient vs finite differences", true, {}, 0.0};
    std::optional<CsvWriter> csv;
    if (!o.csv.empty()) csv.emplace(o.csv, std::vector<std::string>{"net", "relative_error"});
    constexpr double lambda = 1.0;
    double worst = 0.0;
    for (int k = 0; k < o.nets; ++k) {
        const RngSeed seed{o.seed, static_cast<std::uint64_t>(k)};
        Network net = init_network({1, 51, 51, 1}, seed);
        Engine engine = make_engine(seed.child(1));
        std::normal_distribution<double> normal;
        std::uniform_real_distribution<double> uniform(-3.0, 3.0);
        // move batch-norm and bias parameters off their initial values
        for (int h = 0; h < net.hidden_layers(); ++h) {
            for (auto& g : net.gamma(h)) g = 1.0 + 0.3 * normal(engine);
            for (auto& s : net.shift(h)) s = 0.3 * normal(engine);
        }
        for (int l = 0; l < net.dense_layers(); ++l)
            for (auto& b : net.bias(l)) b = 0.1 * normal(engine);
        std::vector<double> x(o.batch), y(o.batch);
        for (int i = 0; i < o.batch; ++i) {
            x[i] = uniform(engine);
            y[i] = normal(engine);
        }
        // Central differences are only accurate where the loss is smooth on the scale of
        // the step: keep first-layer batch variances well above the batch-norm epsilon and
        // keep outputs away from the penalty kink at zero.
        double x_mean = 0.0, x_var = 0.0;
        for (double v : x) x_mean += v / o.batch;
        for (double v : x) x_var += (v - x_mean) * (v - x_mean) / o.batch;
        std::uniform_real_distribution<double> glorot(-std::sqrt(6.0 / 52.0), std::sqrt(6.0 / 52.0));
        for (auto& w : net.weights(0).reshaped())
            while (w * w * x_var < 10.0 * kBatchNormEpsilon) w = glorot(engine);
        {
            Network probe = net;
            const std::vector<double> out = forward(probe, x, Mode::train);
            const double nearest = std::abs(*std::min_element(out.begin(), out.end(), [](double a, double b) {
                return std::abs(a) < std::abs(b);
            }));
            if (nearest < 1e-3) net.bias(net.dense_layers() - 1)[0] += 1e-2;
        }

        Network work = net;
        const Eigen::VectorXd analytic = loss_and_gradient(work, x, y, lambda).gradient;
        Eigen::VectorXd numeric(analytic.size());
        for (Eigen::Index i = 0; i < numeric.size(); ++i) {
            Network probe = net;
            probe.parameters()[i] += o.step;
            const double up = loss_from_outputs(probe, x, y, lambda);
            probe.parameters()[i] = net.parameters()[i] - o.step;
            const double down = loss_from_outputs(probe, x, y, lambda);
            numeric[i] = (up - down) / (2.0 * o.step);
        }
        const double scale = std::max({analytic.norm(), numeric.norm(), 1e-12});
        const double rel = (analytic - numeric).norm() / scale;
        worst = std::max(worst, rel);
        if (!(rel < o.tolerance)) res.passed = false;
        if (csv) csv->row({static_cast<double>(k), rel});
    }
    res.detail = std::to_string(o.nets) + " nets, worst relative error " + fmt(worst) + " (tolerance " +
                 fmt(o.tolerance) + ")";
    res.seconds = clock.seconds();
    return res;
}

CheckResult check_exact_vs_particles(const ExactCheckOptions& o) {
    Stopwatch clock;
    CheckResult res{"closed-form posterior vs particle filter", false, {}, 0.0};
    const BenesParameters& p = o.params;
    const PathRecord signal = simulate_signal(p, o.grid, RngSeed{o.seed_signal, 0});
    const PathRecord obs = simulate_observation(p, signal, RngSeed{o.seed_observation, 0});
    const double h = o.grid.substep();
    const BenesOptions exact{BenesFormula::corrected, IntegralRule::trapezoid};

    std::optional<CsvWriter> csv;
    if (!o.csv.empty())
        csv.emplace(o.csv, std::vector<std::string>{"step", "time", "exact_mean", "particle_mean",
                                                    "particle_stderr", "ess"});
    ParticleEnsemble ens = ParticleEnsemble::at_point(p.x0, static_cast<std::size_t>(o.particles));
    int passing = 0;
    double worst = 0.0;
    std::size_t k = 0;
    for (int n = 1; n <= o.grid.n_steps; ++n) {
        for (int j = 0; j < o.grid.substeps; ++j, ++k) {
            const double inc = obs.values[k + 1] - obs.values[k];
            ens = particle_filter_step(ens, p, inc, h, 1, RngSeed{o.seed_particles, k});
        }
        const double t = o.grid.time(n);
        const double m_exact = benes_density(benes_moments(p, obs, t, exact)).mean();
        const double m_pf = ens.mean();
        const double se = ens.standard_error();
        const double z = std::abs(m_exact - m_pf) / se;
        worst = std::max(worst, z);
        if (z < o.se_multiple) ++passing;
        if (csv) csv->row({static_cast<double>(n), t, m_exact, m_pf, se, ens.ess});
    }
    res.passed = passing >= o.min_passing;
    res.detail = std::to_string(passing) + "/" + std::to_string(o.grid.n_steps) + " steps within " +
                 fmt(o.se_multiple) + " standard errors (need " + std::to_string(o.min_passing) +
                 "), worst " + fmt(worst) + " SE";
    res.seconds = clock.seconds();
    return res;
}

CheckResult check_linear_pipeline(const LinearCheckOptions& o) {
    Stopwatch clock;
    CheckResult res{"linear model pipeline vs Kalman-Bucy", true, {}, 0.0};
    const BenesParameters& p = o.params;
    const PathRecord signal = simulate_signal(p, o.grid, RngSeed{o.seed, 0});
    const PathRecord obs = coarsen(simulate_observation(p, signal, RngSeed{o.seed, 1}), o.grid);

    FilterSettings settings;
    settings.training.epochs = o.epochs;
    settings.training.batch_size = o.batch;
    settings.training.lr = schedule_for(o.epochs);
    settings.training.trace_every = 0;
    settings.mc_samples = o.mc_samples;
    settings.training_seed = RngSeed{o.seed, 2};
    settings.normalization_seed = RngSeed{o.seed, 3};
    std::vector<Domain1D> domains;
    {
        KalmanState kb{0.0, o.prior_std * o.prior_std};
        for (int n = 1; n <= o.grid.n_steps; ++n) {
            const double pred_sd = std::sqrt(kb.variance + p.sigma * p.sigma * o.grid.dt);
            const KalmanState next = kalman_bucy_step(kb, p, obs.values[n] - obs.values[n - 1], o.grid.dt);
            domains.push_back(Domain1D{std::min(kb.mean, next.mean) - o.pad_stds * pred_sd,
                                       std::max(kb.mean, next.mean) + o.pad_stds * pred_sd, o.resolution});
            kb = next;
        }
    }
    const auto results =
        run_filter(p, o.grid, DensityHandle::gaussian(0.0, o.prior_std), domains, settings, obs);

    std::optional<CsvWriter> csv;
    if (!o.csv.empty())
        csv.emplace(o.csv, std::vector<std::string>{"step", "time", "mean", "kalman_mean", "variance",
                                                    "kalman_variance"});
    KalmanState kb{0.0, o.prior_std * o.prior_std};
    double worst_mean = 0.0, worst_var = 0.0;
    for (const auto& r : results) {
        const double inc = obs.values[r.step] - obs.values[r.step - 1];
        kb = kalman_bucy_step(kb, p, inc, o.grid.dt);
        const double m = density_mean(r.domain, r.posterior_grid);
        const double v = density_variance(r.domain, r.posterior_grid);
        const double dm = std::abs(m - kb.mean);
        const double dv = std::abs(v - kb.variance) / kb.variance;
        worst_mean = std::max(worst_mean, dm);
        worst_var = std::max(worst_var, dv);
        if (!(dm < o.mean_tolerance && dv < o.variance_relative_tolerance)) res.passed = false;
        if (csv) csv->row({static_cast<double>(r.step), r.time, m, kb.mean, v, kb.variance});
    }
    res.detail = std::to_string(results.size()) + " steps, worst |mean error| " + fmt(worst_mean) + " (tol " +
                 fmt(o.mean_tolerance) + "), worst relative variance error " + fmt(worst_var) + " (tol " +
                 fmt(o.variance_relative_tolerance) + ")";
    res.seconds = clock.seconds();
    return res;
}

CheckResult check_heat_kernel(const HeatKernelCheckOptions& o) {
    Stopwatch clock;
    CheckResult res{"prediction step vs heat kernel", false, {}, 0.0};
    const BenesParameters p{0.0, 0.0, o.sigma, 1.0, 0.0, 0.0};
    const DensityHandle prev = DensityHandle::gaussian(0.0, o.prior_std);
    PredictionProblem problem;
    problem.prev = &prev;
    problem.params = p;
    problem.domain = o.domain;
    problem.dt = o.dt;
    problem.substeps = o.substeps;
    TrainingConfig cfg;
    cfg.epochs = o.epochs;
    cfg.batch_size = o.batch;
    cfg.lr = schedule_for(o.epochs);
    cfg.trace_every = 0;
    const TrainedPrior trained = train_prediction_step(problem, cfg, RngSeed{o.seed, 0});

    const std::vector<double> z = o.domain.points();
    const std::vector<double> nn = evaluate(trained.net, z);
    const double var = o.prior_std * o.prior_std + o.sigma * o.sigma * o.dt;
    std::vector<double> exact(z.size()), exact_sq(z.size());
    for (std::size_t i = 0; i < z.size(); ++i) {
        exact[i] = normal_pdf(z[i], 0.0, var);
        exact_sq[i] = exact[i] * exact[i];
    }
    const double rel = l2_grid_error(nn, exact, o.domain.spacing()) / std::sqrt(trapezoid(exact_sq, o.domain.spacing()));
    if (!o.csv.empty()) {
        CsvWriter csv(o.csv, {"z", "network", "exact"});
        for (std::size_t i = 0; i < z.size(); ++i) csv.row({z[i], nn[i], exact[i]});
    }
    res.passed = rel < o.tolerance;
    res.detail = "relative L2 error " + fmt(rel) + " against N(0, " + fmt(var) + ") (tolerance " +
                 fmt(o.tolerance) + ")";
    res.seconds = clock.seconds();
    return res;
}

CheckResult check_normalization(const NormalizationCheckOptions& o) {
    Stopwatch clock;
    CheckResult res{"Monte-Carlo normalisation vs quadrature", true, {}, 0.0};
    const BenesParameters& p = o.params;
    std::optional<CsvWriter> csv;
    if (!o.csv.empty())
        csv.emplace(o.csv, std::vector<std::string>{"net", "z_n", "mc_estimate", "mc_stderr", "quadrature"});

    const Domain1D fine{o.domain.lo, o.domain.hi, o.quadrature_points};
    const std::vector<double> zq = fine.points();
    double worst = 0.0;
    for (int k = 0; k < o.nets; ++k) {
        const RngSeed seed{o.seed, static_cast<std::uint64_t>(k)};
        Network net = init_network({1, 51, 51, 1}, seed);
        std::vector<double> values = evaluate(net, zq);
        const double lowest = *std::min_element(values.begin(), values.end());
        net.bias(net.dense_layers() - 1)[0] += std::max(0.0, -lowest) + 0.1;

        Engine engine = make_engine(seed.child(1));
        std::uniform_real_distribution<double> uniform(o.domain.lo, o.domain.hi);
        const double z_n = p.h1 * uniform(engine) + p.h2;
        const NormalizationRecord rec =
            normalize_step(net, o.domain, p, z_n * o.dt, o.dt, o.mc_samples, seed.child(2));

        values = evaluate(net, zq);
        for (std::size_t i = 0; i < zq.size(); ++i) {
            const double r = z_n - (p.h1 * zq[i] + p.h2);
            values[i] *= std::exp(-0.5 * o.dt * r * r);
        }
        const double quad = trapezoid(values, fine.spacing());
        const double z = std::abs(rec.c_n - quad) / rec.standard_error;
        worst = std::max(worst, z);
        if (!(z < o.se_multiple)) res.passed = false;
        if (csv) csv->row({static_cast<double>(k), z_n, rec.c_n, rec.standard_error, quad});
    }
    res.detail = std::to_string(o.nets) + " nets, worst deviation " + fmt(worst) + " SE (tolerance " +
                 fmt(o.se_multiple) + " SE)";
    res.seconds = clock.seconds();
    return res;
}

GradientCheckOptions quick(GradientCheckOptions o) {
    o.nets = std::max(1, o.nets / 10);
    return o;
}

ExactCheckOptions quick(ExactCheckOptions o) {
    o.particles = std::max(100L, o.particles / 10);
    o.se_multiple = 4.0;
    return o;
}

LinearCheckOptions quick(LinearCheckOptions o) {
    o.epochs = std::max(2, o.epochs / 10);
    o.batch = std::max(32, o.batch / 4);
    o.mc_samples = std::max(1000L, o.mc_samples / 10);
    o.mean_tolerance *= 2.0;
    o.variance_relative_tolerance *= 2.0;
    return o;
}

HeatKernelCheckOptions quick(HeatKernelCheckOptions o) {
    o.epochs = std::max(2, o.epochs / 10);
    o.batch = std::max(32, o.batch / 4);
    o.tolerance *= 3.0;
    return o;
}

NormalizationCheckOptions quick(NormalizationCheckOptions o) {
    o.mc_samples = std::max(1000L, o.mc_samples / 10);
    o.quadrature_points = std::max(1000, o.quadrature_points / 10);
    o.se_multiple = 4.0;
    return o;
}

}  // namespace benes
