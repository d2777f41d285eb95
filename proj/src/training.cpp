#include "benes/training.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

#include "benes/csv.hpp"
#include "benes/diagnostics.hpp"
#include "benes/errors.hpp"
#include "benes/splitting.hpp"

namespace benes {

namespace {

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

double gaussian_pdf(double z, double mean, double std) {
    const double u = (z - mean) / std;
    return std::exp(-0.5 * u * u) / (std * std::sqrt(2.0 * std::numbers::pi));
}

}  // namespace

double DensityHandle::operator()(double z) const {
    double out = 0.0;
    evaluate(std::span<const double>(&z, 1), std::span<double>(&out, 1));
    return out;
}

void DensityHandle::evaluate(std::span<const double> z, std::span<double> out) const {
    if (z.size() != out.size()) throw std::invalid_argument("DensityHandle::evaluate: size mismatch");
    std::visit(overloaded{
                   [&](const GaussianDensity& g) {
                       for (std::size_t i = 0; i < z.size(); ++i) out[i] = gaussian_pdf(z[i], g.mean, g.std);
                   },
                   [&](const GaussianMixture2& g) {
                       for (std::size_t i = 0; i < z.size(); ++i) out[i] = g.pdf(z[i]);
                   },
                   [&](const ZeroDensity&) { std::fill(out.begin(), out.end(), 0.0); },
                   [&](const CompositePosterior& c) {
                       // Only points inside the old domain reach the network.
                       std::vector<double> inside;
                       std::vector<std::size_t> where;
                       inside.reserve(z.size());
                       where.reserve(z.size());
                       for (std::size_t i = 0; i < z.size(); ++i) {
                           if (c.domain.contains(z[i])) {
                               inside.push_back(z[i]);
                               where.push_back(i);
                           }
                       }
                       std::fill(out.begin(), out.end(), 0.0);
                       if (inside.empty()) return;
                       const std::vector<double> nn = benes::evaluate(*c.net, inside);
                       for (std::size_t k = 0; k < inside.size(); ++k)
                           out[where[k]] = likelihood_xi(c.params, c.z_n, c.dt, inside[k]) * nn[k] / c.c_n;
                   },
               },
               v_);
}

TrainingBatch make_targets(const DensityHandle& prev, std::span<const WeightedEndpoint> endpoints) {
    TrainingBatch batch;
    const std::size_t n = endpoints.size();
    batch.xi.resize(n);
    batch.target.resize(n);
    std::vector<double> ends(n);
    for (std::size_t i = 0; i < n; ++i) {
        batch.xi[i] = endpoints[i].start;
        ends[i] = endpoints[i].end;
    }
    prev.evaluate(ends, batch.target);
    for (std::size_t i = 0; i < n; ++i) batch.target[i] *= std::exp(endpoints[i].log_weight);
    return batch;
}

TrainedPrior train_prediction_step(const PredictionProblem& problem, const TrainingConfig& cfg, RngSeed rng) {
    if (problem.prev == nullptr) throw std::invalid_argument("prediction step needs a previous density");
    problem.domain.validate();
    problem.params.validate();
    cfg.validate();

    constexpr std::uint64_t kInitStream = 0xffffffffULL;
    TrainedPrior result;
    if (cfg.warm_start && problem.warm_start != nullptr) {
        result.net = *problem.warm_start;
    } else {
        result.net = init_network(cfg.widths, rng.child(kInitStream), cfg.activation, cfg.bn_momentum);
    }
    Network& net = result.net;
    AdamState adam(net.parameters().size());

    const bool tracing = problem.reference != nullptr && cfg.trace_every > 0;
    const std::vector<double> grid = tracing ? problem.domain.points() : std::vector<double>{};
    auto record_l2 = [&](int epoch) {
        const std::vector<double> nn = evaluate(net, grid);
        result.trace.l2_epochs.push_back(epoch);
        result.trace.l2_error.push_back(l2_grid_error(nn, *problem.reference, problem.domain.spacing()));
    };

    result.trace.loss.reserve(cfg.epochs);
    result.trace.lr.reserve(cfg.epochs);
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        const auto endpoints = sample_auxiliary_batch(problem.params, problem.domain, problem.dt,
                                                      problem.substeps, cfg.batch_size, rng.child(epoch));
        const TrainingBatch batch = make_targets(*problem.prev, endpoints);
        LossResult lr_res = loss_and_gradient(net, batch.xi, batch.target, cfg.lambda, cfg.penalty, cfg.penalty_scale);
        if (!std::isfinite(lr_res.loss) || !lr_res.gradient.allFinite())
            throw TrainingFailure(epoch, "non-finite loss");
        const double lr = cfg.lr(epoch);
        adam_step(net, lr_res.gradient, adam, lr);
        result.trace.loss.push_back(lr_res.loss);
        result.trace.lr.push_back(lr);
        if (tracing && (epoch % cfg.trace_every == 0)) record_l2(epoch);
    }
    if (tracing) record_l2(cfg.epochs);
    return result;
}

void write_trace_csv(const std::filesystem::path& path, const TrainingTrace& trace) {
    CsvWriter csv(path, {"epoch", "lr", "loss", "l2_error_vs_reference"});
    std::size_t k = 0;
    for (std::size_t e = 0; e < trace.loss.size(); ++e) {
        std::string l2;
        while (k < trace.l2_epochs.size() && trace.l2_epochs[k] < static_cast<int>(e)) ++k;
        if (k < trace.l2_epochs.size() && trace.l2_epochs[k] == static_cast<int>(e))
            l2 = format_double(trace.l2_error[k]);
        csv.row({std::to_string(e), format_double(trace.lr[e]), format_double(trace.loss[e]), l2});
    }
}

}  // namespace benes
