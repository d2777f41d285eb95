#include "benes/commands.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <ostream>

#include "benes/csv.hpp"
#include "benes/errors.hpp"
#include "benes/exact.hpp"
#include "benes/reference.hpp"
#include "benes/sde.hpp"
#include "benes/svg.hpp"
#include "benes/validation.hpp"

namespace benes {

namespace fs = std::filesystem;

namespace {

std::string step_name(int n) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "step_%03d", n);
    return buf;
}

void write_manifest(const RunConfig& config, const fs::path& dir) {
    fs::create_directories(dir);
    std::ofstream out(dir / "manifest.cfg");
    out << format_config(config);
    if (!out) throw std::runtime_error("cannot write manifest in " + dir.string());
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::vector<double> column(const CsvTable& t, const std::string& name) {
    const std::size_t c = t.column(name);
    std::vector<double> out;
    out.reserve(t.rows.size());
    for (const auto& row : t.rows) out.push_back(row[c].empty() ? std::nan("") : parse_double(row[c]));
    return out;
}

void plot_run(const fs::path& dir) {
    const fs::path plots = dir / "plots";
    fs::create_directories(plots);
    const CsvTable diag = read_csv(dir / "diagnostics.csv");
    const std::vector<double> time = column(diag, "time");
    write_line_plot(plots / "abs_error_means.svg", "Absolute error in means", "t", "|mean error|",
                    {{"deep filter", time, column(diag, "abs_err")}});
    write_line_plot(plots / "probability_mass.svg", "Probability mass of the prior", "t", "mass",
                    {{"prior", time, column(diag, "mass")}});
    write_line_plot(plots / "acceptance_rate.svg", "Monte-Carlo acceptance rate", "t", "acceptance",
                    {{"normalisation", time, column(diag, "acceptance")}});
    write_line_plot(plots / "posterior_mean.svg", "Posterior mean", "t", "mean",
                    {{"deep filter", time, column(diag, "mean_est")}, {"exact", time, column(diag, "mean_exact")}});

    std::vector<PlotSeries> loss, l2;
    const int steps = static_cast<int>(time.size());
    for (int n = 1; n <= steps; ++n) {
        if (!(n == 1 || n % 10 == 0 || n == steps)) continue;
        const fs::path trace = dir / "steps" / (step_name(n) + "_trace.csv");
        if (!fs::exists(trace)) continue;
        const CsvTable t = read_csv(trace);
        const std::vector<double> epoch = column(t, "epoch");
        loss.push_back({"step " + std::to_string(n), epoch, column(t, "loss")});
        std::vector<double> e, v;
        const std::vector<double> err = column(t, "l2_error_vs_reference");
        for (std::size_t i = 0; i < err.size(); ++i) {
            if (!std::isnan(err[i])) {
                e.push_back(epoch[i]);
                v.push_back(err[i]);
            }
        }
        if (!e.empty()) l2.push_back({"step " + std::to_string(n), e, v});

        const CsvTable post = read_csv(dir / "steps" / (step_name(n) + "_posterior.csv"));
        std::vector<PlotSeries> dens{{"deep filter", column(post, "z"), column(post, "posterior")}};
        const fs::path exact = dir / "steps" / (step_name(n) + "_exact.csv");
        if (fs::exists(exact)) {
            const CsvTable ex = read_csv(exact);
            dens.push_back({"exact", column(ex, "z"), column(ex, "density")});
        }
        write_line_plot(plots / ("posterior_" + step_name(n) + ".svg"), "Posterior at step " + std::to_string(n),
                        "x", "density", dens);
    }
    if (!loss.empty()) write_line_plot(plots / "training_loss.svg", "Training loss", "epoch", "loss", loss, true);
    if (!l2.empty())
        write_line_plot(plots / "l2_error.svg", "L2 error against the Monte-Carlo reference prior", "epoch",
                        "L2 error", l2, true);
}

}  // namespace

PathPair experiment_paths(const RunConfig& config) {
    if (!config.signal_csv.empty()) {
        PathPair p{read_path_csv(config.signal_csv, PathKind::signal),
                   read_path_csv(config.observation_csv, PathKind::observation)};
        if (p.signal.size() != config.grid.total_substeps() + 1 || p.observation.size() != p.signal.size())
            throw std::runtime_error("recorded paths do not match the configured time grid");
        return p;
    }
    PathPair p;
    p.signal = simulate_signal(config.model, config.grid, RngSeed{config.seed_signal, 0});
    p.observation = simulate_observation(config.model, p.signal, RngSeed{config.seed_observation, 1});
    return p;
}

FilterSettings filter_settings(const RunConfig& config) {
    FilterSettings s;
    s.training = config.training;
    s.mc_samples = config.mc_samples;
    s.training_seed = RngSeed{config.seed_training, 2};
    s.normalization_seed = RngSeed{config.seed_normalization, 3};
    s.reference_seed = RngSeed{config.seed_reference, 4};
    s.reference_samples_per_point = config.reference_samples;
    s.exact = config.exact;
    return s;
}

std::vector<Domain1D> domain_schedule(const RunConfig& config, DomainMode mode, const PathRecord& observation) {
    if (mode == DomainMode::fixed) return {config.domain};
    return benes_support_schedule(config.model, coarsen(observation, config.grid), config.grid, config.pad_stds,
                                  config.domain, config.exact);
}

void write_domains_csv(const fs::path& path, std::span<const Domain1D> domains) {
    CsvWriter csv(path, {"step", "lo", "hi", "resolution"});
    for (std::size_t n = 0; n < domains.size(); ++n)
        csv.row({static_cast<double>(n), domains[n].lo, domains[n].hi, static_cast<double>(domains[n].resolution)});
}

int cmd_simulate(const RunConfig& config, std::ostream& log) {
    const fs::path dir = config.output_dir;
    write_manifest(config, dir);
    const PathPair paths = experiment_paths(config);
    write_path_csv(dir / "signal.csv", paths.signal);
    write_path_csv(dir / "observation.csv", paths.observation);
    log << "wrote " << paths.signal.size() << " samples to " << (dir / "signal.csv").string() << " and "
        << (dir / "observation.csv").string() << '\n';
    return 0;
}

int cmd_run(const RunConfig& input, DomainMode mode, std::ostream& log) {
    RunConfig config = input;
    config.domain_mode = mode;
    const fs::path dir = config.output_dir;
    write_manifest(config, dir);
    fs::create_directories(dir / "steps");

    const PathPair paths = experiment_paths(config);
    write_path_csv(dir / "signal.csv", paths.signal);
    write_path_csv(dir / "observation.csv", paths.observation);
    const std::vector<Domain1D> domains = domain_schedule(config, mode, paths.observation);
    if (mode == DomainMode::adapted) write_domains_csv(dir / "domains.csv", domains);

    FilterSettings settings = filter_settings(config);
    settings.checkpoint_dir = dir / "checkpoints";
    const PathRecord coarse = coarsen(paths.observation, config.grid);

    auto t0 = std::chrono::steady_clock::now();
    auto on_step = [&](const FilterStepResult& r) {
        const std::string base = step_name(r.step);
        write_posterior_csv(dir / "steps" / (base + "_posterior.csv"), r);
        write_trace_csv(dir / "steps" / (base + "_trace.csv"), r.trace);
        write_density_csv(dir / "steps" / (base + "_exact.csv"),
                          benes_density(benes_moments(config.model, coarse, r.time, config.exact)), r.domain);
        const StepDiagnostics& d = r.diagnostics;
        log << "step " << r.step << '/' << config.grid.n_steps << "  t=" << std::setprecision(3) << r.time
            << "  mean=" << std::setprecision(5) << d.mean_estimate << "  exact=" << d.mean_exact
            << "  mass=" << d.prior_mass << "  acceptance=" << d.acceptance_rate << "  ("
            << std::setprecision(3) << seconds_since(t0) << " s)" << std::endl;
    };

    std::vector<FilterStepResult> results;
    try {
        results = run_filter(config.model, config.grid, DensityHandle::gaussian(config.prior_mean, config.prior_std),
                             domains, settings, paths.observation, on_step);
    } catch (const StepFailure& e) {
        log << "error: " << e.what() << '\n';
        return 3;
    }
    write_diagnostics_csv(dir / "diagnostics.csv", results);
    plot_run(dir);
    log << "run complete, outputs in " << dir.string() << '\n';
    return 0;
}

int cmd_exact(const RunConfig& config, std::ostream& log) {
    const fs::path dir = config.output_dir;
    write_manifest(config, dir);
    const PathPair paths = experiment_paths(config);
    const PathRecord coarse = coarsen(paths.observation, config.grid);
    fs::create_directories(dir / "exact");
    CsvWriter csv(dir / "exact.csv", {"step", "time", "w_plus", "w_minus", "mu_plus", "mu_minus", "variance",
                                      "mean", "total_variance"});
    for (int n = 1; n <= config.grid.n_steps; ++n) {
        const double t = config.grid.time(n);
        const GaussianMixture2 g = benes_density(benes_moments(config.model, coarse, t, config.exact));
        csv.row({static_cast<double>(n), t, g.w_plus, g.w_minus, g.mu_plus, g.mu_minus, g.variance, g.mean(),
                 g.total_variance()});
        write_density_csv(dir / "exact" / (step_name(n) + ".csv"), g, config.domain);
    }
    log << "wrote closed-form posterior for " << config.grid.n_steps << " steps to " << dir.string() << '\n';
    return 0;
}

int cmd_particle(const RunConfig& config, std::ostream& log) {
    const fs::path dir = config.output_dir;
    write_manifest(config, dir);
    const PathPair paths = experiment_paths(config);
    const double h = config.grid.substep();
    ParticleEnsemble ens = ParticleEnsemble::at_point(config.model.x0, static_cast<std::size_t>(config.particles));
    std::vector<EnsembleSummary> rows;
    std::size_t k = 0;
    for (int n = 1; n <= config.grid.n_steps; ++n) {
        for (int j = 0; j < config.grid.substeps; ++j, ++k) {
            const double inc = paths.observation.values[k + 1] - paths.observation.values[k];
            ens = particle_filter_step(ens, config.model, inc, h, 1, RngSeed{config.seed_particle, 5 + k},
                                       config.resample_threshold);
        }
        rows.push_back({n, ens.mean(), ens.variance(), ens.ess, ens.standard_error()});
    }
    write_ensemble_csv(dir / "particle.csv", rows);
    log << "particle filter with " << config.particles << " particles written to "
        << (dir / "particle.csv").string() << '\n';
    return 0;
}

int cmd_validate(const ValidateOptions& options, std::ostream& log) {
    if (options.checkpoint) {
        try {
            const Network net = load_network(*options.checkpoint);
            const std::vector<double> probe{-1.0, 0.0, 1.0};
            for (double v : evaluate(net, probe))
                if (!std::isfinite(v)) throw std::runtime_error("corrupted checkpoint: non-finite output");
            log << "checkpoint " << options.checkpoint->string() << " loaded (" << net.parameters().size()
                << " parameters)\n";
        } catch (const std::exception& e) {
            log << "error: " << e.what() << '\n';
            return 2;
        }
    }
    if (!options.csv_dir.empty()) fs::create_directories(options.csv_dir);
    auto csv = [&](const char* name) { return options.csv_dir.empty() ? fs::path{} : options.csv_dir / name; };

    GradientCheckOptions g;
    g.csv = csv("gradient.csv");
    ExactCheckOptions e;
    e.csv = csv("exact_vs_particles.csv");
    LinearCheckOptions l;
    l.csv = csv("linear_vs_kalman.csv");
    HeatKernelCheckOptions hk;
    hk.csv = csv("heat_kernel.csv");
    NormalizationCheckOptions nc;
    nc.csv = csv("normalization.csv");
    if (options.quick) {
        g = quick(g);
        e = quick(e);
        l = quick(l);
        hk = quick(hk);
        nc = quick(nc);
    }

    std::vector<CheckResult> results;
    auto run = [&](CheckResult r) {
        log << (r.passed ? "PASS  " : "FAIL  ") << std::left << std::setw(44) << r.name << r.detail << "  ["
            << std::fixed << std::setprecision(1) << r.seconds << " s]" << std::defaultfloat << std::endl;
        results.push_back(std::move(r));
    };
    run(check_gradients(g));
    run(check_exact_vs_particles(e));
    run(check_linear_pipeline(l));
    run(check_heat_kernel(hk));
    run(check_normalization(nc));

    int failed = 0;
    for (const auto& r : results) failed += r.passed ? 0 : 1;
    log << (results.size() - failed) << '/' << results.size() << " checks passed\n";
    return failed == 0 ? 0 : 1;
}

int cmd_plot(const fs::path& run_dir, std::ostream& log) {
    if (!fs::exists(run_dir / "diagnostics.csv")) {
        log << "error: " << (run_dir / "diagnostics.csv").string() << " not found\n";
        return 2;
    }
    plot_run(run_dir);
    log << "plots written to " << (run_dir / "plots").string() << '\n';
    return 0;
}

}  // namespace benes
