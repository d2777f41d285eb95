#include "benes/splitting.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <numbers>
#include <sstream>

#include "benes/csv.hpp"
#include "benes/errors.hpp"
#include "benes/parallel.hpp"

namespace benes {

namespace {
constexpr std::size_t kNormalizationChunk = 1 << 16;
}

NormalizationRecord normalize_step(const Network& net, const Domain1D& domain, const BenesParameters& p,
                                   double obs_increment, double dt, long mc_samples, RngSeed rng, int step) {
    if (p.h1 == 0.0) throw NormalizationFailure(step, "h1 must be non-zero");
    if (mc_samples < 1) throw NormalizationFailure(step, "mc_samples must be at least 1");
    if (!(dt > 0.0)) throw NormalizationFailure(step, "dt must be positive");

    NormalizationRecord rec;
    rec.z_n = obs_increment / dt;
    rec.mc_samples = mc_samples;
    const double center = (rec.z_n - p.h2) / p.h1;
    const double spread = 1.0 / (std::sqrt(dt) * std::abs(p.h1));
    const double prefactor = std::sqrt(2.0 * std::numbers::pi) * spread;

    const auto n = static_cast<std::size_t>(mc_samples);
    const std::size_t chunks = chunk_count(n, kNormalizationChunk);
    std::vector<double> sums(chunks), sums2(chunks);
    std::vector<long> accepted(chunks);
    parallel_for(chunks, [&](std::size_t c) {
        Engine engine = make_engine(rng, c);
        std::normal_distribution<double> normal(center, spread);
        const std::size_t m = std::min(kNormalizationChunk, n - c * kNormalizationChunk);
        std::vector<double> inside;
        inside.reserve(m);
        for (std::size_t i = 0; i < m; ++i) {
            const double z = normal(engine);
            if (domain.contains(z)) inside.push_back(z);
        }
        const std::vector<double> values = evaluate(net, inside);
        double s = 0.0, s2 = 0.0;
        for (double v : values) {
            s += v;
            s2 += v * v;
        }
        sums[c] = s;
        sums2[c] = s2;
        accepted[c] = static_cast<long>(inside.size());
    });
    double s = 0.0, s2 = 0.0;
    long acc = 0;
    for (std::size_t c = 0; c < chunks; ++c) {
        s += sums[c];
        s2 += sums2[c];
        acc += accepted[c];
    }
    const double mean = s / static_cast<double>(n);
    const double var = n > 1 ? std::max(0.0, (s2 - n * mean * mean) / static_cast<double>(n - 1)) : 0.0;
    rec.c_n = prefactor * mean;
    rec.standard_error = prefactor * std::sqrt(var / static_cast<double>(n));
    rec.acceptance_rate = static_cast<double>(acc) / static_cast<double>(n);
    if (!std::isfinite(rec.c_n) || !(rec.c_n > 0.0))
        throw NormalizationFailure(step, "normalisation constant " + format_double(rec.c_n) + " is not positive");
    return rec;
}

DensityHandle posterior_handle(const BenesParameters& p, double dt, const StepCheckpoint& cp) {
    return DensityHandle(CompositePosterior{cp.net, cp.domain, p, cp.normalization.z_n, dt, cp.normalization.c_n});
}

namespace {

const Domain1D& domain_for_step(std::span<const Domain1D> domains, int n, int n_steps) {
    if (domains.size() == 1) return domains[0];
    if (domains.size() == static_cast<std::size_t>(n_steps)) return domains[n - 1];
    if (domains.size() == static_cast<std::size_t>(n_steps) + 1) return domains[n];
    throw std::invalid_argument("domain list must have 1, N or N+1 entries");
}

FilterStepResult run_step(const BenesParameters& p, const TimeGrid& grid, int n, const DensityHandle& prev,
                          const Domain1D& domain, const FilterSettings& settings, const PathRecord& obs,
                          const PathRecord& coarse_obs, const Network* warm) {
    FilterStepResult r;
    r.step = n;
    r.time = grid.time(n);
    r.domain = domain;
    domain.validate();

    if (settings.reference_samples_per_point > 0) {
        r.reference_prior = mc_reference_prior(prev, p, domain, grid.dt, grid.substeps,
                                               settings.reference_samples_per_point,
                                               settings.reference_seed.child(n));
    }

    PredictionProblem problem;
    problem.prev = &prev;
    problem.params = p;
    problem.domain = domain;
    problem.dt = grid.dt;
    problem.substeps = grid.substeps;
    problem.reference = r.reference_prior.empty() ? nullptr : &r.reference_prior;
    problem.warm_start = warm;
    TrainedPrior trained = train_prediction_step(problem, settings.training, settings.training_seed.child(n));
    r.trace = std::move(trained.trace);
    auto net = std::make_shared<const Network>(std::move(trained.net));
    r.prior_net = net;

    const double increment = obs.value_at(grid.time(n)) - obs.value_at(grid.time(n - 1));
    r.normalization = normalize_step(*net, domain, p, increment, grid.dt, settings.mc_samples,
                                     settings.normalization_seed.child(n), n);

    const std::vector<double> z = domain.points();
    r.prior_grid = evaluate(*net, z);
    r.likelihood_grid.resize(z.size());
    r.posterior_grid.resize(z.size());
    for (std::size_t i = 0; i < z.size(); ++i) {
        r.likelihood_grid[i] = likelihood_xi(p, r.normalization.z_n, grid.dt, z[i]);
        r.posterior_grid[i] = std::max(0.0, r.likelihood_grid[i] * r.prior_grid[i] / r.normalization.c_n);
    }

    StepDiagnostics& d = r.diagnostics;
    d.step = n;
    d.time = r.time;
    d.mean_estimate = probability_mass(domain, r.posterior_grid) > 0.0
                          ? density_mean(domain, r.posterior_grid)
                          : std::numeric_limits<double>::quiet_NaN();
    d.mean_exact = benes_density(benes_moments(p, coarse_obs, r.time, settings.exact)).mean();
    d.abs_error_means = std::abs(d.mean_estimate - d.mean_exact);
    d.l2_error_prior = r.reference_prior.empty() ? std::numeric_limits<double>::quiet_NaN()
                                                 : l2_grid_error(r.prior_grid, r.reference_prior, domain.spacing());
    d.prior_mass = probability_mass(domain, r.prior_grid);
    d.acceptance_rate = r.normalization.acceptance_rate;
    return r;
}

std::vector<FilterStepResult> run_from(const BenesParameters& p, const TimeGrid& grid, int first_step,
                                       DensityHandle prev, std::shared_ptr<const Network> warm,
                                       std::span<const Domain1D> domains, const FilterSettings& settings,
                                       const PathRecord& obs, const StepCallback& on_step) {
    p.validate();
    grid.validate();
    PathRecord coarse_obs;
    try {
        coarse_obs = coarsen(obs, grid);
    } catch (const std::exception& e) {
        // blame the first step the observation path does not reach
        for (int n = 0; n <= grid.n_steps; ++n) {
            try {
                obs.value_at(grid.time(n));
            } catch (const std::exception&) {
                throw StepFailure(std::max(n, 1), e.what());
            }
        }
        throw;
    }
    if (!settings.checkpoint_dir.empty()) std::filesystem::create_directories(settings.checkpoint_dir);

    std::vector<FilterStepResult> results;
    for (int n = first_step; n <= grid.n_steps; ++n) {
        FilterStepResult r;
        try {
            r = run_step(p, grid, n, prev, domain_for_step(domains, n, grid.n_steps), settings, obs, coarse_obs,
                         warm.get());
        } catch (const StepFailure&) {
            throw;
        } catch (const std::exception& e) {
            throw StepFailure(n, e.what());
        }
        if (!settings.checkpoint_dir.empty()) save_step_checkpoint(settings.checkpoint_dir, r);
        prev = DensityHandle(CompositePosterior{r.prior_net, r.domain, p, r.normalization.z_n, grid.dt,
                                                r.normalization.c_n});
        warm = r.prior_net;
        if (on_step) on_step(r);
        results.push_back(std::move(r));
    }
    return results;
}

}  // namespace

std::vector<FilterStepResult> run_filter(const BenesParameters& p, const TimeGrid& grid,
                                         const DensityHandle& initial, std::span<const Domain1D> domains,
                                         const FilterSettings& settings, const PathRecord& obs,
                                         const StepCallback& on_step) {
    return run_from(p, grid, 1, initial, nullptr, domains, settings, obs, on_step);
}

std::vector<FilterStepResult> resume_filter(const BenesParameters& p, const TimeGrid& grid,
                                            const StepCheckpoint& from, std::span<const Domain1D> domains,
                                            const FilterSettings& settings, const PathRecord& obs,
                                            const StepCallback& on_step) {
    return run_from(p, grid, from.step + 1, posterior_handle(p, grid.dt, from), from.net, domains, settings, obs,
                    on_step);
}

// ---- checkpoint directory ------------------------------------------------------------------
//   <dir>/step_NNN/network.txt         network checkpoint
//   <dir>/step_NNN/normalization.txt   key value pairs, doubles in hexfloat

namespace {

std::filesystem::path step_dir(const std::filesystem::path& dir, int step) {
    std::ostringstream name;
    name << "step_" << std::setw(3) << std::setfill('0') << step;
    return dir / name.str();
}

std::string hex(double x) {
    std::ostringstream s;
    s << std::hexfloat << x;
    return s.str();
}

}  // namespace

void save_step_checkpoint(const std::filesystem::path& dir, const FilterStepResult& r) {
    const auto sd = step_dir(dir, r.step);
    std::filesystem::create_directories(sd);
    save_network(sd / "network.txt", *r.prior_net);
    std::ofstream out(sd / "normalization.txt", std::ios::binary);
    out << "step " << r.step << '\n'
        << "domain_lo " << hex(r.domain.lo) << '\n'
        << "domain_hi " << hex(r.domain.hi) << '\n'
        << "resolution " << r.domain.resolution << '\n'
        << "z_n " << hex(r.normalization.z_n) << '\n'
        << "c_n " << hex(r.normalization.c_n) << '\n'
        << "mc_samples " << r.normalization.mc_samples << '\n'
        << "acceptance_rate " << hex(r.normalization.acceptance_rate) << '\n'
        << "standard_error " << hex(r.normalization.standard_error) << '\n';
    if (!out) throw std::runtime_error("cannot write checkpoint in " + sd.string());
}

StepCheckpoint load_step_checkpoint(const std::filesystem::path& dir, int step) {
    const auto sd = step_dir(dir, step);
    StepCheckpoint cp;
    cp.net = std::make_shared<const Network>(load_network(sd / "network.txt"));
    std::ifstream in(sd / "normalization.txt", std::ios::binary);
    if (!in) throw std::runtime_error("cannot read " + (sd / "normalization.txt").string());
    std::string key, value;
    int seen = 0;
    while (in >> key >> value) {
        const double x = std::strtod(value.c_str(), nullptr);
        ++seen;
        if (key == "step") cp.step = static_cast<int>(x);
        else if (key == "domain_lo") cp.domain.lo = x;
        else if (key == "domain_hi") cp.domain.hi = x;
        else if (key == "resolution") cp.domain.resolution = static_cast<int>(x);
        else if (key == "z_n") cp.normalization.z_n = x;
        else if (key == "c_n") cp.normalization.c_n = x;
        else if (key == "mc_samples") cp.normalization.mc_samples = static_cast<long>(x);
        else if (key == "acceptance_rate") cp.normalization.acceptance_rate = x;
        else if (key == "standard_error") cp.normalization.standard_error = x;
        else throw std::runtime_error("corrupted checkpoint: unknown key '" + key + "'");
    }
    if (seen != 9 || cp.step != step) throw std::runtime_error("corrupted checkpoint in " + sd.string());
    cp.domain.validate();
    return cp;
}

void write_posterior_csv(const std::filesystem::path& path, const FilterStepResult& r) {
    CsvWriter csv(path, {"z", "prior_net_value", "likelihood", "posterior"});
    for (int i = 0; i < r.domain.resolution; ++i)
        csv.row({r.domain.point(i), r.prior_grid[i], r.likelihood_grid[i], r.posterior_grid[i]});
}

void write_diagnostics_csv(const std::filesystem::path& path, std::span<const FilterStepResult> results) {
    CsvWriter csv(path, {"step", "time", "mean_est", "mean_exact", "abs_err", "l2_err", "mass", "acceptance",
                         "C_n", "C_n_stderr"});
    for (const auto& r : results) {
        const auto& d = r.diagnostics;
        csv.row({std::to_string(d.step), format_double(d.time), format_double(d.mean_estimate),
                 format_double(d.mean_exact), format_double(d.abs_error_means), format_double(d.l2_error_prior),
                 format_double(d.prior_mass), format_double(d.acceptance_rate), format_double(r.normalization.c_n),
                 format_double(r.normalization.standard_error)});
    }
}

}  // namespace benes
