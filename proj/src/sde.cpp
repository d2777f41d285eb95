#include "benes/sde.hpp"

#include <stdexcept>

#include "benes/csv.hpp"
#include "benes/parallel.hpp"

namespace benes {

PathRecord simulate_signal(const BenesParameters& p, const TimeGrid& grid, RngSeed rng) {
    grid.validate();
    const std::size_t n = grid.total_substeps();
    const double h = grid.substep();
    const double noise = p.sigma * std::sqrt(h);
    Engine engine = make_engine(rng);
    std::normal_distribution<double> normal;

    PathRecord path;
    path.kind = PathKind::signal;
    path.times.resize(n + 1);
    path.values.resize(n + 1);
    path.times[0] = grid.t0;
    path.values[0] = p.x0;
    for (std::size_t k = 0; k < n; ++k) {
        const double x = path.values[k];
        path.values[k + 1] = x + drift_f(p, x) * h + noise * normal(engine);
        path.times[k + 1] = grid.t0 + static_cast<double>(k + 1) * h;
    }
    return path;
}

PathRecord simulate_observation(const BenesParameters& p, const PathRecord& signal, RngSeed rng) {
    signal.validate();
    Engine engine = make_engine(rng);
    std::normal_distribution<double> normal;

    PathRecord obs;
    obs.kind = PathKind::observation;
    obs.times = signal.times;
    obs.values.resize(signal.size());
    obs.values[0] = 0.0;
    for (std::size_t k = 0; k + 1 < signal.size(); ++k) {
        const double dtau = signal.times[k + 1] - signal.times[k];
        obs.values[k + 1] =
            obs.values[k] + sensor_h(p, signal.values[k]) * dtau + std::sqrt(dtau) * normal(engine);
    }
    return obs;
}

std::vector<WeightedEndpoint> sample_auxiliary_batch(const BenesParameters& p, const Domain1D& domain,
                                                     double dt, int substeps, std::size_t batch,
                                                     RngSeed rng) {
    if (batch < 1) throw std::invalid_argument("auxiliary batch must be non-empty");
    if (substeps < 1 || !(dt > 0.0)) throw std::invalid_argument("invalid auxiliary time step");
    std::vector<WeightedEndpoint> out(batch);
    parallel_for(chunk_count(batch, kAuxiliaryChunk), [&](std::size_t chunk) {
        Engine engine = make_engine(rng, chunk);
        std::uniform_real_distribution<double> uniform(domain.lo, domain.hi);
        std::normal_distribution<double> normal;
        const std::size_t end = std::min(batch, (chunk + 1) * kAuxiliaryChunk);
        for (std::size_t i = chunk * kAuxiliaryChunk; i < end; ++i) {
            const double start = uniform(engine);
            out[i] = propagate_auxiliary(p, start, dt, substeps, engine, normal);
        }
    });
    return out;
}

void write_path_csv(const std::filesystem::path& path, const PathRecord& record) {
    CsvWriter csv(path, {"time", "value"});
    for (std::size_t i = 0; i < record.size(); ++i) csv.row({record.times[i], record.values[i]});
}

PathRecord read_path_csv(const std::filesystem::path& path, PathKind kind) {
    const CsvTable table = read_csv(path);
    const std::size_t ct = table.column("time");
    const std::size_t cv = table.column("value");
    PathRecord record;
    record.kind = kind;
    for (const auto& row : table.rows) {
        record.times.push_back(parse_double(row[ct]));
        record.values.push_back(parse_double(row[cv]));
    }
    record.validate();
    return record;
}

}  // namespace benes
