#include "benes/model.hpp"

#include <algorithm>
#include <stdexcept>

namespace benes {

void BenesParameters::validate() const {
    if (!(sigma > 0.0) || !std::isfinite(sigma))
        throw std::invalid_argument("sigma must be positive, got " + std::to_string(sigma));
    if (h1 == 0.0 || !std::isfinite(h1))
        throw std::invalid_argument("h1 must be non-zero");
    if (!std::isfinite(alpha) || !std::isfinite(beta) || !std::isfinite(h2) || !std::isfinite(x0))
        throw std::invalid_argument("model coefficients must be finite");
}

void TimeGrid::validate() const {
    if (!(dt > 0.0)) throw std::invalid_argument("dt must be positive");
    if (n_steps < 1) throw std::invalid_argument("steps must be at least 1");
    if (substeps < 1) throw std::invalid_argument("substeps must be at least 1");
}

std::vector<double> Domain1D::points() const {
    std::vector<double> z(static_cast<std::size_t>(resolution));
    for (int i = 0; i < resolution; ++i) z[i] = point(i);
    return z;
}

void Domain1D::validate() const {
    if (!(lo < hi)) throw std::invalid_argument("domain requires lo < hi");
    if (resolution < 2) throw std::invalid_argument("domain resolution must be at least 2");
}

std::string to_string(PathKind kind) {
    switch (kind) {
        case PathKind::signal: return "signal";
        case PathKind::observation: return "observation";
        case PathKind::auxiliary: return "auxiliary";
    }
    return "unknown";
}

std::size_t PathRecord::index_of(double t) const {
    const double tol = 1e-9 * (1.0 + std::abs(t));
    auto it = std::lower_bound(times.begin(), times.end(), t - tol);
    if (it == times.end() || std::abs(*it - t) > tol)
        throw std::out_of_range("time " + std::to_string(t) + " is not on the " + to_string(kind) +
                                " path grid");
    return static_cast<std::size_t>(it - times.begin());
}

void PathRecord::validate() const {
    if (times.size() != values.size()) throw std::invalid_argument("path times/values length mismatch");
    if (times.empty()) throw std::invalid_argument("path is empty");
    for (std::size_t i = 1; i < times.size(); ++i)
        if (!(times[i] > times[i - 1])) throw std::invalid_argument("path times must be ascending");
    if (kind == PathKind::observation && values.front() != 0.0)
        throw std::invalid_argument("observation paths start at Y_0 = 0");
}

PathRecord coarsen(const PathRecord& path, const TimeGrid& grid) {
    PathRecord out;
    out.kind = path.kind;
    out.times.reserve(grid.n_steps + 1);
    out.values.reserve(grid.n_steps + 1);
    for (int n = 0; n <= grid.n_steps; ++n) {
        const double t = grid.time(n);
        out.times.push_back(t);
        out.values.push_back(path.value_at(t));
    }
    return out;
}

}  // namespace benes
