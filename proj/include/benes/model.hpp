#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace benes {

// Coefficients of the Benes model
//   dX = f(X) dt + sigma dV,   f(x) = alpha*sigma*tanh(beta + alpha*x/sigma)
//   dY = h(X) dt + dW,         h(x) = h1*x + h2
struct BenesParameters {
    double alpha = 3.0;
    double beta = 0.0;
    double sigma = 0.5;
    double h1 = 3.0;
    double h2 = 0.0;
    double x0 = 0.0;

    void validate() const;
};

// Uniform filter grid t_n = t0 + n*dt with `substeps` Euler-Maruyama steps per interval.
struct TimeGrid {
    double t0 = 0.0;
    double dt = 0.1;
    int n_steps = 40;
    int substeps = 10;

    double time(int n) const { return t0 + n * dt; }
    double substep() const { return dt / substeps; }
    std::size_t total_substeps() const {
        return static_cast<std::size_t>(n_steps) * static_cast<std::size_t>(substeps);
    }
    void validate() const;
};

struct Domain1D {
    double lo = -9.0;
    double hi = 2.5;
    int resolution = 1000;

    double length() const { return hi - lo; }
    double spacing() const { return (hi - lo) / (resolution - 1); }
    double point(int i) const {
        // last point pinned to hi so the grid covers the closed interval exactly
        return i == resolution - 1 ? hi : lo + i * spacing();
    }
    std::vector<double> points() const;
    bool contains(double z) const { return z >= lo && z <= hi; }
    void validate() const;
};

enum class PathKind { signal, observation, auxiliary };

std::string to_string(PathKind kind);

struct PathRecord {
    std::vector<double> times;
    std::vector<double> values;
    PathKind kind = PathKind::signal;

    std::size_t size() const { return times.size(); }
    // Index of the sample recorded at time t; throws if t is not on the grid.
    std::size_t index_of(double t) const;
    double value_at(double t) const { return values[index_of(t)]; }
    void validate() const;
};

// Restriction of a path to the filter times t_0..t_N.
PathRecord coarsen(const PathRecord& path, const TimeGrid& grid);

inline double drift_f(const BenesParameters& p, double x) {
    return p.alpha * p.sigma * std::tanh(p.beta + p.alpha * x / p.sigma);
}

inline double sensor_h(const BenesParameters& p, double x) { return p.h1 * x + p.h2; }

// Drift of the auxiliary diffusion, b = 2 div(a) - f with div(a) = 0 for constant sigma.
inline double auxiliary_drift_b(const BenesParameters& p, double x) { return -drift_f(p, x); }

// Zero-order coefficient r = -f' = -alpha^2 sech^2(beta + alpha*x/sigma).
inline double potential_r(const BenesParameters& p, double x) {
    const double c = std::cosh(p.beta + p.alpha * x / p.sigma);
    return -(p.alpha * p.alpha) / (c * c);
}

}  // namespace benes
