#pragma once

// Time discretization and the one-step sampler. A step integrates either the
// probability-flow ODE (gamma == 0) or the marginal-preserving SDE
//   dz = [v(z,t) + sigma(t)^2/2 * score(z,t)] dt + sigma(t) dW,
// with churn scale sigma(t) = gamma * alpha_t, via Euler-Maruyama. One call
// is one NFE; budget accounting belongs to the caller.

#include <cmath>
#include <utility>
#include <vector>

#include "common.hpp"
#include "gmm.hpp"
#include "interpolant.hpp"
#include "rng.hpp"

namespace noisesearch {

struct TimeGrid {
    std::vector<double> times;  // size steps()+1, times[0] == 0, times.back() == 1

    static TimeGrid uniform(int steps) {
        if (steps < 1) throw ConfigError("time grid: steps must be >= 1");
        TimeGrid g;
        g.times.resize(static_cast<std::size_t>(steps) + 1);
        for (int i = 0; i <= steps; ++i) {
            g.times[static_cast<std::size_t>(i)] =
                static_cast<double>(i) / static_cast<double>(steps);
        }
        return g;
    }

    static TimeGrid from_times(std::vector<double> times) {
        if (times.size() < 2) throw ConfigError("time grid: needs at least 2 times");
        if (times.front() != 0.0 || times.back() != 1.0) {
            throw ConfigError("time grid: must start at 0 and end at 1");
        }
        for (std::size_t i = 1; i < times.size(); ++i) {
            if (!(times[i] > times[i - 1])) {
                throw ConfigError("time grid: times must be strictly increasing");
            }
        }
        TimeGrid g;
        g.times = std::move(times);
        return g;
    }

    int steps() const { return static_cast<int>(times.size()) - 1; }
};

struct FlowState {
    Vec z;
    int step = 0;
    double time = 0.0;  // always equals grid.times[step]
};

struct SdeChurn {
    double gamma = 0.5;  // 0 disables churn and recovers the deterministic ODE
};

inline FlowState make_initial_state(Vec z, const TimeGrid& grid) {
    return FlowState{std::move(z), 0, grid.times[0]};
}

inline double churn_sigma(const SdeChurn& churn, Interpolant kind, double t) {
    if (churn.gamma < 0.0) throw ConfigError("churn: gamma must be >= 0");
    return churn.gamma * schedule(kind, t).alpha;
}

// Advance one grid step. The rng is consumed only when sigma > 0, so a
// gamma = 0 run is bitwise identical to the ODE path and leaves the stream
// untouched for the caller.
inline FlowState step(const FlowState& state, const GmmTarget& target,
                      Interpolant kind, const TimeGrid& grid, const SdeChurn& churn,
                      Rng& rng) {
    if (state.step >= grid.steps()) {
        throw StateError("flow step: state already at the end of the grid");
    }
    const double t = state.time;
    const double t_next = grid.times[static_cast<std::size_t>(state.step) + 1];
    const double dt = t_next - t;
    const Vec v = velocity(target, kind, state.z, t);
    const double sigma = churn_sigma(churn, kind, t);

    Vec z = state.z;
    if (sigma > 0.0) {
        const Vec sc = score(target, kind, state.z, t);
        const double root_dt = std::sqrt(dt);
        for (int i = 0; i < target.dims; ++i) {
            z[static_cast<std::size_t>(i)] +=
                (v[static_cast<std::size_t>(i)] +
                 0.5 * sigma * sigma * sc[static_cast<std::size_t>(i)]) *
                    dt +
                sigma * root_dt * rng.normal();
        }
    } else {
        for (int i = 0; i < target.dims; ++i) {
            z[static_cast<std::size_t>(i)] += v[static_cast<std::size_t>(i)] * dt;
        }
    }
    return FlowState{std::move(z), state.step + 1, t_next};
}

}  // namespace noisesearch
