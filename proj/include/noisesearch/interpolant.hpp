#pragma once

// Interpolant schedules for the noise-to-data path z_t = alpha_t * eps + beta_t * x1.
// Endpoint values are returned exactly (no cos(pi/2) residue) because several
// downstream identities rely on alpha_1 == 0 and beta_1 == 1 holding bitwise.

#include <cmath>
#include <stdexcept>

#include "common.hpp"

namespace noisesearch {

enum class Interpolant { kLinear, kVariancePreserving };

struct Schedule {
    double alpha;
    double beta;
    double alpha_dot;
    double beta_dot;
};

inline Schedule schedule(Interpolant kind, double t) {
    if (!(t >= 0.0 && t <= 1.0)) {
        throw std::domain_error("schedule: t outside [0,1]");
    }
    switch (kind) {
        case Interpolant::kLinear:
            return {1.0 - t, t, -1.0, 1.0};
        case Interpolant::kVariancePreserving: {
            constexpr double kHalfPi = 1.57079632679489661923;
            if (t == 0.0) return {1.0, 0.0, 0.0, kHalfPi};
            if (t == 1.0) return {0.0, 1.0, -kHalfPi, 0.0};
            const double a = kHalfPi * t;
            return {std::cos(a), std::sin(a), -kHalfPi * std::sin(a),
                    kHalfPi * std::cos(a)};
        }
    }
    throw InternalError("schedule: unknown interpolant");
}

inline const char* interpolant_name(Interpolant kind) {
    return kind == Interpolant::kLinear ? "linear" : "variance_preserving";
}

}  // namespace noisesearch
