#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace noisesearch {

using Vec = std::vector<double>;

// Error taxonomy. ConfigError covers anything a user can fix (bad config keys,
// invalid schedules, malformed bench files) and maps to CLI exit code 1.
// StateError and InternalError are programming-contract violations and map to
// exit code 2. Math-domain violations (t outside [0,1], non-finite inputs)
// throw std::domain_error.
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct StateError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct InternalError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

inline bool all_finite(const Vec& v) {
    for (double x : v) {
        if (!std::isfinite(x)) return false;
    }
    return true;
}

inline double dot(const Vec& a, const Vec& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

inline double squared_distance(const Vec& a, const Vec& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        s += d * d;
    }
    return s;
}

inline double norm(const Vec& a) { return std::sqrt(dot(a, a)); }

}  // namespace noisesearch
