#pragma once

// Closed-form flow-matching quantities for an isotropic Gaussian mixture
// target. With z_t = alpha_t * eps + beta_t * x1, eps ~ N(0, I) and
// x1 | k ~ N(mu_k, std_k^2 I), the time-t marginal of component k is
// N(beta_t mu_k, s_k^2 I) with s_k^2 = alpha_t^2 + beta_t^2 std_k^2.
// Everything below (responsibilities, marginal score, posterior mean of x1,
// velocity field) follows from Gaussian conditioning on that mixture; all
// densities are handled in log space with max subtraction.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

#include "common.hpp"
#include "interpolant.hpp"
#include "rng.hpp"

namespace noisesearch {

struct GmmComponent {
    double weight = 0.0;
    Vec mean;
    double std = 1.0;
};

struct GmmTarget {
    int dims = 2;
    std::vector<GmmComponent> components;

    void validate() const {
        if (dims < 1) throw ConfigError("gmm: dims must be >= 1");
        if (components.empty()) throw ConfigError("gmm: needs at least one component");
        double wsum = 0.0;
        for (std::size_t k = 0; k < components.size(); ++k) {
            const auto& c = components[k];
            if (!(c.weight > 0.0)) throw ConfigError("gmm: weights must be positive");
            if (!(c.std > 0.0)) throw ConfigError("gmm: component stds must be positive");
            if (c.mean.size() != static_cast<std::size_t>(dims)) {
                throw ConfigError("gmm: component mean has wrong dimension");
            }
            if (!all_finite(c.mean)) throw ConfigError("gmm: component mean not finite");
            wsum += c.weight;
        }
        if (std::abs(wsum - 1.0) > 1e-12) {
            throw ConfigError("gmm: weights must sum to 1 within 1e-12");
        }
    }
};

inline double component_marginal_std(Interpolant kind, double t, double std_k) {
    const Schedule s = schedule(kind, t);
    return std::sqrt(s.alpha * s.alpha + s.beta * s.beta * std_k * std_k);
}

namespace detail {

constexpr double kLog2Pi = 1.8378770664093454836;

inline void check_point(const GmmTarget& target, const Vec& z) {
    if (z.size() != static_cast<std::size_t>(target.dims)) {
        throw std::domain_error("gmm: point has wrong dimension");
    }
    if (!all_finite(z)) throw std::domain_error("gmm: point not finite");
}

// log N(z; beta*mu_k, s_k^2 I) + log w_k for every component, shared by the
// public queries below.
inline std::vector<double> component_log_terms(const GmmTarget& target,
                                               Interpolant kind, const Vec& z,
                                               double t) {
    check_point(target, z);
    const Schedule sc = schedule(kind, t);
    const double d = static_cast<double>(target.dims);
    std::vector<double> lt(target.components.size());
    for (std::size_t k = 0; k < target.components.size(); ++k) {
        const auto& c = target.components[k];
        const double var = sc.alpha * sc.alpha + sc.beta * sc.beta * c.std * c.std;
        double q = 0.0;
        for (int i = 0; i < target.dims; ++i) {
            const double r = z[i] - sc.beta * c.mean[i];
            q += r * r;
        }
        lt[k] = std::log(c.weight) - 0.5 * d * (kLog2Pi + std::log(var)) -
                0.5 * q / var;
    }
    return lt;
}

inline double log_sum_exp(const std::vector<double>& v) {
    const double m = *std::max_element(v.begin(), v.end());
    if (!std::isfinite(m)) return m;
    double s = 0.0;
    for (double x : v) s += std::exp(x - m);
    return m + std::log(s);
}

}  // namespace detail

// Posterior component probabilities gamma_k(z, t). Sum to 1 exactly up to
// floating point; degenerate all-underflow cases resolve through the max
// subtraction, never to NaN.
inline Vec responsibilities(const GmmTarget& target, Interpolant kind, const Vec& z,
                            double t) {
    const auto lt = detail::component_log_terms(target, kind, z, t);
    const double m = *std::max_element(lt.begin(), lt.end());
    Vec g(lt.size());
    double s = 0.0;
    for (std::size_t k = 0; k < lt.size(); ++k) {
        g[k] = std::exp(lt[k] - m);
        s += g[k];
    }
    for (auto& x : g) x /= s;
    return g;
}

inline double log_marginal_density(const GmmTarget& target, Interpolant kind,
                                   const Vec& z, double t) {
    return detail::log_sum_exp(detail::component_log_terms(target, kind, z, t));
}

// grad_z log p_t(z) = sum_k gamma_k * (beta mu_k - z) / s_k^2.
inline Vec score(const GmmTarget& target, Interpolant kind, const Vec& z, double t) {
    const Vec g = responsibilities(target, kind, z, t);
    const Schedule sc = schedule(kind, t);
    Vec out(target.dims, 0.0);
    for (std::size_t k = 0; k < target.components.size(); ++k) {
        const auto& c = target.components[k];
        const double var = sc.alpha * sc.alpha + sc.beta * sc.beta * c.std * c.std;
        for (int i = 0; i < target.dims; ++i) {
            out[i] += g[k] * (sc.beta * c.mean[i] - z[i]) / var;
        }
    }
    return out;
}

// E[x1 | z_t = z], the denoised estimate of the clean sample. At alpha == 0
// the observation determines x1 = z / beta directly; the early return keeps
// the t = 1 identity exact instead of round-tripping through mu + (z - mu).
inline Vec posterior_mean_x1(const GmmTarget& target, Interpolant kind, const Vec& z,
                             double t) {
    const Schedule sc = schedule(kind, t);
    if (sc.alpha == 0.0) {
        detail::check_point(target, z);
        Vec out(z);
        for (auto& x : out) x /= sc.beta;
        return out;
    }
    const Vec g = responsibilities(target, kind, z, t);
    Vec out(target.dims, 0.0);
    for (std::size_t k = 0; k < target.components.size(); ++k) {
        const auto& c = target.components[k];
        const double var = sc.alpha * sc.alpha + sc.beta * sc.beta * c.std * c.std;
        const double gain = sc.beta * c.std * c.std / var;
        for (int i = 0; i < target.dims; ++i) {
            out[i] += g[k] * (c.mean[i] + gain * (z[i] - sc.beta * c.mean[i]));
        }
    }
    return out;
}

// Marginal velocity v(z,t) = alpha_dot * E[eps | z] + beta_dot * E[x1 | z],
// with E[eps | z, k] = alpha * (z - beta mu_k) / s_k^2.
inline Vec velocity(const GmmTarget& target, Interpolant kind, const Vec& z, double t) {
    const Schedule sc = schedule(kind, t);
    const Vec g = responsibilities(target, kind, z, t);
    Vec out(target.dims, 0.0);
    for (std::size_t k = 0; k < target.components.size(); ++k) {
        const auto& c = target.components[k];
        const double var = sc.alpha * sc.alpha + sc.beta * sc.beta * c.std * c.std;
        const double gain = sc.beta * c.std * c.std / var;
        for (int i = 0; i < target.dims; ++i) {
            const double r = z[i] - sc.beta * c.mean[i];
            const double eps_k = sc.alpha * r / var;
            const double x1_k = c.mean[i] + gain * r;
            out[i] += g[k] * (sc.alpha_dot * eps_k + sc.beta_dot * x1_k);
        }
    }
    return out;
}

inline Vec sample_prior(int dims, Rng& rng) { return rng.normal_vec(dims); }

}  // namespace noisesearch
