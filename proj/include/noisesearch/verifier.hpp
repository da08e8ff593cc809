#pragma once

// Prompts and synthetic verifiers. A prompt constrains which mixture
// components count as correct; a verifier scores a denoised estimate against
// that constraint. Verifiers are imperfect on purpose (noisy and blurred
// variants) while the success judge stays exact, mirroring the gap between a
// reward model used for search and the evaluation metric.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "common.hpp"
#include "gmm.hpp"
#include "rng.hpp"

namespace noisesearch {

enum class AttributeTag { kSingleObject, kPosition, kAttributeBinding };

inline const char* attribute_tag_name(AttributeTag tag) {
    switch (tag) {
        case AttributeTag::kSingleObject: return "single_object";
        case AttributeTag::kPosition: return "position";
        case AttributeTag::kAttributeBinding: return "attribute_binding";
    }
    throw InternalError("unknown attribute tag");
}

inline AttributeTag attribute_tag_from_name(const std::string& s) {
    if (s == "single_object") return AttributeTag::kSingleObject;
    if (s == "position") return AttributeTag::kPosition;
    if (s == "attribute_binding") return AttributeTag::kAttributeBinding;
    throw ConfigError("unknown attribute tag '" + s + "'");
}

// mode(k): the sample must belong to component k.
// quadrant(signs): the sample's component mean must match the sign pattern in
// every constrained dimension (entries -1, 0, +1; 0 = unconstrained).
// all(...): every part must hold for the same component.
struct Constraint {
    enum class Kind { kModeIs, kInQuadrant, kComposite };
    Kind kind = Kind::kModeIs;
    int mode = -1;
    std::vector<int> signs;
    std::vector<Constraint> parts;

    static Constraint mode_is(int k) {
        Constraint c;
        c.kind = Kind::kModeIs;
        c.mode = k;
        return c;
    }
    static Constraint in_quadrant(std::vector<int> signs) {
        Constraint c;
        c.kind = Kind::kInQuadrant;
        c.signs = std::move(signs);
        return c;
    }
    static Constraint all_of(std::vector<Constraint> parts) {
        Constraint c;
        c.kind = Kind::kComposite;
        c.parts = std::move(parts);
        return c;
    }
};

struct Prompt {
    std::string id;
    AttributeTag tag = AttributeTag::kSingleObject;
    Constraint constraint;
};

inline void validate_constraint(const Constraint& c, const GmmTarget& target) {
    switch (c.kind) {
        case Constraint::Kind::kModeIs:
            if (c.mode < 0 || c.mode >= static_cast<int>(target.components.size())) {
                throw ConfigError("constraint references component out of range");
            }
            return;
        case Constraint::Kind::kInQuadrant: {
            if (c.signs.size() != static_cast<std::size_t>(target.dims)) {
                throw ConfigError("quadrant constraint has wrong dimension");
            }
            bool any = false;
            for (int s : c.signs) {
                if (s < -1 || s > 1) throw ConfigError("quadrant signs must be -1, 0 or 1");
                any = any || s != 0;
            }
            if (!any) throw ConfigError("quadrant constraint must fix at least one axis");
            return;
        }
        case Constraint::Kind::kComposite:
            if (c.parts.empty()) throw ConfigError("composite constraint is empty");
            for (const auto& p : c.parts) validate_constraint(p, target);
            return;
    }
    throw InternalError("unknown constraint kind");
}

inline bool component_satisfies(const Constraint& c, const GmmTarget& target, int k) {
    switch (c.kind) {
        case Constraint::Kind::kModeIs:
            return k == c.mode;
        case Constraint::Kind::kInQuadrant: {
            const Vec& mu = target.components[static_cast<std::size_t>(k)].mean;
            for (int i = 0; i < target.dims; ++i) {
                const int s = c.signs[static_cast<std::size_t>(i)];
                if (s == 0) continue;
                if (s > 0 && !(mu[static_cast<std::size_t>(i)] > 0.0)) return false;
                if (s < 0 && !(mu[static_cast<std::size_t>(i)] < 0.0)) return false;
            }
            return true;
        }
        case Constraint::Kind::kComposite:
            for (const auto& p : c.parts) {
                if (!component_satisfies(p, target, k)) return false;
            }
            return true;
    }
    throw InternalError("unknown constraint kind");
}

inline std::vector<int> satisfying_components(const Constraint& c,
                                              const GmmTarget& target) {
    validate_constraint(c, target);
    std::vector<int> out;
    for (int k = 0; k < static_cast<int>(target.components.size()); ++k) {
        if (component_satisfies(c, target, k)) out.push_back(k);
    }
    return out;
}

struct VerifierSpec {
    enum class Kind { kOracleLogLik, kNegDistance, kNoisyOracle, kBlurred };
    Kind kind = Kind::kOracleLogLik;
    double noise_std = 0.0;          // noisy_oracle
    double extra_std = 0.75;         // blurred
    std::uint64_t seed_stream = 0;   // noisy_oracle stream id
};

inline const char* verifier_kind_name(VerifierSpec::Kind k) {
    switch (k) {
        case VerifierSpec::Kind::kOracleLogLik: return "oracle_loglik";
        case VerifierSpec::Kind::kNegDistance: return "neg_distance";
        case VerifierSpec::Kind::kNoisyOracle: return "noisy_oracle";
        case VerifierSpec::Kind::kBlurred: return "blurred";
    }
    throw InternalError("unknown verifier kind");
}

struct Reward {
    double value = 0.0;
    int verifier_calls = 1;
};

// Score used when no component satisfies a constraint. Prompt construction
// should make this unreachable; it exists so the scorer never throws mid-run.
constexpr double kUnsatisfiableReward = -1e9;

// One verifier bound to a target. Holds the private noise stream for
// noisy_oracle so verifier noise never touches the generator stream.
class VerifierContext {
  public:
    VerifierContext(const VerifierSpec& spec, const GmmTarget* target, Rng noise_rng)
        : spec_(spec), target_(target), rng_(noise_rng) {
        if (spec.kind == VerifierSpec::Kind::kNoisyOracle && !(spec.noise_std > 0.0)) {
            throw ConfigError("noisy_oracle requires noise_std > 0");
        }
        if (spec.kind == VerifierSpec::Kind::kBlurred && !(spec.extra_std > 0.0)) {
            throw ConfigError("blurred requires extra_std > 0");
        }
    }

    Reward evaluate(const Vec& x_hat, const Prompt& prompt) {
        validate_constraint(prompt.constraint, *target_);
        if (x_hat.size() != static_cast<std::size_t>(target_->dims)) {
            throw std::domain_error("verifier: sample has wrong dimension");
        }
        if (!all_finite(x_hat)) throw std::domain_error("verifier: sample not finite");
        switch (spec_.kind) {
            case VerifierSpec::Kind::kOracleLogLik:
                return {masked_log_density(x_hat, prompt.constraint, 0.0), 1};
            case VerifierSpec::Kind::kNegDistance:
                return {neg_distance(x_hat, prompt.constraint), 1};
            case VerifierSpec::Kind::kNoisyOracle:
                return {masked_log_density(x_hat, prompt.constraint, 0.0) +
                            spec_.noise_std * rng_.normal(),
                        1};
            case VerifierSpec::Kind::kBlurred:
                // Blur the target by an extra Gaussian: variances add.
                return {masked_log_density(x_hat, prompt.constraint,
                                           spec_.extra_std * spec_.extra_std),
                        1};
        }
        throw InternalError("unknown verifier kind");
    }

  private:
    double masked_log_density(const Vec& x, const Constraint& c,
                              double extra_var) const {
        const auto sat = satisfying_components(c, *target_);
        if (sat.empty()) return kUnsatisfiableReward;
        const double d = static_cast<double>(target_->dims);
        // mode(k) scores the bare component density; set constraints score the
        // mixture restricted to (weights kept on) the satisfying components.
        const bool weighted = c.kind != Constraint::Kind::kModeIs;
        std::vector<double> lt;
        lt.reserve(sat.size());
        for (int k : sat) {
            const auto& comp = target_->components[static_cast<std::size_t>(k)];
            const double var = comp.std * comp.std + extra_var;
            double q = 0.0;
            for (int i = 0; i < target_->dims; ++i) {
                const double r = x[static_cast<std::size_t>(i)] -
                                 comp.mean[static_cast<std::size_t>(i)];
                q += r * r;
            }
            double term = -0.5 * d * (detail::kLog2Pi + std::log(var)) - 0.5 * q / var;
            if (weighted) term += std::log(comp.weight);
            lt.push_back(term);
        }
        return detail::log_sum_exp(lt);
    }

    double neg_distance(const Vec& x, const Constraint& c) const {
        const auto sat = satisfying_components(c, *target_);
        if (sat.empty()) return kUnsatisfiableReward;
        double best = std::numeric_limits<double>::infinity();
        for (int k : sat) {
            best = std::min(best, squared_distance(
                                      x, target_->components[static_cast<std::size_t>(k)].mean));
        }
        return -std::sqrt(best);
    }

    VerifierSpec spec_;
    const GmmTarget* target_;
    Rng rng_;
};

// Exact judge: the sample must land near a satisfying component. Nearest mean
// over all components decides ownership (ties to the lowest index); the owner
// must satisfy the constraint and lie within radius_mult * its std.
inline bool success(const Prompt& prompt, const Vec& x, const GmmTarget& target,
                    double radius_mult) {
    validate_constraint(prompt.constraint, target);
    if (x.size() != static_cast<std::size_t>(target.dims) || !all_finite(x)) {
        throw std::domain_error("success: sample invalid");
    }
    if (!(radius_mult > 0.0)) throw ConfigError("success: radius_mult must be > 0");
    int nearest = 0;
    double best = squared_distance(x, target.components[0].mean);
    for (int k = 1; k < static_cast<int>(target.components.size()); ++k) {
        const double d = squared_distance(x, target.components[static_cast<std::size_t>(k)].mean);
        if (d < best) {
            best = d;
            nearest = k;
        }
    }
    const auto& owner = target.components[static_cast<std::size_t>(nearest)];
    if (!component_satisfies(prompt.constraint, target, nearest)) return false;
    const double radius = radius_mult * owner.std;
    return best <= radius * radius;
}

}  // namespace noisesearch
