#pragma once

// Typed experiment configuration: strict mapping between the line-oriented
// config format and ExperimentConfig, plus the canonical serialization the
// manifest hash is computed over. Serialization is a fixed point: parsing the
// canonical text and serializing again reproduces it byte for byte.

#include <cstdint>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "bench.hpp"
#include "common.hpp"
#include "configfile.hpp"
#include "flow.hpp"
#include "interpolant.hpp"
#include "rng.hpp"
#include "strategies.hpp"
#include "verifier.hpp"

namespace noisesearch {

struct VerifierEntry {
    std::string name;
    VerifierSpec spec;
    double cost_weight = 0.2;
};

struct ExperimentConfig {
    // [bench] — either a pinned file or generation parameters.
    std::string bench_file;
    BenchConfig bench_gen;

    // [grid]
    int steps = 10;
    std::vector<double> times;  // empty -> uniform grid over `steps`
    Interpolant interpolant = Interpolant::kLinear;

    // [churn]
    double gamma = 0.5;

    // [cost]
    double nfe_weight = 1.0;
    double nanos_per_cost = 1000.0;

    // [experiment]
    std::vector<int> budgets = {40, 80, 160};
    std::vector<std::uint64_t> seeds = {1, 2, 3};
    int parallelism = 1;

    std::vector<VerifierEntry> verifiers;
    std::vector<StrategyConfig> strategies;

    TimeGrid make_grid() const {
        return times.empty() ? TimeGrid::uniform(steps) : TimeGrid::from_times(times);
    }

    void validate() const {
        if (bench_file.empty()) bench_gen.validate();
        if (steps < 1) throw ConfigError("[grid] steps must be >= 1");
        make_grid();
        if (!times.empty() && static_cast<int>(times.size()) != steps + 1) {
            throw ConfigError("[grid] times must list steps + 1 values");
        }
        if (gamma < 0.0) throw ConfigError("[churn] gamma must be >= 0");
        if (nfe_weight < 0.0) throw ConfigError("[cost] nfe_weight must be >= 0");
        if (nanos_per_cost < 0.0) throw ConfigError("[cost] nanos_per_cost must be >= 0");
        if (budgets.empty()) throw ConfigError("[experiment] budgets must be non-empty");
        for (int b : budgets) {
            if (b < steps) {
                throw ConfigError("[experiment] budget " + std::to_string(b) +
                                  " is below the " + std::to_string(steps) +
                                  " NFEs a full denoising pass needs");
            }
        }
        if (seeds.empty()) throw ConfigError("[experiment] seeds must be non-empty");
        if (parallelism < 1) throw ConfigError("[experiment] parallelism must be >= 1");
        if (verifiers.empty()) throw ConfigError("config needs at least one [verifier.<name>]");
        if (strategies.empty()) throw ConfigError("config needs at least one [strategy.<name>]");

        std::set<std::string> names;
        for (const auto& v : verifiers) {
            if (!names.insert(v.name).second) {
                throw ConfigError("duplicate verifier name '" + v.name + "'");
            }
            if (v.cost_weight < 0.0) {
                throw ConfigError("[verifier." + v.name + "] cost_weight must be >= 0");
            }
        }
        names.clear();
        for (const auto& s : strategies) {
            if (!names.insert(s.name).second) {
                throw ConfigError("duplicate strategy name '" + s.name + "'");
            }
            s.validate(steps);
            if (s.kind == StrategyConfig::Kind::kManual) {
                int sum = 0;
                for (int c : s.schedule) sum += c;
                for (int b : budgets) {
                    if (sum != b) {
                        throw ConfigError("[strategy." + s.name + "].schedule sums to " +
                                          std::to_string(sum) + " but budget " +
                                          std::to_string(b) + " is in play");
                    }
                }
            }
        }
    }
};

namespace cfg {

inline void check_name(const std::string& name, const std::string& section) {
    if (name.empty()) throw ConfigError("[" + section + "] is missing a name suffix");
    for (char c : name) {
        const bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') ||
                        (c >= '0' && c <= '9') || c == '_' || c == '-';
        if (!ok) {
            throw ConfigError("[" + section + "]: name may use letters, digits, '_' and '-'");
        }
    }
}

inline Interpolant interpolant_from_name(const ConfigEntry& e) {
    if (e.value == "linear") return Interpolant::kLinear;
    if (e.value == "variance_preserving") return Interpolant::kVariancePreserving;
    throw ConfigError(line_msg(e.line, "interpolant must be linear or variance_preserving"));
}

inline VerifierSpec::Kind verifier_kind_from_name(const ConfigEntry& e) {
    if (e.value == "oracle_loglik") return VerifierSpec::Kind::kOracleLogLik;
    if (e.value == "neg_distance") return VerifierSpec::Kind::kNegDistance;
    if (e.value == "noisy_oracle") return VerifierSpec::Kind::kNoisyOracle;
    if (e.value == "blurred") return VerifierSpec::Kind::kBlurred;
    throw ConfigError(line_msg(e.line, "unknown verifier kind '" + e.value + "'"));
}

inline StrategyConfig::Kind strategy_kind_from_name(const ConfigEntry& e) {
    if (e.value == "regular") return StrategyConfig::Kind::kRegular;
    if (e.value == "best_of_n") return StrategyConfig::Kind::kBestOfN;
    if (e.value == "search_over_paths") return StrategyConfig::Kind::kSearchOverPaths;
    if (e.value == "svdd") return StrategyConfig::Kind::kSvdd;
    if (e.value == "rollover_budget") return StrategyConfig::Kind::kRolloverBudget;
    if (e.value == "manual") return StrategyConfig::Kind::kManual;
    if (e.value == "verifier_threshold") return StrategyConfig::Kind::kVerifierThreshold;
    throw ConfigError(line_msg(e.line, "unknown strategy kind '" + e.value + "'"));
}

inline const ConfigEntry& require(const ConfigSection& s, const std::string& key) {
    const ConfigEntry* e = s.find(key);
    if (!e) {
        throw ConfigError(line_msg(s.line, "[" + s.name + "] is missing required key '" +
                                               key + "'"));
    }
    return *e;
}

inline void load_bench_section(const ConfigSection& s, ExperimentConfig& out) {
    const ConfigEntry* file = s.find("file");
    bool any_gen = false;
    if (const ConfigEntry* e = s.find("n_modes")) {
        out.bench_gen.n_modes = static_cast<int>(to_int(*e));
        any_gen = true;
    }
    if (const ConfigEntry* e = s.find("n_prompts_per_tag")) {
        out.bench_gen.n_prompts_per_tag = static_cast<int>(to_int(*e));
        any_gen = true;
    }
    if (const ConfigEntry* e = s.find("radius_mult")) {
        out.bench_gen.radius_mult = to_real(*e);
        any_gen = true;
    }
    if (const ConfigEntry* e = s.find("std")) {
        out.bench_gen.component_std = to_real(*e);
        any_gen = true;
    }
    if (const ConfigEntry* e = s.find("seed")) {
        out.bench_gen.seed = to_u64(*e);
        any_gen = true;
    }
    if (file && any_gen) {
        throw ConfigError(line_msg(s.line,
                                   "[bench] takes either 'file' or generation keys, not both"));
    }
    if (file) out.bench_file = file->value;
    reject_unknown(s);
}

inline void load_grid_section(const ConfigSection& s, ExperimentConfig& out) {
    if (const ConfigEntry* e = s.find("steps")) out.steps = static_cast<int>(to_int(*e));
    if (const ConfigEntry* e = s.find("times")) {
        out.times = to_list<double>(*e, [](const ConfigEntry& x) { return to_real(x); });
        if (!s.find("steps")) out.steps = static_cast<int>(out.times.size()) - 1;
    }
    if (const ConfigEntry* e = s.find("interpolant")) {
        out.interpolant = interpolant_from_name(*e);
    }
    reject_unknown(s);
}

inline VerifierEntry load_verifier_section(const ConfigSection& s, const std::string& name) {
    check_name(name, s.name);
    VerifierEntry v;
    v.name = name;
    v.spec.kind = verifier_kind_from_name(require(s, "kind"));
    if (const ConfigEntry* e = s.find("cost_weight")) v.cost_weight = to_real(*e);
    switch (v.spec.kind) {
        case VerifierSpec::Kind::kOracleLogLik:
        case VerifierSpec::Kind::kNegDistance:
            break;
        case VerifierSpec::Kind::kNoisyOracle:
            v.spec.noise_std = to_real(require(s, "noise_std"));
            if (const ConfigEntry* e = s.find("seed_stream")) v.spec.seed_stream = to_u64(*e);
            break;
        case VerifierSpec::Kind::kBlurred:
            if (const ConfigEntry* e = s.find("extra_std")) v.spec.extra_std = to_real(*e);
            break;
    }
    reject_unknown(s);
    return v;
}

inline StrategyConfig load_strategy_section(const ConfigSection& s, const std::string& name) {
    check_name(name, s.name);
    StrategyConfig c;
    c.name = name;
    c.kind = strategy_kind_from_name(require(s, "kind"));
    switch (c.kind) {
        case StrategyConfig::Kind::kRegular:
        case StrategyConfig::Kind::kBestOfN:
            break;
        case StrategyConfig::Kind::kSearchOverPaths:
            if (const ConfigEntry* e = s.find("width")) c.width = static_cast<int>(to_int(*e));
            if (const ConfigEntry* e = s.find("branch")) c.branch = static_cast<int>(to_int(*e));
            break;
        case StrategyConfig::Kind::kSvdd:
            if (const ConfigEntry* e = s.find("candidates_per_step")) {
                c.candidates_per_step = static_cast<int>(to_int(*e));
            }
            break;
        case StrategyConfig::Kind::kRolloverBudget:
            if (const ConfigEntry* e = s.find("zeroth_step_nfe")) {
                c.zeroth_step_nfe = static_cast<int>(to_int(*e));
            }
            break;
        case StrategyConfig::Kind::kManual: {
            const ConfigEntry& e = require(s, "schedule");
            c.schedule = to_list<int>(
                e, [](const ConfigEntry& x) { return static_cast<int>(to_int(x)); });
            break;
        }
        case StrategyConfig::Kind::kVerifierThreshold: {
            const ConfigEntry& e = require(s, "delta0");
            if (e.value == "auto") {
                c.delta0_auto = true;
            } else {
                c.delta0 = to_real(e);
            }
            if (const ConfigEntry* x = s.find("ref_budget")) {
                c.ref_budget = static_cast<int>(to_int(*x));
            }
            if (const ConfigEntry* x = s.find("keep_best")) c.keep_best = to_bool(*x);
            if (const ConfigEntry* x = s.find("calib_percentile")) {
                c.calib_percentile = to_real(*x);
            }
            if (const ConfigEntry* x = s.find("calib_pilot_seeds")) {
                c.calib_pilot_seeds = static_cast<int>(to_int(*x));
            }
            break;
        }
    }
    reject_unknown(s);
    return c;
}

}  // namespace cfg

inline ExperimentConfig config_from_parsed(const ParsedConfig& parsed) {
    ExperimentConfig out;
    for (const auto& s : parsed.sections) {
        if (s.name == "bench") {
            cfg::load_bench_section(s, out);
        } else if (s.name == "grid") {
            cfg::load_grid_section(s, out);
        } else if (s.name == "churn") {
            if (const ConfigEntry* e = s.find("gamma")) out.gamma = cfg::to_real(*e);
            cfg::reject_unknown(s);
        } else if (s.name == "cost") {
            if (const ConfigEntry* e = s.find("nfe_weight")) out.nfe_weight = cfg::to_real(*e);
            if (const ConfigEntry* e = s.find("nanos_per_cost")) {
                out.nanos_per_cost = cfg::to_real(*e);
            }
            cfg::reject_unknown(s);
        } else if (s.name == "experiment") {
            if (const ConfigEntry* e = s.find("budgets")) {
                out.budgets = cfg::to_list<int>(*e, [](const ConfigEntry& x) {
                    return static_cast<int>(cfg::to_int(x));
                });
            }
            if (const ConfigEntry* e = s.find("seeds")) {
                out.seeds = cfg::to_list<std::uint64_t>(
                    *e, [](const ConfigEntry& x) { return cfg::to_u64(x); });
            }
            if (const ConfigEntry* e = s.find("parallelism")) {
                out.parallelism = static_cast<int>(cfg::to_int(*e));
            }
            cfg::reject_unknown(s);
        } else if (s.name.rfind("verifier.", 0) == 0) {
            out.verifiers.push_back(cfg::load_verifier_section(s, s.name.substr(9)));
        } else if (s.name.rfind("strategy.", 0) == 0) {
            out.strategies.push_back(cfg::load_strategy_section(s, s.name.substr(9)));
        } else {
            throw ConfigError(cfg::line_msg(s.line, "unknown section [" + s.name + "]"));
        }
    }
    out.validate();
    return out;
}

inline ExperimentConfig config_from_text(std::string_view text) {
    return config_from_parsed(parse_config_text(text));
}

// Canonical text form. Fixed section order, fixed key order per section,
// shortest-round-trip number formatting; the manifest's config hash is taken
// over these bytes.
inline std::string config_to_string(const ExperimentConfig& c) {
    std::ostringstream os;
    os << "[bench]\n";
    if (!c.bench_file.empty()) {
        os << "file = " << c.bench_file << "\n";
    } else {
        os << "n_modes = " << c.bench_gen.n_modes << "\n";
        os << "n_prompts_per_tag = " << c.bench_gen.n_prompts_per_tag << "\n";
        os << "radius_mult = " << detail::fmt_exact(c.bench_gen.radius_mult) << "\n";
        os << "std = " << detail::fmt_exact(c.bench_gen.component_std) << "\n";
        os << "seed = " << c.bench_gen.seed << "\n";
    }
    os << "\n[grid]\n";
    os << "steps = " << c.steps << "\n";
    if (!c.times.empty()) {
        os << "times = ";
        for (std::size_t i = 0; i < c.times.size(); ++i) {
            if (i) os << ",";
            os << detail::fmt_exact(c.times[i]);
        }
        os << "\n";
    }
    os << "interpolant = " << interpolant_name(c.interpolant) << "\n";
    os << "\n[churn]\n";
    os << "gamma = " << detail::fmt_exact(c.gamma) << "\n";
    os << "\n[cost]\n";
    os << "nfe_weight = " << detail::fmt_exact(c.nfe_weight) << "\n";
    os << "nanos_per_cost = " << detail::fmt_exact(c.nanos_per_cost) << "\n";
    os << "\n[experiment]\n";
    os << "budgets = ";
    for (std::size_t i = 0; i < c.budgets.size(); ++i) {
        if (i) os << ",";
        os << c.budgets[i];
    }
    os << "\nseeds = ";
    for (std::size_t i = 0; i < c.seeds.size(); ++i) {
        if (i) os << ",";
        os << c.seeds[i];
    }
    os << "\nparallelism = " << c.parallelism << "\n";
    for (const auto& v : c.verifiers) {
        os << "\n[verifier." << v.name << "]\n";
        os << "kind = " << verifier_kind_name(v.spec.kind) << "\n";
        if (v.spec.kind == VerifierSpec::Kind::kNoisyOracle) {
            os << "noise_std = " << detail::fmt_exact(v.spec.noise_std) << "\n";
            os << "seed_stream = " << v.spec.seed_stream << "\n";
        }
        if (v.spec.kind == VerifierSpec::Kind::kBlurred) {
            os << "extra_std = " << detail::fmt_exact(v.spec.extra_std) << "\n";
        }
        os << "cost_weight = " << detail::fmt_exact(v.cost_weight) << "\n";
    }
    for (const auto& s : c.strategies) {
        os << "\n[strategy." << s.name << "]\n";
        os << "kind = " << strategy_kind_name(s.kind) << "\n";
        switch (s.kind) {
            case StrategyConfig::Kind::kRegular:
            case StrategyConfig::Kind::kBestOfN:
                break;
            case StrategyConfig::Kind::kSearchOverPaths:
                os << "width = " << s.width << "\n";
                os << "branch = " << s.branch << "\n";
                break;
            case StrategyConfig::Kind::kSvdd:
                os << "candidates_per_step = " << s.candidates_per_step << "\n";
                break;
            case StrategyConfig::Kind::kRolloverBudget:
                os << "zeroth_step_nfe = " << s.zeroth_step_nfe << "\n";
                break;
            case StrategyConfig::Kind::kManual:
                os << "schedule = ";
                for (std::size_t i = 0; i < s.schedule.size(); ++i) {
                    if (i) os << ",";
                    os << s.schedule[i];
                }
                os << "\n";
                break;
            case StrategyConfig::Kind::kVerifierThreshold:
                if (s.delta0_auto) {
                    os << "delta0 = auto\n";
                } else {
                    os << "delta0 = " << detail::fmt_exact(s.delta0) << "\n";
                }
                os << "ref_budget = " << s.ref_budget << "\n";
                os << "keep_best = " << (s.keep_best ? "true" : "false") << "\n";
                os << "calib_percentile = " << detail::fmt_exact(s.calib_percentile) << "\n";
                os << "calib_pilot_seeds = " << s.calib_pilot_seeds << "\n";
                break;
        }
    }
    return os.str();
}

}  // namespace noisesearch
