#pragma once

// Experiment orchestration: the full sweep over strategy x verifier x budget
// x prompt x seed, cell-level parallelism with byte-deterministic output,
// aggregation into summary rows / per-step NFE histograms / score curves, and
// threshold calibration from pilot runs.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <memory>
#include <optional>
#include <ostream>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "bench.hpp"
#include "config.hpp"
#include "flow.hpp"
#include "gmm.hpp"
#include "rng.hpp"
#include "strategies.hpp"
#include "verifier.hpp"

namespace noisesearch {

struct CellFailure {
    std::string strategy;
    std::string verifier;
    int budget = 0;
    std::string prompt_id;
    std::uint64_t seed = 0;
    std::string message;
};

struct ExperimentResult {
    std::vector<RunRecord> records;     // canonical order; failed cells omitted
    std::vector<CellFailure> failures;  // canonical order
};

struct CalibratedDelta {
    std::string strategy;
    std::string verifier;
    double delta0 = 0.0;
};

inline Bench make_bench(const BenchConfig& cfg) {
    Rng rng = Rng::derive(cfg.seed, {stream::kBench});
    return gen_bench(cfg, rng);
}

// Linear-interpolation percentile over the sorted sample, p in [0, 100]
// (0 = min, 100 = max).
inline double percentile_interpolated(std::vector<double> values, double p) {
    if (values.empty()) throw InternalError("percentile of empty sample");
    if (!(p >= 0.0 && p <= 100.0)) {
        throw ConfigError("percentile must be in [0, 100]");
    }
    std::sort(values.begin(), values.end());
    const double rank = p / 100.0 * static_cast<double>(values.size() - 1);
    const auto lo = static_cast<std::size_t>(rank);
    if (lo + 1 >= values.size()) return values.back();
    const double frac = rank - static_cast<double>(lo);
    return values[lo] + frac * (values[lo + 1] - values[lo]);
}

// Runs plain single-path pilots, tracking the accepted (best-so-far) verifier
// score of the denoised estimate exactly the way the threshold strategy does,
// seeded from the t = 0 score of the prior sample. Each strict improvement
// contributes one increment; the requested percentile of those improvements is
// returned. A pilot set with no improvements at all (e.g. a constant verifier)
// is degenerate: it is reported on `warn` and yields 0. The reward factory
// receives (prompt, pilot_seed) so tests can stub scoring.
inline double calibrate_delta_core(
    const Bench& bench, Interpolant interpolant, const TimeGrid& grid,
    const SdeChurn& churn, int pilot_seeds, double percentile,
    const std::function<RewardFn(const Prompt&, std::uint64_t)>& make_reward,
    std::ostream* warn = nullptr) {
    if (pilot_seeds < 1) throw ConfigError("calibrate: pilot_seeds must be >= 1");
    if (!(percentile >= 0.0 && percentile <= 100.0)) {
        throw ConfigError("calibrate: percentile must be in [0, 100]");
    }
    std::vector<double> increments;
    increments.reserve(bench.prompts.size() * static_cast<std::size_t>(pilot_seeds) *
                       static_cast<std::size_t>(grid.steps()));
    for (const auto& prompt : bench.prompts) {
        for (int s = 0; s < pilot_seeds; ++s) {
            const std::uint64_t pilot_seed =
                mix_seed(stream::kCalibration, static_cast<std::uint64_t>(s));
            RewardFn reward = make_reward(prompt, pilot_seed);
            Rng rng = make_generator_rng(pilot_seed, prompt.id, 0);
            FlowState state = make_initial_state(sample_prior(bench.target.dims, rng), grid);
            double accepted = reward(posterior_mean_x1(bench.target, interpolant, state.z,
                                                       state.time))
                                  .value;
            while (state.step < grid.steps()) {
                state = step(state, bench.target, interpolant, grid, churn, rng);
                const double r = reward(posterior_mean_x1(bench.target, interpolant,
                                                          state.z, state.time))
                                     .value;
                if (r > accepted) {
                    increments.push_back(r - accepted);
                    accepted = r;
                }
            }
        }
    }
    if (increments.empty()) {
        if (warn) {
            *warn << "calibrate: pilots produced no score improvements; "
                     "threshold is degenerate\n";
        }
        return 0.0;
    }
    const auto [lo, hi] = std::minmax_element(increments.begin(), increments.end());
    if (*lo == *hi && warn) {
        *warn << "calibrate: all " << increments.size()
              << " reward increments equal " << *lo << "; threshold is degenerate\n";
    }
    return percentile_interpolated(std::move(increments), percentile);
}

inline double calibrate_delta(const Bench& bench, const VerifierSpec& verifier,
                              Interpolant interpolant, const TimeGrid& grid,
                              const SdeChurn& churn, int pilot_seeds, double percentile,
                              std::ostream* warn = nullptr) {
    return calibrate_delta_core(
        bench, interpolant, grid, churn, pilot_seeds, percentile,
        [&](const Prompt& prompt, std::uint64_t pilot_seed) -> RewardFn {
            auto ctx = std::make_shared<VerifierContext>(
                verifier, &bench.target,
                make_verifier_rng(pilot_seed, prompt.id, verifier.seed_stream));
            const Prompt* p = &prompt;
            return [ctx, p](const Vec& x) { return ctx->evaluate(x, *p); };
        },
        warn);
}

// Resolves every delta0 = auto strategy against every verifier it will run
// with. A calibrated threshold that is not strictly positive cannot gate
// acceptance and is rejected outright.
inline std::vector<CalibratedDelta> resolve_auto_deltas(const ExperimentConfig& cfg,
                                                        const Bench& bench,
                                                        std::ostream* warn = nullptr) {
    std::vector<CalibratedDelta> out;
    const TimeGrid grid = cfg.make_grid();
    const SdeChurn churn{cfg.gamma};
    for (const auto& s : cfg.strategies) {
        if (s.kind != StrategyConfig::Kind::kVerifierThreshold || !s.delta0_auto) continue;
        for (const auto& v : cfg.verifiers) {
            const double d =
                calibrate_delta(bench, v.spec, cfg.interpolant, grid, churn,
                                s.calib_pilot_seeds, s.calib_percentile, warn);
            if (!(d > 0.0)) {
                throw ConfigError("calibrated delta0 for strategy '" + s.name +
                                  "' with verifier '" + v.name + "' came out " +
                                  std::to_string(d) +
                                  "; set delta0 explicitly or raise calib_percentile");
            }
            out.push_back(CalibratedDelta{s.name, v.name, d});
        }
    }
    return out;
}

namespace harness_detail {

inline double find_delta(const std::vector<CalibratedDelta>& calibrated,
                         const std::string& strategy, const std::string& verifier) {
    for (const auto& c : calibrated) {
        if (c.strategy == strategy && c.verifier == verifier) return c.delta0;
    }
    throw ConfigError("strategy '" + strategy + "' has delta0 = auto but no calibrated value for verifier '" +
                      verifier + "'; run calibration first");
}

}  // namespace harness_detail

// Executes every (strategy, verifier, budget, prompt, seed) cell. Records
// land in preallocated slots addressed by cell index, so output order and
// bytes are independent of the parallelism level. A cell that throws is
// reported as a CellFailure and does not disturb the other cells.
inline ExperimentResult run_experiment(const ExperimentConfig& cfg, const Bench& bench,
                                       const std::vector<CalibratedDelta>& calibrated = {}) {
    cfg.validate();
    validate_bench(bench);
    const TimeGrid grid = cfg.make_grid();
    const SdeChurn churn{cfg.gamma};

    // Materialize per-cell strategy configs up front: auto thresholds resolve
    // per verifier, and resolution failures should precede any run.
    const std::size_t n_strategies = cfg.strategies.size();
    const std::size_t n_verifiers = cfg.verifiers.size();
    std::vector<StrategyConfig> resolved(n_strategies * n_verifiers);
    for (std::size_t si = 0; si < n_strategies; ++si) {
        for (std::size_t vi = 0; vi < n_verifiers; ++vi) {
            StrategyConfig sc = cfg.strategies[si];
            if (sc.kind == StrategyConfig::Kind::kVerifierThreshold && sc.delta0_auto) {
                sc.delta0 = harness_detail::find_delta(calibrated, sc.name,
                                                       cfg.verifiers[vi].name);
                sc.delta0_auto = false;
            }
            resolved[si * n_verifiers + vi] = std::move(sc);
        }
    }

    const std::size_t n_budgets = cfg.budgets.size();
    const std::size_t n_prompts = bench.prompts.size();
    const std::size_t n_seeds = cfg.seeds.size();
    const std::size_t n_cells = n_strategies * n_verifiers * n_budgets * n_prompts * n_seeds;

    std::vector<std::optional<RunRecord>> slots(n_cells);
    std::vector<std::string> errors(n_cells);

    auto run_cell = [&](std::size_t i) {
        std::size_t rest = i;
        const std::size_t seed_i = rest % n_seeds;
        rest /= n_seeds;
        const std::size_t prompt_i = rest % n_prompts;
        rest /= n_prompts;
        const std::size_t budget_i = rest % n_budgets;
        rest /= n_budgets;
        const std::size_t verifier_i = rest % n_verifiers;
        rest /= n_verifiers;
        const std::size_t strategy_i = rest;

        const VerifierEntry& v = cfg.verifiers[verifier_i];
        const Prompt& prompt = bench.prompts[prompt_i];
        const std::uint64_t seed = cfg.seeds[seed_i];

        VerifierContext vctx(v.spec, &bench.target,
                             make_verifier_rng(seed, prompt.id, v.spec.seed_stream));
        RunEnv env;
        env.gen = GenContext{&bench.target, cfg.interpolant, &grid, churn};
        env.bench = &bench;
        env.reward = [&vctx, &prompt](const Vec& x) { return vctx.evaluate(x, prompt); };
        env.prompt = &prompt;
        env.budget = cfg.budgets[budget_i];
        env.seed = seed;

        const CostParams cost{cfg.nfe_weight, v.cost_weight, cfg.nanos_per_cost};
        RunRecord rec = dispatch(resolved[strategy_i * n_verifiers + verifier_i], env, cost);
        rec.verifier = v.name;
        slots[i] = std::move(rec);
    };

    const int workers = static_cast<int>(
        std::min<std::size_t>(static_cast<std::size_t>(cfg.parallelism), n_cells));
    std::atomic<std::size_t> next{0};
    auto worker = [&]() {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= n_cells) return;
            try {
                run_cell(i);
            } catch (const std::exception& e) {
                errors[i] = e.what();
                if (errors[i].empty()) errors[i] = "unknown error";
            }
        }
    };
    if (workers <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(static_cast<std::size_t>(workers));
        for (int w = 0; w < workers; ++w) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }

    ExperimentResult result;
    result.records.reserve(n_cells);
    for (std::size_t i = 0; i < n_cells; ++i) {
        if (slots[i].has_value()) {
            result.records.push_back(std::move(*slots[i]));
            continue;
        }
        std::size_t rest = i;
        CellFailure f;
        f.seed = cfg.seeds[rest % n_seeds];
        rest /= n_seeds;
        f.prompt_id = bench.prompts[rest % n_prompts].id;
        rest /= n_prompts;
        f.budget = cfg.budgets[rest % n_budgets];
        rest /= n_budgets;
        f.verifier = cfg.verifiers[rest % n_verifiers].name;
        rest /= n_verifiers;
        f.strategy = cfg.strategies[rest].name;
        f.message = errors[i];
        result.failures.push_back(std::move(f));
    }
    return result;
}

// ---- aggregation ------------------------------------------------------

struct SummaryRow {
    std::string strategy;
    std::string verifier;
    int budget = 0;
    int n_runs = 0;
    double success_rate = 0.0;
    double ci_low = 0.0;
    double ci_high = 0.0;
    // Indexed by AttributeTag order: single_object, position, attribute_binding.
    double success_by_tag[3] = {0.0, 0.0, 0.0};
    double mean_reward = 0.0;
    double mean_used_nfe = 0.0;
    double mean_verifier_calls = 0.0;
    double mean_cost = 0.0;
    double mean_cpu_nanos = 0.0;
};

namespace harness_detail {

struct GroupAccum {
    std::string strategy;
    std::string verifier;
    int budget = 0;
    std::int64_t n = 0;
    std::int64_t successes = 0;
    std::int64_t n_by_tag[3] = {0, 0, 0};
    std::int64_t successes_by_tag[3] = {0, 0, 0};
    double reward_sum = 0.0;
    std::int64_t used_sum = 0;
    std::int64_t calls_sum = 0;
    double cost_sum = 0.0;
    std::int64_t nanos_sum = 0;
};

inline const double kQuietNaN = std::numeric_limits<double>::quiet_NaN();

}  // namespace harness_detail

// Normal-approximation binomial interval, clamped to [0, 1].
inline std::pair<double, double> success_ci(std::int64_t successes, std::int64_t n) {
    if (n < 1) throw InternalError("ci over empty sample");
    const double p = static_cast<double>(successes) / static_cast<double>(n);
    const double half = 1.96 * std::sqrt(p * (1.0 - p) / static_cast<double>(n));
    return {std::max(0.0, p - half), std::min(1.0, p + half)};
}

// One row per (strategy, verifier, budget) in first-appearance (canonical)
// order. Sums are integer where the fields are integers, so aggregation
// conservation is exact.
inline std::vector<SummaryRow> summarize(const std::vector<RunRecord>& records) {
    std::vector<harness_detail::GroupAccum> groups;
    auto find_group = [&](const RunRecord& r) -> harness_detail::GroupAccum& {
        for (auto& g : groups) {
            if (g.budget == r.budget && g.strategy == r.strategy && g.verifier == r.verifier) {
                return g;
            }
        }
        groups.emplace_back();
        groups.back().strategy = r.strategy;
        groups.back().verifier = r.verifier;
        groups.back().budget = r.budget;
        return groups.back();
    };
    for (const auto& r : records) {
        auto& g = find_group(r);
        g.n += 1;
        g.successes += r.success ? 1 : 0;
        const auto tag = static_cast<std::size_t>(r.attribute_tag);
        g.n_by_tag[tag] += 1;
        g.successes_by_tag[tag] += r.success ? 1 : 0;
        g.reward_sum += r.final_reward;
        g.used_sum += r.used_nfe;
        g.calls_sum += r.verifier_calls;
        g.cost_sum += r.cost;
        g.nanos_sum += r.cpu_nanos;
    }
    std::vector<SummaryRow> rows;
    rows.reserve(groups.size());
    for (const auto& g : groups) {
        SummaryRow row;
        row.strategy = g.strategy;
        row.verifier = g.verifier;
        row.budget = g.budget;
        row.n_runs = static_cast<int>(g.n);
        const double n = static_cast<double>(g.n);
        row.success_rate = static_cast<double>(g.successes) / n;
        const auto ci = success_ci(g.successes, g.n);
        row.ci_low = ci.first;
        row.ci_high = ci.second;
        for (std::size_t t = 0; t < 3; ++t) {
            row.success_by_tag[t] =
                g.n_by_tag[t] == 0 ? harness_detail::kQuietNaN
                                   : static_cast<double>(g.successes_by_tag[t]) /
                                         static_cast<double>(g.n_by_tag[t]);
        }
        row.mean_reward = g.reward_sum / n;
        row.mean_used_nfe = static_cast<double>(g.used_sum) / n;
        row.mean_verifier_calls = static_cast<double>(g.calls_sum) / n;
        row.mean_cost = g.cost_sum / n;
        row.mean_cpu_nanos = static_cast<double>(g.nanos_sum) / n;
        rows.push_back(std::move(row));
    }
    return rows;
}

struct GroupKey {
    std::string strategy;
    std::string verifier;
    int budget = 0;
};

// Mean NFE count per step over a group's records: T+1 entries, index 0 the
// zeroth (pre-step) stage, which never costs NFEs and is always 0. Throws if
// the key matches nothing.
inline std::vector<double> nfe_histogram(const std::vector<RunRecord>& records,
                                         const GroupKey& key) {
    std::vector<double> sums;
    std::int64_t n = 0;
    for (const auto& r : records) {
        if (r.strategy != key.strategy || r.verifier != key.verifier ||
            r.budget != key.budget) {
            continue;
        }
        if (sums.empty()) sums.assign(r.per_step_nfe.size() + 1, 0.0);
        if (sums.size() != r.per_step_nfe.size() + 1) {
            throw InternalError("nfe_histogram: mixed step counts in one group");
        }
        for (std::size_t i = 0; i < r.per_step_nfe.size(); ++i) {
            sums[i + 1] += static_cast<double>(r.per_step_nfe[i]);
        }
        n += 1;
    }
    if (n == 0) {
        throw StateError("nfe_histogram: no records for " + key.strategy + "/" +
                         key.verifier + "/" + std::to_string(key.budget));
    }
    for (auto& v : sums) v /= static_cast<double>(n);
    return sums;
}

// Same vector normalized by the budget: per-step share of the total budget;
// entries sum to the mean used fraction.
inline std::vector<double> nfe_shares(const std::vector<RunRecord>& records,
                                      const GroupKey& key) {
    std::vector<double> h = nfe_histogram(records, key);
    for (auto& v : h) v /= static_cast<double>(key.budget);
    return h;
}

struct ScoreCurvePoint {
    int step = 0;
    double mean_reward = 0.0;  // NaN when no record scored this step
    std::int64_t n = 0;        // records with a score at this step
};

// Mean accepted verifier score per step over a group, skipping steps a run
// never scored.
inline std::vector<ScoreCurvePoint> score_curve(const std::vector<RunRecord>& records,
                                                const GroupKey& key) {
    std::vector<double> sums;
    std::vector<std::int64_t> counts;
    bool found = false;
    for (const auto& r : records) {
        if (r.strategy != key.strategy || r.verifier != key.verifier ||
            r.budget != key.budget) {
            continue;
        }
        found = true;
        if (sums.size() < r.accepted_reward_trace.size()) {
            sums.resize(r.accepted_reward_trace.size(), 0.0);
            counts.resize(r.accepted_reward_trace.size(), 0);
        }
        for (std::size_t i = 0; i < r.accepted_reward_trace.size(); ++i) {
            const double v = r.accepted_reward_trace[i];
            if (std::isnan(v)) continue;
            sums[i] += v;
            counts[i] += 1;
        }
    }
    if (!found) {
        throw StateError("score_curve: no records for " + key.strategy + "/" +
                         key.verifier + "/" + std::to_string(key.budget));
    }
    std::vector<ScoreCurvePoint> out;
    out.reserve(sums.size());
    for (std::size_t i = 0; i < sums.size(); ++i) {
        ScoreCurvePoint p;
        p.step = static_cast<int>(i);
        p.n = counts[i];
        p.mean_reward = counts[i] == 0 ? harness_detail::kQuietNaN
                                       : sums[i] / static_cast<double>(counts[i]);
        out.push_back(p);
    }
    return out;
}

struct ScalingPoint {
    int budget = 0;
    double mean_cost = 0.0;
    double success_rate = 0.0;
};

// One (cost, success) point per budget for a (strategy, verifier) pair,
// sorted by cost; budgets with no records are simply absent, so a shorter
// series than the budget list flags the gaps.
inline std::vector<ScalingPoint> scaling_series(const std::vector<SummaryRow>& summary,
                                                const std::string& strategy,
                                                const std::string& verifier) {
    std::vector<ScalingPoint> out;
    for (const auto& row : summary) {
        if (row.strategy != strategy || row.verifier != verifier) continue;
        out.push_back(ScalingPoint{row.budget, row.mean_cost, row.success_rate});
    }
    std::sort(out.begin(), out.end(), [](const ScalingPoint& a, const ScalingPoint& b) {
        if (a.mean_cost != b.mean_cost) return a.mean_cost < b.mean_cost;
        return a.budget < b.budget;
    });
    return out;
}

}  // namespace noisesearch
