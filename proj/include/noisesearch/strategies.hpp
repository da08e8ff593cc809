#pragma once

// Test-time compute-allocation strategies. Every runner turns one
// (prompt, seed, budget) cell into a RunRecord under the shared accounting
// rules: a generator step costs 1 NFE, scoring a denoised estimate costs 1
// verifier call, and every run ends with the sample fully denoised plus one
// final reporting evaluation at t = 1.
//
// Generator noise comes from a stream derived from (seed, prompt, trajectory
// index) and deliberately not from the strategy, so strategies compared at a
// fixed seed share candidate noise wherever their consumption patterns line
// up; the degenerate-parameter equivalences (best-of-1 vs regular, per-step
// schedule vs per-step argmax) hold exactly because of this.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "bench.hpp"
#include "common.hpp"
#include "flow.hpp"
#include "gmm.hpp"
#include "interpolant.hpp"
#include "ledger.hpp"
#include "rng.hpp"
#include "verifier.hpp"

namespace noisesearch {

struct GenContext {
    const GmmTarget* target = nullptr;
    Interpolant interpolant = Interpolant::kLinear;
    const TimeGrid* grid = nullptr;
    SdeChurn churn;
};

using RewardFn = std::function<Reward(const Vec& x_hat)>;

struct RunEnv {
    GenContext gen;
    const Bench* bench = nullptr;  // judge target and radius
    RewardFn reward;
    const Prompt* prompt = nullptr;
    int budget = 0;
    std::uint64_t seed = 0;
};

constexpr int kNoForcedStep = -1;

struct RunRecord {
    std::string strategy;
    std::string verifier;
    std::string prompt_id;
    AttributeTag attribute_tag = AttributeTag::kSingleObject;
    std::uint64_t seed = 0;
    int budget = 0;

    Vec final_x;
    double final_time = 0.0;
    double final_reward = 0.0;
    // Reward of the accepted state per step, index 0 = zeroth step; NaN where
    // a strategy never scored that step.
    std::vector<double> accepted_reward_trace;
    std::vector<int> per_step_nfe;  // size T, index i = NFEs entering step i+1
    int used_nfe = 0;
    int unused_nfe = 0;
    int verifier_calls = 0;
    int forced_from_step = kNoForcedStep;  // first step whose acceptance was budget-forced
    bool success = false;
    double cost = 0.0;
    std::int64_t cpu_nanos = 0;
};

struct StrategyConfig {
    enum class Kind {
        kRegular,
        kBestOfN,
        kSearchOverPaths,
        kSvdd,
        kRolloverBudget,
        kManual,
        kVerifierThreshold,
    };
    Kind kind = Kind::kRegular;
    std::string name = "regular";

    int width = 2;              // search_over_paths
    int branch = 2;             // search_over_paths
    int candidates_per_step = 4;  // svdd
    int zeroth_step_nfe = 4;    // rollover_budget
    std::vector<int> schedule;  // manual

    double delta0 = 0.0;        // verifier_threshold
    bool delta0_auto = false;
    int ref_budget = 40;
    bool keep_best = true;
    double calib_percentile = 40.0;
    int calib_pilot_seeds = 20;

    void validate(int steps) const {
        switch (kind) {
            case Kind::kRegular:
            case Kind::kBestOfN:
                return;
            case Kind::kSearchOverPaths:
                if (width < 1 || branch < 1) {
                    throw ConfigError("strategy " + name + ": width and branch must be >= 1");
                }
                return;
            case Kind::kSvdd:
                if (candidates_per_step < 1) {
                    throw ConfigError("strategy " + name + ": candidates_per_step must be >= 1");
                }
                return;
            case Kind::kRolloverBudget:
                if (zeroth_step_nfe < 1) {
                    throw ConfigError("strategy " + name + ": zeroth_step_nfe must be >= 1");
                }
                return;
            case Kind::kManual: {
                if (static_cast<int>(schedule.size()) != steps) {
                    throw ConfigError("strategy " + name + ": schedule must list one count per step");
                }
                for (int c : schedule) {
                    if (c < 1) throw ConfigError("strategy " + name + ": schedule counts must be >= 1");
                }
                return;
            }
            case Kind::kVerifierThreshold:
                if (!delta0_auto && !(delta0 > 0.0)) {
                    throw ConfigError("strategy " + name + ": delta0 must be > 0 (or auto)");
                }
                if (ref_budget < 1) {
                    throw ConfigError("strategy " + name + ": ref_budget must be >= 1");
                }
                if (!(calib_percentile >= 0.0 && calib_percentile <= 100.0)) {
                    throw ConfigError("strategy " + name + ": calib_percentile must be in [0,100]");
                }
                if (calib_pilot_seeds < 1) {
                    throw ConfigError("strategy " + name + ": calib_pilot_seeds must be >= 1");
                }
                return;
        }
        throw InternalError("unknown strategy kind");
    }
};

inline const char* strategy_kind_name(StrategyConfig::Kind k) {
    switch (k) {
        case StrategyConfig::Kind::kRegular: return "regular";
        case StrategyConfig::Kind::kBestOfN: return "best_of_n";
        case StrategyConfig::Kind::kSearchOverPaths: return "search_over_paths";
        case StrategyConfig::Kind::kSvdd: return "svdd";
        case StrategyConfig::Kind::kRolloverBudget: return "rollover_budget";
        case StrategyConfig::Kind::kManual: return "manual";
        case StrategyConfig::Kind::kVerifierThreshold: return "verifier_threshold";
    }
    throw InternalError("unknown strategy kind");
}

// Threshold scaling: the margin grows linearly with the budget relative to
// the reference budget it was tuned at.
inline double vt_threshold(double delta0, int total_nfe, int ref_budget) {
    if (!(delta0 > 0.0)) throw ConfigError("vt_threshold: delta0 must be > 0");
    if (total_nfe < 1 || ref_budget < 1) {
        throw ConfigError("vt_threshold: budgets must be >= 1");
    }
    return delta0 * static_cast<double>(total_nfe) / static_cast<double>(ref_budget);
}

// ---- shared runner plumbing --------------------------------------------

namespace run_detail {

inline const double kNaN = std::numeric_limits<double>::quiet_NaN();
inline const double kNegInf = -std::numeric_limits<double>::infinity();

struct RunCtx {
    const RunEnv& env;
    BudgetLedger ledger;
    std::vector<double> trace;

    explicit RunCtx(const RunEnv& env_)
        : env(env_), ledger(env_.budget, env_.gen.grid->steps()),
          trace(static_cast<std::size_t>(env_.gen.grid->steps()) + 1, kNaN) {
        if (!env.gen.target || !env.gen.grid || !env.bench || !env.prompt || !env.reward) {
            throw InternalError("run env incomplete");
        }
        if (env.budget < env.gen.grid->steps()) {
            throw ConfigError("budget " + std::to_string(env.budget) +
                              " cannot cover " + std::to_string(env.gen.grid->steps()) +
                              " denoising steps");
        }
    }

    int steps() const { return env.gen.grid->steps(); }

    FlowState prior_state(Rng& rng) {
        return make_initial_state(sample_prior(env.gen.target->dims, rng), *env.gen.grid);
    }

    FlowState churn_step(const FlowState& s, Rng& rng) {
        FlowState n = step(s, *env.gen.target, env.gen.interpolant, *env.gen.grid,
                           env.gen.churn, rng);
        ledger.charge_step(n.step);
        return n;
    }

    // Deterministic completion: plain ODE steps, no churn, no verifier calls.
    FlowState complete_ode(FlowState s, Rng& rng) {
        const SdeChurn off{0.0};
        while (s.step < steps()) {
            s = step(s, *env.gen.target, env.gen.interpolant, *env.gen.grid, off, rng);
            ledger.charge_step(s.step);
        }
        return s;
    }

    double score_tweedie(const FlowState& s) {
        const Vec x = posterior_mean_x1(*env.gen.target, env.gen.interpolant, s.z, s.time);
        const Reward r = env.reward(x);
        ledger.charge_verifier(r.verifier_calls);
        return r.value;
    }

    // Test-only ending for runs cut off before t = 1: the output is the
    // posterior-mean estimate of the state the run stopped at.
    RunRecord finish_partial(const char* kind_name, const FlowState& cur, int forced_from) {
        RunRecord rec;
        rec.strategy = kind_name;
        rec.prompt_id = env.prompt->id;
        rec.attribute_tag = env.prompt->tag;
        rec.seed = env.seed;
        rec.budget = env.budget;
        rec.final_x = posterior_mean_x1(*env.gen.target, env.gen.interpolant, cur.z, cur.time);
        rec.final_time = cur.time;
        const Reward r = env.reward(rec.final_x);
        ledger.charge_verifier(r.verifier_calls);
        rec.final_reward = r.value;
        rec.accepted_reward_trace = trace;
        rec.per_step_nfe = ledger.per_step_nfe;
        rec.used_nfe = ledger.used_nfe;
        rec.unused_nfe = ledger.total_nfe - ledger.used_nfe;
        rec.verifier_calls = ledger.verifier_calls;
        rec.forced_from_step = forced_from;
        rec.success = noisesearch::success(*env.prompt, rec.final_x,
                                           *env.gen.target, env.bench->radius_mult);
        return rec;
    }

    RunRecord finish(const char* kind_name, FlowState&& final_state, int forced_from) {
        if (final_state.step != steps() || final_state.time != 1.0) {
            throw InternalError("run did not reach t = 1");
        }
        RunRecord rec;
        rec.strategy = kind_name;
        rec.prompt_id = env.prompt->id;
        rec.attribute_tag = env.prompt->tag;
        rec.seed = env.seed;
        rec.budget = env.budget;
        rec.final_x = std::move(final_state.z);
        rec.final_time = final_state.time;

        // Final reporting evaluation of the returned sample (t = 1, so the
        // denoised estimate is the sample itself).
        const Reward r = env.reward(rec.final_x);
        ledger.charge_verifier(r.verifier_calls);
        rec.final_reward = r.value;
        if (std::isnan(trace.back())) trace.back() = r.value;

        rec.accepted_reward_trace = std::move(trace);
        rec.per_step_nfe = ledger.per_step_nfe;
        rec.used_nfe = ledger.used_nfe;
        rec.unused_nfe = ledger.total_nfe - ledger.used_nfe;
        rec.verifier_calls = ledger.verifier_calls;
        rec.forced_from_step = forced_from;
        rec.success = noisesearch::success(*env.prompt, rec.final_x,
                                           *env.gen.target, env.bench->radius_mult);
        return rec;
    }
};

}  // namespace run_detail

// ---- runners --------------------------------------------------------------

// One noise draw, T steps, no mid-run scoring.
inline RunRecord run_regular(const RunEnv& env) {
    run_detail::RunCtx ctx(env);
    Rng rng = make_generator_rng(env.seed, env.prompt->id, 0);
    FlowState s = ctx.prior_state(rng);
    while (s.step < ctx.steps()) {
        s = ctx.churn_step(s, rng);
        ctx.ledger.advance_to(s.step);
    }
    return ctx.finish("regular", std::move(s), kNoForcedStep);
}

// floor(N/T) full trajectories, each on its own derived stream; keep the one
// with the best final reward (ties to the lowest trajectory index).
inline RunRecord run_best_of_n(const RunEnv& env) {
    run_detail::RunCtx ctx(env);
    const int k = env.budget / ctx.steps();
    FlowState best;
    double best_reward = run_detail::kNegInf;
    for (int j = 0; j < k; ++j) {
        Rng rng = make_generator_rng(env.seed, env.prompt->id,
                                     static_cast<std::uint64_t>(j));
        FlowState s = ctx.prior_state(rng);
        while (s.step < ctx.steps()) {
            s = ctx.churn_step(s, rng);
            ctx.ledger.advance_to(s.step);
        }
        const Reward r = env.reward(s.z);
        ctx.ledger.charge_verifier(r.verifier_calls);
        if (r.value > best_reward) {
            best_reward = r.value;
            best = std::move(s);
        }
    }
    ctx.trace.back() = best_reward;
    return ctx.finish("best_of_n", std::move(best), kNoForcedStep);
}

namespace run_detail {

// Shared core for manual budgeting and per-step argmax: at each step draw a
// given number of churned candidates from the accepted state, keep the best
// scored denoised estimate (strict improvement, so ties resolve to the
// earliest candidate).
template <typename CountFn>
inline RunRecord run_per_step_argmax(const RunEnv& env, const char* kind_name,
                                     CountFn&& count_for_step) {
    RunCtx ctx(env);
    Rng rng = make_generator_rng(env.seed, env.prompt->id, 0);
    FlowState accepted = ctx.prior_state(rng);
    for (int t = 1; t <= ctx.steps(); ++t) {
        const int count = count_for_step(t, ctx.ledger.used_nfe);
        if (count < 1) throw InternalError("per-step candidate count fell below 1");
        FlowState best;
        double best_reward = kNegInf;
        for (int c = 0; c < count; ++c) {
            FlowState cand = ctx.churn_step(accepted, rng);
            const double r = ctx.score_tweedie(cand);
            if (r > best_reward) {
                best_reward = r;
                best = std::move(cand);
            }
        }
        accepted = std::move(best);
        ctx.trace[static_cast<std::size_t>(t)] = best_reward;
        ctx.ledger.advance_to(t);
    }
    return ctx.finish(kind_name, std::move(accepted), kNoForcedStep);
}

}  // namespace run_detail

// Fixed per-step schedule; must sum to the budget exactly.
inline RunRecord run_manual(const RunEnv& env, const std::vector<int>& schedule) {
    {
        if (!env.gen.grid) throw InternalError("run env incomplete");
        int sum = 0;
        for (int c : schedule) sum += c;
        if (static_cast<int>(schedule.size()) != env.gen.grid->steps() || sum != env.budget) {
            throw ConfigError("manual schedule must have one positive count per step and sum to the budget");
        }
        for (int c : schedule) {
            if (c < 1) throw ConfigError("manual schedule counts must be >= 1");
        }
    }
    return run_detail::run_per_step_argmax(
        env, "manual", [&](int t, int) { return schedule[static_cast<std::size_t>(t - 1)]; });
}

// Per-step argmax over M candidates, clipped so enough budget remains to
// finish one candidate per remaining step.
inline RunRecord run_svdd(const RunEnv& env, int candidates_per_step) {
    if (candidates_per_step < 1) throw ConfigError("svdd: candidates_per_step must be >= 1");
    const int total_steps = env.gen.grid ? env.gen.grid->steps() : 0;
    return run_detail::run_per_step_argmax(
        env, "svdd", [&, total_steps](int t, int used) {
            const int cap = env.budget - used - (total_steps - t);
            return std::min(candidates_per_step, cap);
        });
}

// Particle search: width live particles, each spawning branch children per
// step; keep the top width children by reward. Stops branching once a full
// round plus a single-particle completion no longer fits the budget, then
// finishes the best particle deterministically.
inline RunRecord run_search_over_paths(const RunEnv& env, int width, int branch) {
    if (width < 1 || branch < 1) throw ConfigError("search_over_paths: width and branch must be >= 1");
    run_detail::RunCtx ctx(env);
    Rng rng = make_generator_rng(env.seed, env.prompt->id, 0);

    std::vector<FlowState> particles;
    particles.reserve(static_cast<std::size_t>(width));
    for (int i = 0; i < width; ++i) particles.push_back(ctx.prior_state(rng));
    std::vector<double> rewards;  // empty until the first selection round

    int s = 0;
    const int round_cost = width * branch;
    while (s < ctx.steps() &&
           ctx.ledger.used_nfe + round_cost + (ctx.steps() - s - 1) <= env.budget) {
        struct Child {
            FlowState state;
            double reward;
            int order;
        };
        std::vector<Child> children;
        children.reserve(static_cast<std::size_t>(round_cost));
        for (std::size_t p = 0; p < particles.size(); ++p) {
            for (int b = 0; b < branch; ++b) {
                FlowState cand = ctx.churn_step(particles[p], rng);
                const double r = ctx.score_tweedie(cand);
                children.push_back(Child{std::move(cand), r,
                                         static_cast<int>(p) * branch + b});
            }
        }
        std::sort(children.begin(), children.end(), [](const Child& a, const Child& b) {
            if (a.reward != b.reward) return a.reward > b.reward;
            return a.order < b.order;
        });
        particles.clear();
        rewards.clear();
        for (int i = 0; i < width; ++i) {
            particles.push_back(std::move(children[static_cast<std::size_t>(i)].state));
            rewards.push_back(children[static_cast<std::size_t>(i)].reward);
        }
        ++s;
        ctx.trace[static_cast<std::size_t>(s)] = rewards[0];
        ctx.ledger.advance_to(s);
    }

    // Best particle: highest last-round reward, ties to the kept order; if no
    // round ever ran, the first particle.
    std::size_t pick = 0;
    for (std::size_t i = 1; i < rewards.size(); ++i) {
        if (rewards[i] > rewards[pick]) pick = i;
    }
    FlowState final_state = std::move(particles[pick]);
    const int forced_from = s < ctx.steps() ? s + 1 : kNoForcedStep;
    final_state = ctx.complete_ode(std::move(final_state), rng);
    return ctx.finish("search_over_paths", std::move(final_state), forced_from);
}

// Rollover budgeting: a scored zeroth step over prior samples, then a greedy
// per-step search that advances on the first candidate beating the previous
// step's best score. Per-step quota is recomputed from the remaining search
// budget (total minus used minus the completion reserve) split over the
// remaining steps, plus any quota left unused by earlier steps. The final
// step has no further step to roll into and spends everything left.
inline RunRecord run_rollover_budget(const RunEnv& env, int zeroth_step_nfe) {
    if (zeroth_step_nfe < 1) throw ConfigError("rollover_budget: zeroth_step_nfe must be >= 1");
    run_detail::RunCtx ctx(env);
    Rng rng = make_generator_rng(env.seed, env.prompt->id, 0);

    FlowState state;
    double r_best = run_detail::kNegInf;
    for (int i = 0; i < zeroth_step_nfe; ++i) {
        FlowState cand = ctx.prior_state(rng);
        const double r = ctx.score_tweedie(cand);
        if (r > r_best) {
            r_best = r;
            state = std::move(cand);
        }
    }
    ctx.trace[0] = r_best;

    int rollover = 0;
    const int total_steps = ctx.steps();
    for (int t = 1; t <= total_steps; ++t) {
        int quota;
        if (t < total_steps) {
            const int steps_left = total_steps - t + 1;  // including this one
            const int reserve = steps_left;              // one NFE per pending step
            const int search_budget = env.budget - ctx.ledger.used_nfe - reserve;
            quota = std::max(1, search_budget / steps_left + rollover);
        } else {
            quota = env.budget - ctx.ledger.used_nfe;
        }

        int drawn = 0;
        FlowState step_best;
        double step_best_reward = run_detail::kNegInf;
        bool accepted = false;
        while (drawn < quota) {
            // Never draw past the point where one NFE per remaining step
            // stops fitting; the reserve funds the mandatory advances.
            if (t < total_steps &&
                ctx.ledger.used_nfe + (total_steps - t) >= env.budget) {
                break;
            }
            FlowState cand = ctx.churn_step(state, rng);
            ++drawn;
            const double r = ctx.score_tweedie(cand);
            if (r > step_best_reward) {
                step_best_reward = r;
                step_best = std::move(cand);
            }
            if (t < total_steps && step_best_reward > r_best) {
                accepted = true;
                break;
            }
        }
        (void)accepted;
        if (drawn == 0) throw InternalError("rollover_budget: step drew no candidate");
        rollover += quota - drawn;
        state = std::move(step_best);
        r_best = step_best_reward;
        ctx.trace[static_cast<std::size_t>(t)] = r_best;
        ctx.ledger.advance_to(t);
    }
    return ctx.finish("rollover_budget", std::move(state), kNoForcedStep);
}

// Threshold acceptance: stay at a step until a candidate improves on the
// previous accepted score by more than delta. When the budget forces an
// advance (used + remaining steps would exceed the total), take the best
// rejected candidate of the step (or the last drawn one with keep_best off)
// and finish the run deterministically at one NFE per step.
//
// reserve = false is a test-only escape hatch: no completion reserve is held
// back, the run may exhaust the budget mid-trajectory, and the output is then
// the posterior-mean estimate of the current state at t < 1. Records from
// that mode fail validate_record by design and never flow through dispatch.
inline RunRecord run_verifier_threshold(const RunEnv& env, double delta, bool keep_best,
                                        bool reserve = true) {
    if (delta < 0.0) throw ConfigError("verifier_threshold: delta must be >= 0");
    run_detail::RunCtx ctx(env);
    Rng rng = make_generator_rng(env.seed, env.prompt->id, 0);

    FlowState state = ctx.prior_state(rng);
    double r_accepted = ctx.score_tweedie(state);
    ctx.trace[0] = r_accepted;

    const int total_steps = ctx.steps();
    int forced_from = kNoForcedStep;
    for (int t = 1; t <= total_steps; ++t) {
        FlowState best_rejected;
        double best_rejected_reward = run_detail::kNegInf;
        bool have_rejected = false;
        for (;;) {
            if (!reserve && ctx.ledger.used_nfe >= env.budget) {
                const FlowState& cur = have_rejected ? best_rejected : state;
                if (have_rejected) {
                    ctx.trace[static_cast<std::size_t>(t)] = best_rejected_reward;
                }
                return ctx.finish_partial("verifier_threshold", cur, t);
            }
            FlowState cand = ctx.churn_step(state, rng);
            const double r = ctx.score_tweedie(cand);
            if (r - r_accepted > delta) {
                state = std::move(cand);
                r_accepted = r;
                ctx.trace[static_cast<std::size_t>(t)] = r;
                break;
            }
            if (!keep_best || r > best_rejected_reward) {
                best_rejected_reward = r;
                best_rejected = std::move(cand);
                have_rejected = true;
            }
            if (reserve && ctx.ledger.used_nfe + (total_steps - t) >= env.budget) {
                forced_from = t;
                state = std::move(best_rejected);
                r_accepted = best_rejected_reward;
                ctx.trace[static_cast<std::size_t>(t)] = r_accepted;
                break;
            }
        }
        if (reserve) ctx.ledger.advance_to(t);
        if (forced_from != kNoForcedStep) {
            state = ctx.complete_ode(std::move(state), rng);
            break;
        }
    }
    return ctx.finish("verifier_threshold", std::move(state), forced_from);
}

// ---- dispatch ---------------------------------------------------------

struct CostParams {
    double nfe_weight = 1.0;
    double verifier_weight = 0.2;
    double nanos_per_cost = 1000.0;
};

// Post-run invariant checks; anything failing here is a runner bug.
inline void validate_record(const RunRecord& rec, int budget, int steps) {
    int sum = 0;
    for (int c : rec.per_step_nfe) {
        if (c < 0) throw InternalError("record: negative per-step NFE");
        sum += c;
    }
    if (static_cast<int>(rec.per_step_nfe.size()) != steps ||
        sum != rec.used_nfe || rec.used_nfe > budget ||
        rec.used_nfe + rec.unused_nfe != budget) {
        throw InternalError("record: NFE accounting inconsistent");
    }
    if (rec.verifier_calls < 1) throw InternalError("record: no verifier calls recorded");
    if (rec.final_time != 1.0 || !all_finite(rec.final_x)) {
        throw InternalError("record: final sample not fully denoised");
    }
    if (rec.accepted_reward_trace.size() != static_cast<std::size_t>(steps) + 1) {
        throw InternalError("record: trace length mismatch");
    }
}

inline RunRecord dispatch(const StrategyConfig& strategy, const RunEnv& env,
                          const CostParams& cost) {
    strategy.validate(env.gen.grid->steps());
    RunRecord rec;
    switch (strategy.kind) {
        case StrategyConfig::Kind::kRegular:
            rec = run_regular(env);
            break;
        case StrategyConfig::Kind::kBestOfN:
            rec = run_best_of_n(env);
            break;
        case StrategyConfig::Kind::kSearchOverPaths:
            rec = run_search_over_paths(env, strategy.width, strategy.branch);
            break;
        case StrategyConfig::Kind::kSvdd:
            rec = run_svdd(env, strategy.candidates_per_step);
            break;
        case StrategyConfig::Kind::kRolloverBudget:
            rec = run_rollover_budget(env, strategy.zeroth_step_nfe);
            break;
        case StrategyConfig::Kind::kManual:
            rec = run_manual(env, strategy.schedule);
            break;
        case StrategyConfig::Kind::kVerifierThreshold: {
            if (strategy.delta0_auto) {
                throw ConfigError("strategy " + strategy.name +
                                  ": delta0 = auto must be calibrated before dispatch");
            }
            const double delta =
                vt_threshold(strategy.delta0, env.budget, strategy.ref_budget);
            rec = run_verifier_threshold(env, delta, strategy.keep_best);
            break;
        }
    }
    rec.strategy = strategy.name;
    rec.cost = cost.nfe_weight * rec.used_nfe + cost.verifier_weight * rec.verifier_calls;
    rec.cpu_nanos = std::llround(rec.cost * cost.nanos_per_cost);
    validate_record(rec, env.budget, env.gen.grid->steps());
    return rec;
}

}  // namespace noisesearch
