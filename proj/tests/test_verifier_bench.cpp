/*
 * Verifiers, the exact judge, the prompt bench, and the strict key=value
 * config reader.
 *
 * Validates:
 *   - oracle log-likelihood scoring for mode / quadrant / composite prompts
 *     against enumeration oracles written independently in this file
 *   - the unsatisfiable-prompt sentinel
 *   - negative-distance, noisy, and blurred verifier variants
 *   - judge semantics: nearest-mean ownership, lowest-index ties, the
 *     radius cut, and composite constraints
 *   - constraint grammar round-trips and parse failures
 *   - bench generation: layout, prompt counts, determinism, separation
 *     guard, serialization round-trip, and validation of tampered files
 *   - config reader strictness: duplicates, unknown keys, typed values,
 *     line-numbered errors, and --set overrides
 */
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <cstdint>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "noisesearch/bench.hpp"
#include "noisesearch/configfile.hpp"
#include "noisesearch/verifier.hpp"

using namespace noisesearch;

namespace {

constexpr long double kPiL = 3.14159265358979323846264338327950288L;

GmmTarget square_target() {
    GmmTarget t;
    t.dims = 2;
    t.components = {
        {0.4, {2.0, 2.0}, 0.25},
        {0.3, {-2.0, 2.0}, 0.25},
        {0.2, {-2.0, -2.0}, 0.25},
        {0.1, {2.0, -2.0}, 0.25},
    };
    t.validate();
    return t;
}

// Log of a mixture restricted to `keep`, weights kept as-is (not renormalized).
double masked_mixture_logdensity(const GmmTarget& target, const std::vector<int>& keep,
                                 const Vec& x, double extra_var = 0.0) {
    long double acc = 0.0L;
    for (int k : keep) {
        const auto& c = target.components[static_cast<std::size_t>(k)];
        const long double var = static_cast<long double>(c.std) * c.std + extra_var;
        long double q = 0.0L;
        for (std::size_t i = 0; i < x.size(); ++i) {
            const long double d = x[i] - c.mean[i];
            q += d * d;
        }
        acc += c.weight * std::exp(-q / (2.0L * var)) /
               (2.0L * kPiL * var);  // dims = 2
    }
    return static_cast<double>(std::log(acc));
}

double bare_component_logdensity(const GmmComponent& c, const Vec& x,
                                 double extra_var = 0.0) {
    const long double var = static_cast<long double>(c.std) * c.std + extra_var;
    long double q = 0.0L;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const long double d = x[i] - c.mean[i];
        q += d * d;
    }
    return static_cast<double>(-std::log(2.0L * kPiL * var) - q / (2.0L * var));
}

Prompt make_prompt(Constraint c, AttributeTag tag = AttributeTag::kSingleObject) {
    Prompt p;
    p.id = "p";
    p.tag = tag;
    p.constraint = std::move(c);
    return p;
}

VerifierContext make_ctx(const VerifierSpec& spec, const GmmTarget* target,
                         std::uint64_t stream = 0) {
    return VerifierContext(spec, target, make_verifier_rng(1, "p", stream));
}

}  // namespace

// ======================================================================
// oracle log-likelihood
// ======================================================================

TEST_CASE("mode prompts score the bare component density, ignoring weights") {
    const GmmTarget target = square_target();
    VerifierSpec spec;  // oracle_loglik
    VerifierContext ctx = make_ctx(spec, &target);

    for (int k = 0; k < 4; ++k) {
        const Prompt p = make_prompt(Constraint::mode_is(k));
        const auto& c = target.components[static_cast<std::size_t>(k)];
        const Reward at_mean = ctx.evaluate(c.mean, p);
        // Peak of an isotropic 2-D Gaussian with std 0.25.
        CHECK(std::abs(at_mean.value - (-std::log(2.0 * M_PI * 0.0625))) < 1e-12);
        CHECK(std::abs(at_mean.value - 0.9347116558) < 1e-9);
        CHECK(at_mean.verifier_calls == 1);

        // Same value for every component despite unequal mixture weights.
        const Vec off = {c.mean[0] + 0.3, c.mean[1] - 0.4};
        CHECK(std::abs(ctx.evaluate(off, p).value - bare_component_logdensity(c, off)) <
              1e-12);
    }
}

TEST_CASE("quadrant prompts score the weight-keeping masked mixture") {
    const GmmTarget target = square_target();
    VerifierSpec spec;
    VerifierContext ctx = make_ctx(spec, &target);

    const std::vector<std::vector<int>> patterns = {
        {1, 0}, {-1, 0}, {0, 1}, {0, -1}, {1, 1}, {-1, 1}, {-1, -1}, {1, -1}};
    Rng r(77);
    for (const auto& signs : patterns) {
        // Enumerate satisfying components by checking mean signs directly.
        std::vector<int> keep;
        for (int k = 0; k < 4; ++k) {
            bool ok = true;
            for (std::size_t i = 0; i < signs.size(); ++i) {
                if (signs[i] != 0 &&
                    signs[i] * target.components[static_cast<std::size_t>(k)].mean[i] <= 0.0) {
                    ok = false;
                }
            }
            if (ok) keep.push_back(k);
        }
        const Constraint c = Constraint::in_quadrant(signs);
        CHECK(satisfying_components(c, target) == keep);

        const Prompt p = make_prompt(c, AttributeTag::kPosition);
        for (int trial = 0; trial < 20; ++trial) {
            const Vec x = {4.0 * r.normal(), 4.0 * r.normal()};
            const double want = masked_mixture_logdensity(target, keep, x);
            CHECK(std::abs(ctx.evaluate(x, p).value - want) < 1e-10);
        }
    }
}

TEST_CASE("composite prompts intersect their parts") {
    const GmmTarget target = square_target();
    VerifierSpec spec;
    VerifierContext ctx = make_ctx(spec, &target);

    // mode 1 lives at (-2, 2); the composite below keeps exactly component 1.
    const Constraint c = Constraint::all_of(
        {Constraint::mode_is(1), Constraint::in_quadrant({-1, 1})});
    CHECK(satisfying_components(c, target) == std::vector<int>{1});

    const Prompt p = make_prompt(c, AttributeTag::kAttributeBinding);
    const Vec x = {-1.4, 1.7};
    CHECK(std::abs(ctx.evaluate(x, p).value -
                   masked_mixture_logdensity(target, {1}, x)) < 1e-10);
}

TEST_CASE("an unsatisfiable prompt scores the sentinel") {
    const GmmTarget target = square_target();
    VerifierSpec spec;
    VerifierContext ctx = make_ctx(spec, &target);
    // mode 0 is at (2, 2); demanding the opposite quadrant empties the set.
    const Constraint c = Constraint::all_of(
        {Constraint::mode_is(0), Constraint::in_quadrant({-1, -1})});
    CHECK(satisfying_components(c, target).empty());
    const Prompt p = make_prompt(c);
    CHECK(ctx.evaluate({0.0, 0.0}, p).value == kUnsatisfiableReward);
    CHECK_FALSE(success(p, {2.0, 2.0}, target, 3.0));
}

TEST_CASE("negative-distance verifier measures the nearest satisfying mean") {
    const GmmTarget target = square_target();
    VerifierSpec spec;
    spec.kind = VerifierSpec::Kind::kNegDistance;
    VerifierContext ctx = make_ctx(spec, &target);

    const Prompt p = make_prompt(Constraint::mode_is(2));
    CHECK(ctx.evaluate(target.components[2].mean, p).value == 0.0);
    CHECK(std::abs(ctx.evaluate({-2.0, -1.0}, p).value - (-1.0)) < 1e-15);

    const Prompt quad = make_prompt(Constraint::in_quadrant({1, 0}),
                                    AttributeTag::kPosition);
    Rng r(3);
    for (int trial = 0; trial < 30; ++trial) {
        const Vec x = {3.0 * r.normal(), 3.0 * r.normal()};
        const double want = -std::sqrt(std::min(squared_distance(x, target.components[0].mean),
                                                squared_distance(x, target.components[3].mean)));
        CHECK(std::abs(ctx.evaluate(x, quad).value - want) < 1e-12);
    }
}

TEST_CASE("noisy oracle adds zero-mean seeded noise on a private stream") {
    const GmmTarget target = square_target();
    VerifierSpec clean;
    VerifierSpec noisy;
    noisy.kind = VerifierSpec::Kind::kNoisyOracle;
    noisy.noise_std = 0.5;

    const Prompt p = make_prompt(Constraint::mode_is(0));
    const Vec x = {1.5, 2.5};
    VerifierContext clean_ctx = make_ctx(clean, &target);
    const double base = clean_ctx.evaluate(x, p).value;

    VerifierContext noisy_ctx = make_ctx(noisy, &target);
    const int n = 4000;
    double sum = 0.0, sq = 0.0;
    for (int i = 0; i < n; ++i) {
        const double d = noisy_ctx.evaluate(x, p).value - base;
        sum += d;
        sq += d * d;
    }
    const double mean = sum / n;
    const double sd = std::sqrt(sq / n - mean * mean);
    CHECK(std::abs(mean) < 4.0 * 0.5 / std::sqrt(static_cast<double>(n)));
    CHECK(std::abs(sd - 0.5) < 0.05);

    // Same stream id replays; a different stream id diverges.
    VerifierContext again = make_ctx(noisy, &target);
    CHECK(again.evaluate(x, p).value == [&] {
        VerifierContext fresh = make_ctx(noisy, &target);
        return fresh.evaluate(x, p).value;
    }());
    VerifierContext other = make_ctx(noisy, &target, 99);
    CHECK(other.evaluate(x, p).value != again.evaluate(x, p).value);

    VerifierSpec bad = noisy;
    bad.noise_std = 0.0;
    CHECK_THROWS_AS(make_ctx(bad, &target), ConfigError);
}

TEST_CASE("blurred verifier widens every component variance") {
    const GmmTarget target = square_target();
    VerifierSpec spec;
    spec.kind = VerifierSpec::Kind::kBlurred;
    spec.extra_std = 0.75;
    VerifierContext ctx = make_ctx(spec, &target);
    const double extra_var = 0.75 * 0.75;

    const Prompt mode = make_prompt(Constraint::mode_is(1));
    const Prompt quad = make_prompt(Constraint::in_quadrant({0, 1}),
                                    AttributeTag::kPosition);
    Rng r(8);
    for (int trial = 0; trial < 30; ++trial) {
        const Vec x = {3.0 * r.normal(), 3.0 * r.normal()};
        CHECK(std::abs(ctx.evaluate(x, mode).value -
                       bare_component_logdensity(target.components[1], x, extra_var)) <
              1e-10);
        CHECK(std::abs(ctx.evaluate(x, quad).value -
                       masked_mixture_logdensity(target, {0, 1}, x, extra_var)) < 1e-10);
    }

    VerifierSpec bad = spec;
    bad.extra_std = 0.0;
    CHECK_THROWS_AS(make_ctx(bad, &target), ConfigError);
}

TEST_CASE("evaluate rejects malformed samples and bad prompts") {
    const GmmTarget target = square_target();
    VerifierSpec spec;
    VerifierContext ctx = make_ctx(spec, &target);
    const Prompt p = make_prompt(Constraint::mode_is(0));
    CHECK_THROWS_AS(ctx.evaluate({1.0}, p), std::domain_error);
    CHECK_THROWS_AS(ctx.evaluate({std::numeric_limits<double>::infinity(), 0.0}, p),
                    std::domain_error);
    const Prompt bad = make_prompt(Constraint::mode_is(17));
    CHECK_THROWS_AS(ctx.evaluate({0.0, 0.0}, bad), ConfigError);
}

// ======================================================================
// exact judge
// ======================================================================

TEST_CASE("judge accepts near satisfying modes and rejects elsewhere") {
    const GmmTarget target = square_target();
    const Prompt p = make_prompt(Constraint::mode_is(0));

    CHECK(success(p, target.components[0].mean, target, 3.0));
    // 10 standard deviations from every mean.
    CHECK_FALSE(success(p, {8.0, 8.0}, target, 3.0));
    // Near a non-satisfying mode: owned by component 2, which fails mode_is(0).
    CHECK_FALSE(success(p, target.components[2].mean, target, 3.0));
}

TEST_CASE("judge radius cut is sharp at radius_mult times the owner std") {
    const GmmTarget target = square_target();
    const Prompt p = make_prompt(Constraint::mode_is(0));
    const double radius = 3.0 * 0.25;
    const Vec just_in = {2.0 + radius - 1e-9, 2.0};
    const Vec just_out = {2.0 + radius + 1e-9, 2.0};
    CHECK(success(p, just_in, target, 3.0));
    CHECK_FALSE(success(p, just_out, target, 3.0));
}

TEST_CASE("judge breaks ownership ties toward the lowest component index") {
    GmmTarget target;
    target.dims = 2;
    target.components = {
        {0.5, {-1.0, 0.0}, 3.0},
        {0.5, {1.0, 0.0}, 3.0},
    };
    target.validate();
    const Vec midpoint = {0.0, 0.0};
    // Equidistant: component 0 owns the point, so mode_is(0) succeeds and
    // mode_is(1) fails even though both are a distance 1 away.
    CHECK(success(make_prompt(Constraint::mode_is(0)), midpoint, target, 3.0));
    CHECK_FALSE(success(make_prompt(Constraint::mode_is(1)), midpoint, target, 3.0));
}

TEST_CASE("composite judging requires one owner to satisfy every part") {
    const GmmTarget target = square_target();
    const Constraint both = Constraint::all_of(
        {Constraint::mode_is(3), Constraint::in_quadrant({1, -1})});
    const Prompt p = make_prompt(both, AttributeTag::kAttributeBinding);
    CHECK(success(p, target.components[3].mean, target, 3.0));
    CHECK_FALSE(success(p, target.components[0].mean, target, 3.0));
}

TEST_CASE("judge validates its inputs") {
    const GmmTarget target = square_target();
    const Prompt p = make_prompt(Constraint::mode_is(0));
    CHECK_THROWS_AS(success(p, {1.0}, target, 3.0), std::domain_error);
    CHECK_THROWS_AS(success(p, {0.0, 0.0}, target, 0.0), ConfigError);
}

TEST_CASE("constraint validation rejects out-of-range pieces") {
    const GmmTarget target = square_target();
    CHECK_THROWS_AS(validate_constraint(Constraint::mode_is(-1), target), ConfigError);
    CHECK_THROWS_AS(validate_constraint(Constraint::mode_is(4), target), ConfigError);
    CHECK_THROWS_AS(validate_constraint(Constraint::in_quadrant({1}), target),
                    ConfigError);
    CHECK_THROWS_AS(validate_constraint(Constraint::in_quadrant({1, 2}), target),
                    ConfigError);
    CHECK_THROWS_AS(validate_constraint(Constraint::all_of({}), target), ConfigError);
}

// ======================================================================
// constraint grammar
// ======================================================================

TEST_CASE("constraint text round-trips") {
    for (const std::string s : {"mode(3)", "quadrant(+,-)", "quadrant(+,0)",
                                "quadrant(0,-)", "all(mode(3); quadrant(+,0))",
                                "all(mode(0); quadrant(-,-))"}) {
        CHECK(constraint_to_string(parse_constraint(s)) == s);
    }
}

TEST_CASE("constraint parser rejects malformed text") {
    for (const std::string s : {"mode(", "mode()", "mode(1)x", "quadrant()",
                                "quadrant(*,+)", "all()", "all(mode(1);)",
                                "tilt(1)", ""}) {
        CHECK_THROWS_AS(parse_constraint(s), ConfigError);
    }
}

// ======================================================================
// bench generation and serialization
// ======================================================================

TEST_CASE("default bench layout: circle of modes, three tags, forty each") {
    BenchConfig cfg;
    Rng rng = Rng::derive(0, {stream::kBench});
    const Bench bench = gen_bench(cfg, rng);
    CHECK(bench.target.components.size() == 8);
    CHECK(bench.prompts.size() == 120);
    CHECK(bench.radius_mult == 3.0);
    validate_bench(bench);

    // Modes sit on a radius-3 circle with equal weights.
    for (const auto& c : bench.target.components) {
        CHECK(std::abs(norm(c.mean) - 3.0) < 1e-12);
        CHECK(std::abs(c.weight - 0.125) < 1e-15);
        CHECK(c.std == 0.25);
    }

    int counts[3] = {0, 0, 0};
    std::set<std::string> ids;
    for (const auto& p : bench.prompts) {
        ++counts[static_cast<int>(p.tag)];
        ids.insert(p.id);
    }
    CHECK(counts[0] == 40);
    CHECK(counts[1] == 40);
    CHECK(counts[2] == 40);
    CHECK(ids.size() == 120);  // unique ids
    CHECK(bench.prompts[0].id == "single_object_000");
    CHECK(bench.prompts[40].id == "position_000");
    CHECK(bench.prompts[80].id == "attribute_binding_000");
}

TEST_CASE("every generated prompt is satisfiable") {
    BenchConfig cfg;
    cfg.seed = 5;
    Rng rng = Rng::derive(5, {stream::kBench});
    const Bench bench = gen_bench(cfg, rng);
    for (const auto& p : bench.prompts) {
        CHECK_FALSE(satisfying_components(p.constraint, bench.target).empty());
    }
}

TEST_CASE("bench generation is deterministic in the seed") {
    BenchConfig cfg;
    Rng r1 = Rng::derive(0, {stream::kBench});
    Rng r2 = Rng::derive(0, {stream::kBench});
    CHECK(bench_to_string(gen_bench(cfg, r1)) == bench_to_string(gen_bench(cfg, r2)));

    Rng r3 = Rng::derive(1, {stream::kBench});
    CHECK(bench_to_string(gen_bench(cfg, r1)) != bench_to_string(gen_bench(cfg, r3)));
}

TEST_CASE("crowded mode circles are rejected by the separation guard") {
    BenchConfig cfg;
    cfg.n_modes = 40;  // adjacent chord ~0.47 < 8 * std = 2.0
    Rng rng = Rng::derive(0, {stream::kBench});
    CHECK_THROWS_AS(gen_bench(cfg, rng), ConfigError);
}

TEST_CASE("bench text round-trips byte for byte") {
    BenchConfig cfg;
    cfg.n_prompts_per_tag = 5;
    Rng rng = Rng::derive(3, {stream::kBench});
    const Bench bench = gen_bench(cfg, rng);
    const std::string text = bench_to_string(bench);
    const Bench back = bench_from_string(text);
    CHECK(bench_to_string(back) == text);
    validate_bench(back);
}

TEST_CASE("tampered bench files are rejected") {
    BenchConfig cfg;
    cfg.n_prompts_per_tag = 2;
    Rng rng = Rng::derive(0, {stream::kBench});
    const std::string good = bench_to_string(gen_bench(cfg, rng));

    std::string bad = good;
    bad.replace(bad.find("version = 1"), 11, "version = 2");
    CHECK_THROWS_AS(bench_from_string(bad), ConfigError);

    bad = good;
    bad.replace(bad.find("tag = "), 6, "tug = ");
    CHECK_THROWS_AS(bench_from_string(bad), ConfigError);

    bad = good;
    bad.replace(bad.find("mode("), 5, "created(");
    CHECK_THROWS_AS(bench_from_string(bad), ConfigError);

    // An unsatisfiable constraint parses but fails validation.
    bad = good;
    const std::string from = "constraint = mode(";
    const std::size_t at = bad.find(from);
    REQUIRE(at != std::string::npos);
    const char digit = bad[at + from.size()];
    const int k = digit - '0';
    const Bench parsed = bench_from_string(good);
    const auto& mean = parsed.target.components[static_cast<std::size_t>(k)].mean;
    const std::string opposite =
        std::string(mean[0] > 0 ? "-" : "+") + "," + (mean[1] > 0 ? "-" : "+");
    bad.replace(at, from.size() + 2,
                "constraint = all(mode(" + std::string(1, digit) + "); quadrant(" +
                    opposite + "))");
    const Bench unsat = bench_from_string(bad);
    CHECK_THROWS_AS(validate_bench(unsat), ConfigError);
}

// ======================================================================
// config reader
// ======================================================================

TEST_CASE("config reader parses sections, keys, and comments") {
    const ParsedConfig p = parse_config_text(
        "# comment\n"
        "[alpha]\n"
        "x = 1\n"
        "y = two words\n"
        "\n"
        "[beta.gamma]\n"
        "z = 3.5\n");
    REQUIRE(p.sections.size() == 2);
    CHECK(p.sections[0].name == "alpha");
    CHECK(p.sections[0].entries.size() == 2);
    CHECK(p.sections[0].entries[1].value == "two words");
    CHECK(p.sections[1].name == "beta.gamma");
    CHECK(p.find("beta.gamma")->find("z")->line == 7);
}

TEST_CASE("config reader reports precise line numbers for malformed input") {
    const auto check_throws_with_line = [](const std::string& text,
                                           const std::string& needle) {
        try {
            parse_config_text(text);
            FAIL("expected ConfigError");
        } catch (const ConfigError& e) {
            const std::string msg = e.what();
            CHECK(msg.find(needle) != std::string::npos);
            CHECK(msg.find("line") != std::string::npos);
        }
    };
    check_throws_with_line("[a]\nx = 1\nx = 2\n", "duplicate key");
    check_throws_with_line("[a]\nnonsense line\n", "key = value");
    check_throws_with_line("x = 1\n", "outside");
    check_throws_with_line("[a]\n[a]\n", "duplicate section");
    check_throws_with_line("[unclosed\n", "unterminated");
}

TEST_CASE("typed accessors convert or fail with the key name and line") {
    const ParsedConfig p = parse_config_text(
        "[s]\n"
        "n = 12\n"
        "x = 0.25\n"
        "flag = true\n"
        "off = false\n"
        "list = 1, 2, 3\n"
        "badint = 1.5\n"
        "badbool = yes\n");
    const ConfigSection& s = *p.find("s");
    CHECK(cfg::to_int(*s.find("n")) == 12);
    CHECK(cfg::to_real(*s.find("x")) == 0.25);
    CHECK(cfg::to_bool(*s.find("flag")));
    CHECK_FALSE(cfg::to_bool(*s.find("off")));
    CHECK(cfg::split_list("1, 2, 3") == std::vector<std::string>{"1", "2", "3"});
    CHECK_THROWS_AS(cfg::to_int(*s.find("badint")), ConfigError);
    CHECK_THROWS_AS(cfg::to_bool(*s.find("badbool")), ConfigError);
    try {
        cfg::to_int(*s.find("badint"));
    } catch (const ConfigError& e) {
        CHECK(std::string(e.what()).find("badint") != std::string::npos);
        CHECK(std::string(e.what()).find("line 7") != std::string::npos);
    }
}

TEST_CASE("unconsumed keys are rejected by name") {
    const ParsedConfig p = parse_config_text("[s]\nknown = 1\nmystery = 2\n");
    const ConfigSection& s = *p.find("s");
    (void)s.find("known");  // consume one key
    try {
        cfg::reject_unknown(s);
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        CHECK(std::string(e.what()).find("mystery") != std::string::npos);
    }
}

TEST_CASE("overrides replace, create, and validate") {
    ParsedConfig p = parse_config_text("[s]\nx = 1\n");
    apply_overrides(p, {"s.x=9", "s.y=2", "fresh.key=3"});
    CHECK(p.find("s")->find("x")->value == "9");
    CHECK(p.find("s")->find("y")->value == "2");
    CHECK(p.find("fresh")->find("key")->value == "3");
    CHECK_THROWS_AS(apply_overrides(p, {"nodot=1"}), ConfigError);
    CHECK_THROWS_AS(apply_overrides(p, {"no_equals"}), ConfigError);
}
