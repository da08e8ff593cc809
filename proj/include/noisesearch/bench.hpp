#pragma once

// Synthetic prompt bench: a 2-D mixture with modes on a circle plus a prompt
// set split evenly across three attribute tags (a single target mode, a sign
// pattern on the axes, and a conjunction of both). Mode placement offsets the
// circle angles by half a slot so every mode sits strictly inside a quadrant,
// which keeps sign-pattern prompts meaningful and satisfiable.
//
// Benches serialize to a small versioned text file so a run can pin the exact
// instance it used. Serialization uses shortest round-trip floats; reading a
// written bench reproduces it bit for bit.

#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "common.hpp"
#include "configfile.hpp"
#include "gmm.hpp"
#include "rng.hpp"
#include "verifier.hpp"

namespace noisesearch {

struct BenchConfig {
    int n_modes = 8;
    int n_prompts_per_tag = 40;
    double radius_mult = 3.0;
    double component_std = 0.25;
    std::uint64_t seed = 0;

    void validate() const {
        if (n_modes < 1) throw ConfigError("bench: n_modes must be >= 1");
        if (n_prompts_per_tag < 1) throw ConfigError("bench: n_prompts_per_tag must be >= 1");
        if (!(radius_mult > 0.0)) throw ConfigError("bench: radius_mult must be > 0");
        if (!(component_std > 0.0)) throw ConfigError("bench: std must be > 0");
    }
};

struct Bench {
    GmmTarget target;
    std::vector<Prompt> prompts;
    double radius_mult = 3.0;
};

namespace detail {

constexpr double kCircleRadius = 3.0;

// The eight 2-D sign patterns usable as position prompts, in a fixed order.
inline const std::vector<std::vector<int>>& quadrant_patterns() {
    static const std::vector<std::vector<int>> p = {
        {1, 0}, {-1, 0}, {0, 1}, {0, -1}, {1, 1}, {-1, 1}, {-1, -1}, {1, -1}};
    return p;
}

inline std::string prompt_name(const char* tag, int i) {
    char buf[48];
    std::snprintf(buf, sizeof buf, "%s_%03d", tag, i);
    return buf;
}

}  // namespace detail

inline GmmTarget circle_target(int n_modes, double component_std) {
    GmmTarget t;
    t.dims = 2;
    t.components.resize(static_cast<std::size_t>(n_modes));
    constexpr double kTau = 6.28318530717958647692;
    for (int k = 0; k < n_modes; ++k) {
        const double a = kTau * (static_cast<double>(k) + 0.5) / n_modes;
        auto& c = t.components[static_cast<std::size_t>(k)];
        c.weight = 1.0 / n_modes;
        c.mean = {detail::kCircleRadius * std::cos(a), detail::kCircleRadius * std::sin(a)};
        c.std = component_std;
    }
    t.validate();
    return t;
}

inline Bench gen_bench(const BenchConfig& cfg, Rng& rng) {
    cfg.validate();
    Bench bench;
    bench.target = circle_target(cfg.n_modes, cfg.component_std);
    bench.radius_mult = cfg.radius_mult;

    // Mode separation check: the judge radius must not let neighbors overlap.
    const double sep = std::sqrt(squared_distance(bench.target.components[0].mean,
                                                  bench.target.components.back().mean));
    double min_sep = sep;
    for (std::size_t k = 1; k < bench.target.components.size(); ++k) {
        min_sep = std::min(min_sep,
                           std::sqrt(squared_distance(bench.target.components[k - 1].mean,
                                                      bench.target.components[k].mean)));
    }
    if (bench.target.components.size() > 1 && min_sep < 8.0 * cfg.component_std) {
        throw ConfigError("bench: mode separation below 8 component stds; lower std or n_modes");
    }

    // Position prompts draw only from patterns that some component satisfies,
    // so every generated prompt is satisfiable by construction.
    std::vector<std::vector<int>> satisfiable;
    for (const auto& p : detail::quadrant_patterns()) {
        if (!satisfying_components(Constraint::in_quadrant(p), bench.target).empty()) {
            satisfiable.push_back(p);
        }
    }
    if (satisfiable.empty()) throw InternalError("bench: no satisfiable quadrant pattern");

    for (int i = 0; i < cfg.n_prompts_per_tag; ++i) {
        Prompt p;
        p.id = detail::prompt_name("single_object", i);
        p.tag = AttributeTag::kSingleObject;
        p.constraint = Constraint::mode_is(
            static_cast<int>(rng.below(static_cast<std::uint64_t>(cfg.n_modes))));
        bench.prompts.push_back(std::move(p));
    }
    for (int i = 0; i < cfg.n_prompts_per_tag; ++i) {
        Prompt p;
        p.id = detail::prompt_name("position", i);
        p.tag = AttributeTag::kPosition;
        p.constraint = Constraint::in_quadrant(
            satisfiable[rng.below(satisfiable.size())]);
        bench.prompts.push_back(std::move(p));
    }
    for (int i = 0; i < cfg.n_prompts_per_tag; ++i) {
        const int k = static_cast<int>(rng.below(static_cast<std::uint64_t>(cfg.n_modes)));
        const Vec& mu = bench.target.components[static_cast<std::size_t>(k)].mean;
        const int sx = mu[0] > 0.0 ? 1 : -1;
        const int sy = mu[1] > 0.0 ? 1 : -1;
        // Pair the mode with a sign constraint it satisfies: its quadrant or
        // one of the two half planes containing it.
        const std::vector<std::vector<int>> options = {{sx, sy}, {sx, 0}, {0, sy}};
        Prompt p;
        p.id = detail::prompt_name("attribute_binding", i);
        p.tag = AttributeTag::kAttributeBinding;
        p.constraint = Constraint::all_of(
            {Constraint::mode_is(k), Constraint::in_quadrant(options[rng.below(3)])});
        bench.prompts.push_back(std::move(p));
    }

    for (const auto& p : bench.prompts) {
        if (satisfying_components(p.constraint, bench.target).empty()) {
            throw InternalError("bench: generated unsatisfiable prompt " + p.id);
        }
    }
    return bench;
}

// ---- serialization ----------------------------------------------------

namespace detail {

inline std::string fmt_exact(double x) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, x);
    return std::string(buf, res.ptr);
}

inline void write_constraint(std::ostream& os, const Constraint& c) {
    switch (c.kind) {
        case Constraint::Kind::kModeIs:
            os << "mode(" << c.mode << ")";
            return;
        case Constraint::Kind::kInQuadrant: {
            os << "quadrant(";
            for (std::size_t i = 0; i < c.signs.size(); ++i) {
                if (i) os << ",";
                os << (c.signs[i] > 0 ? "+" : c.signs[i] < 0 ? "-" : "0");
            }
            os << ")";
            return;
        }
        case Constraint::Kind::kComposite: {
            os << "all(";
            for (std::size_t i = 0; i < c.parts.size(); ++i) {
                if (i) os << "; ";
                write_constraint(os, c.parts[i]);
            }
            os << ")";
            return;
        }
    }
    throw InternalError("unknown constraint kind");
}

// Recursive-descent parser for the constraint grammar above.
struct ConstraintParser {
    const std::string& s;
    std::size_t pos = 0;

    void skip_ws() {
        while (pos < s.size() && (s[pos] == ' ' || s[pos] == '\t')) ++pos;
    }
    bool eat(char c) {
        skip_ws();
        if (pos < s.size() && s[pos] == c) {
            ++pos;
            return true;
        }
        return false;
    }
    void expect(char c) {
        if (!eat(c)) throw ConfigError("constraint: expected '" + std::string(1, c) +
                                       "' in '" + s + "'");
    }
    std::string ident() {
        skip_ws();
        std::size_t start = pos;
        while (pos < s.size() && (std::isalpha(static_cast<unsigned char>(s[pos])) || s[pos] == '_')) ++pos;
        if (start == pos) throw ConfigError("constraint: expected name in '" + s + "'");
        return s.substr(start, pos - start);
    }

    Constraint parse() {
        const std::string name = ident();
        expect('(');
        Constraint c;
        if (name == "mode") {
            skip_ws();
            std::size_t start = pos;
            while (pos < s.size() && (std::isdigit(static_cast<unsigned char>(s[pos])))) ++pos;
            if (start == pos) throw ConfigError("constraint: mode() needs an index in '" + s + "'");
            c = Constraint::mode_is(std::stoi(s.substr(start, pos - start)));
        } else if (name == "quadrant") {
            std::vector<int> signs;
            for (;;) {
                skip_ws();
                if (pos >= s.size()) throw ConfigError("constraint: unterminated quadrant in '" + s + "'");
                const char ch = s[pos];
                if (ch == '+') signs.push_back(1);
                else if (ch == '-') signs.push_back(-1);
                else if (ch == '0') signs.push_back(0);
                else throw ConfigError("constraint: bad sign '" + std::string(1, ch) + "' in '" + s + "'");
                ++pos;
                if (!eat(',')) break;
            }
            c = Constraint::in_quadrant(std::move(signs));
        } else if (name == "all") {
            std::vector<Constraint> parts;
            parts.push_back(parse());
            while (eat(';')) parts.push_back(parse());
            c = Constraint::all_of(std::move(parts));
        } else {
            throw ConfigError("constraint: unknown form '" + name + "'");
        }
        expect(')');
        return c;
    }
};

}  // namespace detail

inline Constraint parse_constraint(const std::string& text) {
    detail::ConstraintParser p{text};
    Constraint c = p.parse();
    p.skip_ws();
    if (p.pos != text.size()) {
        throw ConfigError("constraint: trailing input in '" + text + "'");
    }
    return c;
}

inline std::string constraint_to_string(const Constraint& c) {
    std::ostringstream os;
    detail::write_constraint(os, c);
    return os.str();
}

inline void write_bench(const Bench& bench, std::ostream& os) {
    os << "# noisesearch bench\n";
    os << "[bench]\n";
    os << "version = 1\n";
    os << "radius_mult = " << detail::fmt_exact(bench.radius_mult) << "\n";
    os << "[target]\n";
    os << "dims = " << bench.target.dims << "\n";
    os << "components = " << bench.target.components.size() << "\n";
    for (std::size_t k = 0; k < bench.target.components.size(); ++k) {
        const auto& c = bench.target.components[k];
        os << "weight" << k << " = " << detail::fmt_exact(c.weight) << "\n";
        os << "mean" << k << " = ";
        for (std::size_t i = 0; i < c.mean.size(); ++i) {
            if (i) os << ", ";
            os << detail::fmt_exact(c.mean[i]);
        }
        os << "\n";
        os << "std" << k << " = " << detail::fmt_exact(c.std) << "\n";
    }
    for (const auto& p : bench.prompts) {
        os << "[prompt." << p.id << "]\n";
        os << "tag = " << attribute_tag_name(p.tag) << "\n";
        os << "constraint = " << constraint_to_string(p.constraint) << "\n";
    }
}

inline std::string bench_to_string(const Bench& bench) {
    std::ostringstream os;
    write_bench(bench, os);
    return os.str();
}

inline Bench bench_from_string(const std::string& text) {
    const ParsedConfig parsed = parse_config_text(text);
    Bench bench;

    const ConfigSection* meta = parsed.find("bench");
    if (!meta) throw ConfigError("bench file: missing [bench] section");
    const ConfigEntry* ver = meta->find("version");
    if (!ver) throw ConfigError("bench file: missing version");
    if (cfg::to_int(*ver) != 1) {
        throw ConfigError(cfg::line_msg(ver->line, "unsupported bench version '" + ver->value + "'"));
    }
    const ConfigEntry* rm = meta->find("radius_mult");
    if (!rm) throw ConfigError("bench file: missing radius_mult");
    bench.radius_mult = cfg::to_real(*rm);
    if (!(bench.radius_mult > 0.0)) {
        throw ConfigError(cfg::line_msg(rm->line, "radius_mult must be > 0"));
    }
    cfg::reject_unknown(*meta);

    const ConfigSection* tgt = parsed.find("target");
    if (!tgt) throw ConfigError("bench file: missing [target] section");
    const ConfigEntry* dims = tgt->find("dims");
    const ConfigEntry* ncomp = tgt->find("components");
    if (!dims || !ncomp) throw ConfigError("bench file: [target] needs dims and components");
    bench.target.dims = static_cast<int>(cfg::to_int(*dims));
    const long long n = cfg::to_int(*ncomp);
    if (n < 1) throw ConfigError(cfg::line_msg(ncomp->line, "components must be >= 1"));
    bench.target.components.resize(static_cast<std::size_t>(n));
    for (long long k = 0; k < n; ++k) {
        const std::string suffix = std::to_string(k);
        const ConfigEntry* w = tgt->find("weight" + suffix);
        const ConfigEntry* m = tgt->find("mean" + suffix);
        const ConfigEntry* s = tgt->find("std" + suffix);
        if (!w || !m || !s) {
            throw ConfigError("bench file: missing weight/mean/std for component " + suffix);
        }
        auto& c = bench.target.components[static_cast<std::size_t>(k)];
        c.weight = cfg::to_real(*w);
        c.mean = cfg::to_list<double>(*m, [](const ConfigEntry& e) { return cfg::to_real(e); });
        c.std = cfg::to_real(*s);
    }
    cfg::reject_unknown(*tgt);
    bench.target.validate();

    for (const auto& section : parsed.sections) {
        if (section.name.rfind("prompt.", 0) != 0) continue;
        Prompt p;
        p.id = section.name.substr(7);
        if (p.id.empty()) throw ConfigError(cfg::line_msg(section.line, "empty prompt id"));
        const ConfigEntry* tag = section.find("tag");
        const ConfigEntry* con = section.find("constraint");
        if (!tag || !con) {
            throw ConfigError(cfg::line_msg(section.line, "prompt needs tag and constraint"));
        }
        p.tag = attribute_tag_from_name(tag->value);
        try {
            p.constraint = parse_constraint(con->value);
            validate_constraint(p.constraint, bench.target);
        } catch (const ConfigError& err) {
            throw ConfigError(cfg::line_msg(con->line, err.what()));
        }
        cfg::reject_unknown(section);
        bench.prompts.push_back(std::move(p));
    }
    for (const auto& section : parsed.sections) {
        if (section.name != "bench" && section.name != "target" &&
            section.name.rfind("prompt.", 0) != 0) {
            throw ConfigError(cfg::line_msg(section.line,
                                            "unknown section [" + section.name + "] in bench file"));
        }
    }
    if (bench.prompts.empty()) throw ConfigError("bench file: no prompts");
    for (std::size_t i = 0; i < bench.prompts.size(); ++i) {
        for (std::size_t j = i + 1; j < bench.prompts.size(); ++j) {
            if (bench.prompts[i].id == bench.prompts[j].id) {
                throw ConfigError("bench file: duplicate prompt id " + bench.prompts[i].id);
            }
        }
    }
    return bench;
}

// Enumerates satisfying components per prompt; throws on any unsatisfiable
// one. Used by validation before a run touches the budget.
inline void validate_bench(const Bench& bench) {
    bench.target.validate();
    if (!(bench.radius_mult > 0.0)) throw ConfigError("bench: radius_mult must be > 0");
    for (const auto& p : bench.prompts) {
        if (satisfying_components(p.constraint, bench.target).empty()) {
            throw ConfigError("bench: prompt " + p.id + " is unsatisfiable");
        }
    }
}

}  // namespace noisesearch
