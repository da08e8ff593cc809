#pragma once

// Deterministic text output: the pinned CSV schemas, the run manifest, and
// small file helpers. All numbers are formatted locale-independently via
// to_chars; every emitted file uses \n line endings so reruns are
// byte-comparable.

#include <charconv>
#include <cstdint>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "bench.hpp"
#include "config.hpp"
#include "harness.hpp"
#include "rng.hpp"
#include "version.hpp"

namespace noisesearch {

// 6 significant digits, general format (printf %.6g equivalent).
inline std::string fmt6(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v,
                                   std::chars_format::general, 6);
    return std::string(buf, res.ptr);
}

inline std::string hex16(std::uint64_t v) {
    static const char* digits = "0123456789abcdef";
    std::string s(16, '0');
    for (int i = 15; i >= 0; --i) {
        s[static_cast<std::size_t>(i)] = digits[v & 0xF];
        v >>= 4;
    }
    return s;
}

inline constexpr const char* kRunsHeader =
    "strategy,verifier,budget,prompt_id,attribute_tag,seed,used_nfe,verifier_calls,"
    "per_step_nfe,final_reward,success,cost,cpu_nanos";

inline constexpr const char* kSummaryHeader =
    "strategy,verifier,budget,n_runs,success_rate,ci_low,ci_high,success_single_object,"
    "success_position,success_attribute_binding,mean_reward,mean_used_nfe,"
    "mean_verifier_calls,mean_cost,mean_cpu_nanos";

inline constexpr const char* kCurvesHeader =
    "strategy,verifier,budget,step,mean_accepted_reward,n";

inline std::string runs_csv(const std::vector<RunRecord>& records) {
    std::ostringstream os;
    os << kRunsHeader << "\n";
    for (const auto& r : records) {
        os << r.strategy << "," << r.verifier << "," << r.budget << "," << r.prompt_id
           << "," << attribute_tag_name(r.attribute_tag) << "," << r.seed << ","
           << r.used_nfe << "," << r.verifier_calls << ",";
        for (std::size_t i = 0; i < r.per_step_nfe.size(); ++i) {
            if (i) os << ";";
            os << r.per_step_nfe[i];
        }
        os << "," << fmt6(r.final_reward) << "," << (r.success ? 1 : 0) << ","
           << fmt6(r.cost) << "," << r.cpu_nanos << "\n";
    }
    return os.str();
}

inline std::string summary_csv(const std::vector<SummaryRow>& rows) {
    std::ostringstream os;
    os << kSummaryHeader << "\n";
    for (const auto& s : rows) {
        os << s.strategy << "," << s.verifier << "," << s.budget << "," << s.n_runs << ","
           << fmt6(s.success_rate) << "," << fmt6(s.ci_low) << "," << fmt6(s.ci_high)
           << "," << fmt6(s.success_by_tag[0]) << "," << fmt6(s.success_by_tag[1]) << ","
           << fmt6(s.success_by_tag[2]) << "," << fmt6(s.mean_reward) << ","
           << fmt6(s.mean_used_nfe) << "," << fmt6(s.mean_verifier_calls) << ","
           << fmt6(s.mean_cost) << "," << fmt6(s.mean_cpu_nanos) << "\n";
    }
    return os.str();
}

// Per-step mean accepted score for every (strategy, verifier, budget) group,
// groups in first-appearance order. runs.csv carries no traces, so the score
// curves get their own file.
inline std::string curves_csv(const std::vector<RunRecord>& records) {
    std::vector<GroupKey> keys;
    for (const auto& r : records) {
        bool seen = false;
        for (const auto& k : keys) {
            if (k.strategy == r.strategy && k.verifier == r.verifier &&
                k.budget == r.budget) {
                seen = true;
                break;
            }
        }
        if (!seen) keys.push_back(GroupKey{r.strategy, r.verifier, r.budget});
    }
    std::ostringstream os;
    os << kCurvesHeader << "\n";
    for (const auto& k : keys) {
        for (const auto& p : score_curve(records, k)) {
            os << k.strategy << "," << k.verifier << "," << k.budget << "," << p.step
               << "," << fmt6(p.mean_reward) << "," << p.n << "\n";
        }
    }
    return os.str();
}

inline std::string manifest_text(const ExperimentConfig& cfg, const Bench& bench,
                                 const std::vector<CalibratedDelta>& calibrated,
                                 std::size_t n_records, std::size_t n_failures) {
    std::ostringstream os;
    os << "tool = " << kToolName << " " << kToolVersion << "\n";
    os << "config_hash = " << hex16(fnv1a64(config_to_string(cfg))) << "\n";
    os << "bench_hash = " << hex16(fnv1a64(bench_to_string(bench))) << "\n";
    os << "prompts = " << bench.prompts.size() << "\n";
    os << "budgets = ";
    for (std::size_t i = 0; i < cfg.budgets.size(); ++i) {
        if (i) os << ",";
        os << cfg.budgets[i];
    }
    os << "\nseeds = ";
    for (std::size_t i = 0; i < cfg.seeds.size(); ++i) {
        if (i) os << ",";
        os << cfg.seeds[i];
    }
    os << "\nrecords = " << n_records << "\n";
    os << "failures = " << n_failures << "\n";
    for (const auto& c : calibrated) {
        os << "calibrated_delta." << c.strategy << "." << c.verifier << " = "
           << detail::fmt_exact(c.delta0) << "\n";
    }
    return os.str();
}

// ---- reading (for the plot command) -------------------------------------

struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
};

inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::size_t pos = 0;
    for (;;) {
        const std::size_t c = line.find(',', pos);
        if (c == std::string::npos) {
            out.push_back(line.substr(pos));
            return out;
        }
        out.push_back(line.substr(pos, c - pos));
        pos = c + 1;
    }
}

inline CsvTable read_csv(const std::string& text, const std::string& filename) {
    CsvTable t;
    std::size_t pos = 0;
    bool first = true;
    while (pos < text.size()) {
        std::size_t nl = text.find('\n', pos);
        if (nl == std::string::npos) nl = text.size();
        const std::string line = text.substr(pos, nl - pos);
        pos = nl + 1;
        if (line.empty()) continue;
        auto fields = split_csv_line(line);
        if (first) {
            t.header = std::move(fields);
            first = false;
            continue;
        }
        if (fields.size() != t.header.size()) {
            throw ConfigError(filename + ": row has " + std::to_string(fields.size()) +
                              " fields, header has " + std::to_string(t.header.size()));
        }
        t.rows.push_back(std::move(fields));
    }
    if (first) throw ConfigError(filename + ": empty file");
    return t;
}

// Verifies the header byte-for-byte, naming the first offending column.
inline void require_schema(const CsvTable& t, const char* expected_header,
                           const std::string& filename) {
    const auto expected = split_csv_line(expected_header);
    for (std::size_t i = 0; i < expected.size(); ++i) {
        if (i >= t.header.size()) {
            throw ConfigError(filename + ": missing column '" + expected[i] + "'");
        }
        if (t.header[i] != expected[i]) {
            throw ConfigError(filename + ": expected column '" + expected[i] +
                              "', found '" + t.header[i] + "'");
        }
    }
    if (t.header.size() > expected.size()) {
        throw ConfigError(filename + ": unexpected extra column '" +
                          t.header[expected.size()] + "'");
    }
}

inline long long csv_int(const std::string& s, const std::string& what) {
    long long v = 0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
        throw ConfigError(what + ": expected an integer, got '" + s + "'");
    }
    return v;
}

inline double csv_real(const std::string& s, const std::string& what) {
    double v = 0.0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
        throw ConfigError(what + ": expected a number, got '" + s + "'");
    }
    return v;
}

// ---- files ---------------------------------------------------------------

inline std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open '" + path + "' for reading");
    std::ostringstream os;
    os << in.rdbuf();
    if (in.bad()) throw StateError("read failed on '" + path + "'");
    return os.str();
}

inline void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw StateError("cannot open '" + path + "' for writing");
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    out.flush();
    if (!out) throw StateError("write failed on '" + path + "'");
}

}  // namespace noisesearch
