// Command-line front end: config-driven experiment sweeps, bench generation,
// threshold calibration, config validation, and SVG plots over the CSVs.
// Exit codes: 0 success, 1 configuration/validation error, 2 runtime error.

#include <algorithm>
#include <charconv>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "noisesearch/config.hpp"
#include "noisesearch/csvio.hpp"
#include "noisesearch/harness.hpp"
#include "noisesearch/svgplot.hpp"
#include "noisesearch/version.hpp"

namespace {

using namespace noisesearch;

std::string resolve_relative(const std::string& anchor_file, const std::string& path) {
    std::filesystem::path p(path);
    if (p.is_absolute()) return path;
    return (std::filesystem::path(anchor_file).parent_path() / p).string();
}

ExperimentConfig load_config(const std::string& config_path,
                             const std::vector<std::string>& overrides) {
    ParsedConfig parsed = parse_config_text(read_file(config_path));
    apply_overrides(parsed, overrides);
    return config_from_parsed(parsed);
}

Bench load_bench(const ExperimentConfig& cfg, const std::string& config_path) {
    if (cfg.bench_file.empty()) return make_bench(cfg.bench_gen);
    Bench bench = bench_from_string(read_file(resolve_relative(config_path, cfg.bench_file)));
    validate_bench(bench);
    return bench;
}

void apply_thread_env(ExperimentConfig& cfg) {
    const char* env = std::getenv("NOISESEARCH_THREADS");
    if (!env) return;
    const std::string s(env);
    int v = 0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size() || v < 1) {
        throw ConfigError("NOISESEARCH_THREADS must be a positive integer, got '" + s + "'");
    }
    cfg.parallelism = v;
}

void cmd_run(const std::string& config_path, const std::string& out_dir,
             const std::vector<std::string>& overrides) {
    ExperimentConfig cfg = load_config(config_path, overrides);
    apply_thread_env(cfg);
    const Bench bench = load_bench(cfg, config_path);
    const std::vector<CalibratedDelta> calibrated =
        resolve_auto_deltas(cfg, bench, &std::cerr);
    const ExperimentResult result = run_experiment(cfg, bench, calibrated);

    std::filesystem::create_directories(out_dir);
    const std::filesystem::path out(out_dir);
    write_file((out / "runs.csv").string(), runs_csv(result.records));
    write_file((out / "summary.csv").string(), summary_csv(summarize(result.records)));
    write_file((out / "curves.csv").string(), curves_csv(result.records));
    write_file((out / "bench.txt").string(), bench_to_string(bench));
    write_file((out / "manifest.txt").string(),
               manifest_text(cfg, bench, calibrated, result.records.size(),
                             result.failures.size()));

    for (const auto& f : result.failures) {
        std::cerr << "cell failed: " << f.strategy << "/" << f.verifier << " N=" << f.budget
                  << " prompt=" << f.prompt_id << " seed=" << f.seed << ": " << f.message
                  << "\n";
    }
    std::cout << "wrote " << result.records.size() << " records ("
              << result.failures.size() << " failed cells) to " << out_dir << "\n";
    if (!result.failures.empty()) {
        throw StateError(std::to_string(result.failures.size()) + " cells failed");
    }
}

void cmd_validate(const std::string& config_path) {
    const ExperimentConfig cfg = load_config(config_path, {});
    const Bench bench = load_bench(cfg, config_path);
    std::cout << "config ok: " << cfg.strategies.size() << " strategies, "
              << cfg.verifiers.size() << " verifiers, " << cfg.budgets.size()
              << " budgets, " << bench.prompts.size() << " prompts\n";
}

void cmd_bench_gen(const std::string& config_path, const std::string& out_path,
                   bool seed_given, std::uint64_t seed) {
    ExperimentConfig cfg = load_config(config_path, {});
    if (!cfg.bench_file.empty()) {
        throw ConfigError("config pins a bench file; bench-gen needs [bench] generation keys");
    }
    if (seed_given) cfg.bench_gen.seed = seed;
    const Bench bench = make_bench(cfg.bench_gen);
    write_file(out_path, bench_to_string(bench));
    std::cout << "wrote bench with " << bench.prompts.size() << " prompts to " << out_path
              << "\n";
}

void cmd_calibrate(const std::string& config_path, const std::string& verifier_name,
                   double percentile, int pilot_seeds) {
    const ExperimentConfig cfg = load_config(config_path, {});
    const VerifierEntry* verifier = nullptr;
    for (const auto& v : cfg.verifiers) {
        if (v.name == verifier_name) {
            verifier = &v;
            break;
        }
    }
    if (!verifier) throw ConfigError("unknown verifier '" + verifier_name + "'");
    const Bench bench = load_bench(cfg, config_path);
    const TimeGrid grid = cfg.make_grid();
    const double delta0 =
        calibrate_delta(bench, verifier->spec, cfg.interpolant, grid, SdeChurn{cfg.gamma},
                        pilot_seeds, percentile, &std::cerr);
    std::cout << "calibrated delta0 = " << detail::fmt_exact(delta0) << " (verifier '"
              << verifier_name << "', percentile " << detail::fmt_exact(percentile)
              << ", pilot_seeds " << pilot_seeds << ", prompts " << bench.prompts.size()
              << ", steps " << grid.steps() << ")\n";
    std::cout << "\n[strategy.vt]\nkind = verifier_threshold\ndelta0 = "
              << detail::fmt_exact(delta0) << "\nref_budget = "
              << (cfg.budgets.empty() ? 40 : cfg.budgets.front()) << "\n";
}

std::vector<int> parse_per_step(const std::string& joined, const std::string& what) {
    std::vector<int> out;
    std::size_t pos = 0;
    for (;;) {
        const std::size_t c = joined.find(';', pos);
        const std::string item =
            joined.substr(pos, c == std::string::npos ? std::string::npos : c - pos);
        out.push_back(static_cast<int>(csv_int(item, what)));
        if (c == std::string::npos) return out;
        pos = c + 1;
    }
}

struct SeriesOrder {
    std::vector<std::string> labels;
    std::vector<std::size_t> index_of_row;  // row -> series index

    std::size_t intern(const std::string& label) {
        for (std::size_t i = 0; i < labels.size(); ++i) {
            if (labels[i] == label) return i;
        }
        labels.push_back(label);
        return labels.size() - 1;
    }
};

void cmd_plot(const std::string& in_dir, const std::string& figure,
              const std::string& out_path) {
    const std::filesystem::path in(in_dir);
    if (figure == "dumping") {
        const std::string name = (in / "runs.csv").string();
        const CsvTable t = read_csv(read_file(name), "runs.csv");
        require_schema(t, kRunsHeader, "runs.csv");
        if (t.rows.empty()) throw ConfigError("runs.csv: no rows");
        SeriesOrder order;
        std::vector<std::vector<double>> sums;
        std::vector<std::int64_t> counts;
        for (const auto& row : t.rows) {
            const std::string label = row[0] + "/" + row[1] + " N=" + row[2];
            const std::size_t si = order.intern(label);
            const std::vector<int> per_step = parse_per_step(row[8], "runs.csv per_step_nfe");
            if (si == sums.size()) {
                sums.emplace_back(per_step.size() + 1, 0.0);
                counts.push_back(0);
            }
            if (sums[si].size() != per_step.size() + 1) {
                throw ConfigError("runs.csv: mixed per_step_nfe lengths within one series");
            }
            for (std::size_t i = 0; i < per_step.size(); ++i) {
                sums[si][i + 1] += static_cast<double>(per_step[i]);
            }
            counts[si] += 1;
        }
        std::vector<PlotSeries> series;
        std::vector<std::string> slot_labels;
        for (std::size_t si = 0; si < order.labels.size(); ++si) {
            PlotSeries s;
            s.label = order.labels[si];
            for (double v : sums[si]) s.values.push_back(v / static_cast<double>(counts[si]));
            if (slot_labels.empty()) {
                for (std::size_t k = 0; k < sums[si].size(); ++k) {
                    slot_labels.push_back(std::to_string(k));
                }
            }
            series.push_back(std::move(s));
        }
        write_file(out_path, bar_chart_svg("Mean NFEs per denoising step", "step",
                                           "mean NFEs", slot_labels, series));
    } else if (figure == "score_curve") {
        const CsvTable t = read_csv(read_file((in / "curves.csv").string()), "curves.csv");
        require_schema(t, kCurvesHeader, "curves.csv");
        if (t.rows.empty()) throw ConfigError("curves.csv: no rows");
        SeriesOrder order;
        std::vector<PlotSeries> series;
        for (const auto& row : t.rows) {
            if (csv_int(row[5], "curves.csv n") == 0) continue;
            const std::string label = row[0] + "/" + row[1] + " N=" + row[2];
            const std::size_t si = order.intern(label);
            if (si == series.size()) {
                series.emplace_back();
                series.back().label = label;
            }
            series[si].points.emplace_back(csv_real(row[3], "curves.csv step"),
                                           csv_real(row[4], "curves.csv mean"));
        }
        write_file(out_path, line_chart_svg("Mean accepted verifier score per step", "step",
                                            "verifier score", series));
    } else if (figure == "scaling") {
        const CsvTable t = read_csv(read_file((in / "summary.csv").string()), "summary.csv");
        require_schema(t, kSummaryHeader, "summary.csv");
        if (t.rows.empty()) throw ConfigError("summary.csv: no rows");
        SeriesOrder order;
        std::vector<PlotSeries> series;
        for (const auto& row : t.rows) {
            const std::string label = row[0] + "/" + row[1];
            const std::size_t si = order.intern(label);
            if (si == series.size()) {
                series.emplace_back();
                series.back().label = label;
            }
            series[si].points.emplace_back(csv_real(row[13], "summary.csv mean_cost"),
                                           csv_real(row[4], "summary.csv success_rate"));
        }
        for (auto& s : series) {
            std::sort(s.points.begin(), s.points.end());
        }
        write_file(out_path, line_chart_svg("Success rate vs compute cost", "mean cost",
                                            "success rate", series));
    } else {
        throw ConfigError("unknown figure '" + figure + "'");
    }
    std::cout << "wrote " << figure << " plot to " << out_path << "\n";
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"search-strategy experiments over an analytic flow-matching generator"};
    app.require_subcommand(1);
    app.set_version_flag("--version", std::string(kToolName) + " " + kToolVersion);

    std::string config_path;
    std::string out_dir;
    std::string out_path;
    std::string in_dir;
    std::string figure;
    std::string verifier_name;
    std::vector<std::string> overrides;
    std::uint64_t gen_seed = 0;
    double percentile = 40.0;
    int pilot_seeds = 20;

    CLI::App* run = app.add_subcommand("run", "run the configured experiment sweep");
    run->alias("sweep");
    run->add_option("config", config_path, "experiment config file")->required();
    run->add_option("-o,--out", out_dir, "output directory")->required();
    run->add_option("--set", overrides, "override a config value (section.key=value)");

    CLI::App* validate = app.add_subcommand("validate", "check a config without running");
    validate->add_option("config", config_path, "experiment config file")->required();

    CLI::App* bench_gen = app.add_subcommand("bench-gen", "generate and pin a bench file");
    bench_gen->add_option("config", config_path, "experiment config file")->required();
    bench_gen->add_option("-o,--out", out_path, "bench file to write")->required();
    CLI::Option* seed_opt =
        bench_gen->add_option("--seed", gen_seed, "override the bench generation seed");

    CLI::App* calibrate =
        app.add_subcommand("calibrate", "calibrate a verifier-threshold margin");
    calibrate->add_option("config", config_path, "experiment config file")->required();
    calibrate->add_option("verifier", verifier_name, "verifier name from the config")
        ->required();
    calibrate->add_option("--percentile", percentile, "increment percentile to use");
    calibrate->add_option("--pilot-seeds", pilot_seeds, "number of pilot seeds");

    CLI::App* plot = app.add_subcommand("plot", "render an SVG figure from run outputs");
    plot->add_option("in_dir", in_dir, "directory holding the run CSVs")->required();
    plot->add_option("--figure", figure, "which figure to render")
        ->required()
        ->check(CLI::IsMember({"dumping", "score_curve", "scaling"}));
    plot->add_option("-o,--out", out_path, "SVG file to write")->required();

    try {
        app.parse(argc, argv);
        if (run->parsed()) {
            cmd_run(config_path, out_dir, overrides);
        } else if (validate->parsed()) {
            cmd_validate(config_path);
        } else if (bench_gen->parsed()) {
            cmd_bench_gen(config_path, out_path, seed_opt->count() > 0, gen_seed);
        } else if (calibrate->parsed()) {
            cmd_calibrate(config_path, verifier_name, percentile, pilot_seeds);
        } else if (plot->parsed()) {
            cmd_plot(in_dir, figure, out_path);
        }
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
