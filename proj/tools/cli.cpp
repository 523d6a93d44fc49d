#include "cli.hpp"

#include "manifest.hpp"

#include "trtm/errors.hpp"
#include "trtm/evaluation.hpp"
#include "trtm/text_format.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

namespace trtm::cli {

namespace fs = std::filesystem;

namespace {

class UsageError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// TRTM_SEED_CHECK=1 re-verifies library invariants on every run.
bool seed_checks_enabled() {
    const char* v = std::getenv("TRTM_SEED_CHECK");
    return v != nullptr && std::string_view(v) == "1";
}

void expect(bool condition, const std::string& what) {
    if (!condition)
        throw std::logic_error("invariant violated: " + what);
}

void check_histories(const HistoryMap& histories) {
    for (const auto& [id, h] : histories) {
        expect(h.class_id == id, "history keyed by its class id");
        for (std::size_t i = 1; i < h.events.size(); ++i)
            expect(event_order_less(h.events[i - 1], h.events[i]), "events of " + id + " strictly ordered");
    }
}

void check_risks(const RiskTable& risks) {
    for (const auto& [id, r] : risks)
        expect(std::isfinite(r.score) && r.score >= 0.0, "risk of " + id + " finite and non-negative");
}

void check_selection(const MinimizationResult& result, const Budget& budget) {
    const std::size_t n = result.selected.size() + result.excluded.size();
    expect(result.selected.size() == budget_count(n, budget), "selected count matches budget");
    if (!result.selected.empty() && !result.excluded.empty()) {
        const auto& s = result.selected.back();
        const auto& e = result.excluded.front();
        const double ss = result.scores.at(s), es = result.scores.at(e);
        expect(ss > es || (ss == es && s < e), "selected tests dominate excluded tests");
    }
}

struct CommonOptions {
    std::vector<std::string> manifests;
    std::string format;
    std::string output;
    unsigned jobs = 1;
};

struct LoadedManifest {
    RunManifest manifest;
    std::shared_ptr<const ProjectInputs> project;
};

LoadedManifest load(const std::string& path, const std::string& format_override, std::ostream& err) {
    LoadedManifest lm{load_manifest(path), nullptr};
    if (!format_override.empty())
        lm.manifest.callgraph_format = parse_callgraph_format(format_override);
    std::vector<std::string> warnings;
    lm.project = load_project(lm.manifest, warnings);
    for (const auto& w : warnings)
        err << "warning: " << w << '\n';
    if (seed_checks_enabled())
        check_histories(lm.project->histories);
    return lm;
}

std::optional<fs::path> output_dir(const std::string& flag, const RunManifest* manifest) {
    if (!flag.empty())
        return fs::path(flag);
    if (manifest && manifest->output_dir)
        return manifest->output_dir;
    return std::nullopt;
}

fs::path require_output_dir(const std::string& flag, const RunManifest* manifest) {
    auto dir = output_dir(flag, manifest);
    if (!dir)
        throw UsageError("no output directory: pass --output or set output_dir in the manifest");
    return *dir;
}

void write_file(const fs::path& dir, const std::string& name, const std::function<void(std::ostream&)>& body) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    const fs::path target = dir / name;
    std::ofstream out(target, std::ios::binary | std::ios::trunc);
    if (!out)
        throw MissingInput("cannot write output file: " + target.string());
    body(out);
    if (!out)
        throw MissingInput("failed writing output file: " + target.string());
}

void emit(const std::optional<fs::path>& dir, const std::string& name, std::ostream& out,
          const std::function<void(std::ostream&)>& body) {
    if (dir)
        write_file(*dir, name, body);
    else
        body(out);
}

std::int64_t resolve_as_of(const std::optional<std::int64_t>& flag, const RunManifest& manifest) {
    if (flag) {
        if (*flag <= 0)
            throw UsageError("--as-of must be a positive Unix timestamp");
        return *flag;
    }
    if (manifest.labels) {
        const auto labels = load_labels(manifest);
        if (labels.size() == 1)
            return labels.front().as_of;
    }
    throw UsageError("--as-of is required unless the manifest labels exactly one version");
}

std::vector<VersionInputs> build_dataset(const std::vector<std::string>& manifests, const std::string& format,
                                         std::ostream& err) {
    std::vector<VersionInputs> dataset;
    for (const auto& path : manifests) {
        auto lm = load(path, format, err);
        for (auto& label : load_labels(lm.manifest))
            dataset.push_back({lm.project, std::move(label)});
    }
    return dataset;
}

template <typename T, typename F>
std::vector<T> parse_each(const std::vector<std::string>& texts, F parse) {
    std::vector<T> out;
    for (const auto& t : texts)
        out.push_back(parse(t));
    return out;
}

void add_common(CLI::App* cmd, CommonOptions& opts, bool many_manifests) {
    if (many_manifests)
        cmd->add_option("--manifest", opts.manifests, "Project manifest (repeatable)")->required();
    else
        cmd->add_option("--manifest", opts.manifests, "Project manifest")->required()->expected(1);
    cmd->add_option("--format", opts.format, "Override the call-graph format (callgraph-text, csv)");
    cmd->add_option("--output", opts.output, "Output directory");
}

struct ConfigOptions {
    std::string metric = "extent";
    std::string horizon = "32";
    std::string aggregate = "gmean";
    double budget = 0.5;
    std::optional<std::int64_t> as_of;

    RunConfig to_config() const {
        return RunConfig{parse_metric(metric), parse_horizon(horizon), parse_aggregation(aggregate), Budget(budget)};
    }
};

void add_config(CLI::App* cmd, ConfigOptions& cfg, bool with_selection, bool with_as_of) {
    cmd->add_option("--metric", cfg.metric, "frequency or extent")->capture_default_str();
    cmd->add_option("--horizon", cfg.horizon, "Half-life in days, or 'static'")->capture_default_str();
    if (with_selection) {
        cmd->add_option("--aggregate", cfg.aggregate, "avg, gmean, hmean or median")->capture_default_str();
        cmd->add_option("--budget", cfg.budget, "Fraction of tests to keep, 0 < b <= 1")->capture_default_str();
    }
    if (with_as_of)
        cmd->add_option("--as-of", cfg.as_of, "Reference time (Unix seconds)");
}

int cmd_ingest(const std::string& numstat, const std::string& output, std::ostream& out, std::ostream& err) {
    std::ifstream in(numstat, std::ios::binary);
    if (!in)
        throw MissingInput("cannot open input file: " + numstat);
    const auto log = parse_git_numstat(in);
    for (const auto& w : log.warnings)
        err << "warning: " << w << '\n';
    emit(output.empty() ? std::nullopt : std::optional<fs::path>(output), "events.jsonl", out,
         [&](std::ostream& os) { write_change_log(os, log.events); });
    return kOk;
}

int cmd_deps(const CommonOptions& opts, std::ostream& out, std::ostream& err) {
    const auto lm = load(opts.manifests.front(), opts.format, err);
    const auto& p = *lm.project;
    const auto deps = build_dependency_map(p.graph, p.entries, p.test_filter);
    emit(output_dir(opts.output, &lm.manifest), "dependencies.json", out,
         [&](std::ostream& os) { write_dependency_map_json(os, deps); });
    return kOk;
}

int cmd_score(const CommonOptions& opts, const ConfigOptions& c, std::ostream& out, std::ostream& err) {
    const auto lm = load(opts.manifests.front(), opts.format, err);
    const RiskConfig cfg{parse_metric(c.metric), parse_horizon(c.horizon), resolve_as_of(c.as_of, lm.manifest)};
    const RiskTable risks = risk_table(lm.project->histories, cfg);
    if (seed_checks_enabled())
        check_risks(risks);
    emit(output_dir(opts.output, &lm.manifest), "risk.csv", out, [&](std::ostream& os) {
        os << "class_id,risk\n";
        for (const auto& [id, r] : risks)
            os << id << ',' << format_double(r.score) << '\n';
    });
    return kOk;
}

int cmd_minimize(const CommonOptions& opts, const ConfigOptions& c, std::ostream&, std::ostream& err) {
    const RunConfig cfg = c.to_config();
    const auto lm = load(opts.manifests.front(), opts.format, err);
    const fs::path dir = require_output_dir(opts.output, &lm.manifest);
    const std::int64_t as_of = resolve_as_of(c.as_of, lm.manifest);
    const auto& p = *lm.project;
    const auto deps = build_dependency_map(p.graph, p.entries, p.test_filter);
    const auto result = minimize_suite(p.histories, deps, cfg, as_of);
    if (seed_checks_enabled())
        check_selection(result, cfg.budget);
    write_file(dir, "selected.txt", [&](std::ostream& os) { write_selected_txt(os, result); });
    write_file(dir, "result.json", [&](std::ostream& os) { write_result_json(os, result); });
    return kOk;
}

int cmd_evaluate(const CommonOptions& opts, const ConfigOptions& c, std::ostream&, std::ostream& err) {
    const RunConfig cfg = c.to_config();
    const fs::path dir = require_output_dir(opts.output, nullptr);
    const auto dataset = build_dataset(opts.manifests, opts.format, err);
    const auto outcomes = evaluate(dataset, cfg, opts.jobs);
    if (seed_checks_enabled()) {
        for (const auto& o : outcomes)
            expect(o.detected == (o.accuracy > 0.0) && o.accuracy >= 0.0 && o.accuracy <= 1.0,
                   "outcome of " + o.version_id + " consistent");
    }
    write_file(dir, "outcomes.csv", [&](std::ostream& os) { write_outcomes_csv(os, outcomes); });
    write_file(dir, "summary.json", [&](std::ostream& os) {
        write_evaluation_summary(os, outcomes, config_fingerprint(cfg));
    });
    return kOk;
}

struct SweepOptions {
    std::vector<std::string> metrics;
    std::vector<std::string> horizons;
    std::vector<std::string> aggregates;
    std::vector<double> budgets;
    bool include_static = false;
};

int cmd_sweep(const CommonOptions& opts, const SweepOptions& s, std::ostream&, std::ostream& err) {
    SweepGrid grid = SweepGrid::canonical(s.include_static);
    if (!s.metrics.empty())
        grid.metrics = parse_each<ChangeMetric>(s.metrics, parse_metric);
    if (!s.horizons.empty())
        grid.horizons = parse_each<Horizon>(s.horizons, parse_horizon);
    if (!s.aggregates.empty())
        grid.operators = parse_each<AggregationOp>(s.aggregates, parse_aggregation);
    if (!s.budgets.empty())
        grid.budgets = s.budgets;
    for (double b : grid.budgets)
        Budget{b};

    const fs::path dir = require_output_dir(opts.output, nullptr);
    const auto dataset = build_dataset(opts.manifests, opts.format, err);
    const auto report = run_sweep(dataset, grid, opts.jobs);
    if (seed_checks_enabled())
        expect(report.cells.size() == grid.cells_per_budget() * grid.budgets.size(), "sweep cell count");
    write_file(dir, "sweep.csv", [&](std::ostream& os) { write_sweep_csv(os, report); });
    write_file(dir, "heatmap.csv", [&](std::ostream& os) { write_heatmap_csv(os, report); });
    return kOk;
}

std::vector<VersionOutcome> read_outcomes(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw MissingInput("cannot open input file: " + path);
    return parse_outcomes_csv(in);
}

int cmd_compare(const std::string& a, const std::string& b, std::size_t m, const std::string& output,
                std::ostream& out) {
    const auto cmp = compare_outcomes(read_outcomes(a), read_outcomes(b), m);
    emit(output.empty() ? std::nullopt : std::optional<fs::path>(output), "comparison.json", out,
         [&](std::ostream& os) { write_comparison_json(os, cmp); });
    return kOk;
}

} // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Time-decayed change-risk test suite minimization", "trtm"};
    app.require_subcommand(1);

    std::string numstat_path, ingest_output;
    auto* ingest = app.add_subcommand("ingest", "Convert `git log --numstat` output to change-event JSONL");
    ingest->add_option("--numstat", numstat_path, "Numstat log file")->required();
    ingest->add_option("--output", ingest_output, "Output directory (default: stdout)");

    CommonOptions deps_opts;
    auto* deps = app.add_subcommand("deps", "Print the test-to-class dependency map");
    add_common(deps, deps_opts, false);

    CommonOptions score_opts;
    ConfigOptions score_cfg;
    auto* score = app.add_subcommand("score", "Write the class risk table as CSV");
    add_common(score, score_opts, false);
    add_config(score, score_cfg, false, true);

    CommonOptions min_opts;
    ConfigOptions min_cfg;
    auto* minimize = app.add_subcommand("minimize", "Select the highest-risk tests under a budget");
    add_common(minimize, min_opts, false);
    add_config(minimize, min_cfg, true, true);

    CommonOptions eval_opts;
    ConfigOptions eval_cfg;
    auto* evaluate_cmd = app.add_subcommand("evaluate", "Per-version Accuracy/FDR for one configuration");
    add_common(evaluate_cmd, eval_opts, true);
    add_config(evaluate_cmd, eval_cfg, true, false);
    evaluate_cmd->add_option("--jobs", eval_opts.jobs, "Parallel versions")->check(CLI::PositiveNumber);

    CommonOptions sweep_opts;
    SweepOptions sweep_grid;
    auto* sweep = app.add_subcommand("sweep", "Evaluate a metric x horizon x operator x budget grid");
    add_common(sweep, sweep_opts, true);
    sweep->add_option("--metric", sweep_grid.metrics, "Metrics (comma separated)")->delimiter(',');
    sweep->add_option("--horizon", sweep_grid.horizons, "Half-lives in days or 'static'")->delimiter(',');
    sweep->add_option("--aggregate", sweep_grid.aggregates, "Operators")->delimiter(',');
    sweep->add_option("--budget", sweep_grid.budgets, "Budgets")->delimiter(',');
    sweep->add_flag("--include-static", sweep_grid.include_static, "Add the static horizon to the default grid");
    sweep->add_option("--jobs", sweep_opts.jobs, "Parallel versions")->check(CLI::PositiveNumber);

    std::string cmp_a, cmp_b, cmp_output;
    std::size_t cmp_m = 1;
    auto* compare = app.add_subcommand("compare", "Paired significance tests between two outcome files");
    compare->add_option("outcomes_a", cmp_a, "outcomes.csv of approach A")->required();
    compare->add_option("outcomes_b", cmp_b, "outcomes.csv of approach B")->required();
    compare->add_option("--bonferroni-m", cmp_m, "Number of comparisons in the family")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    compare->add_option("--output", cmp_output, "Output directory (default: stdout)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kOk : kUsage;
    }

    try {
        if (*ingest)
            return cmd_ingest(numstat_path, ingest_output, out, err);
        if (*deps)
            return cmd_deps(deps_opts, out, err);
        if (*score)
            return cmd_score(score_opts, score_cfg, out, err);
        if (*minimize)
            return cmd_minimize(min_opts, min_cfg, out, err);
        if (*evaluate_cmd)
            return cmd_evaluate(eval_opts, eval_cfg, out, err);
        if (*sweep)
            return cmd_sweep(sweep_opts, sweep_grid, out, err);
        if (*compare)
            return cmd_compare(cmp_a, cmp_b, cmp_m, cmp_output, out);
    } catch (const MissingInput& e) {
        err << "error: " << e.what() << '\n';
        return kMissingInput;
    } catch (const ParseError& e) {
        err << "parse error: " << e.what() << '\n';
        return kParseError;
    } catch (const LabelError& e) {
        err << "label error: " << e.what() << '\n';
        return kLabelError;
    } catch (const AlignmentError& e) {
        err << "alignment error: " << e.what() << '\n';
        return kAlignmentError;
    } catch (const UsageError& e) {
        err << "usage: " << e.what() << '\n';
        return kUsage;
    } catch (const std::invalid_argument& e) {
        err << "usage: " << e.what() << '\n';
        return kUsage;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kUsage;
    }
    return kUsage;
}

} // namespace trtm::cli
