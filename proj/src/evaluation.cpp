#include "trtm/evaluation.hpp"

#include "trtm/errors.hpp"
#include "trtm/text_format.hpp"

#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <functional>
#include <mutex>
#include <istream>
#include <map>
#include <ostream>
#include <stdexcept>
#include <thread>

namespace trtm {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

// Runs fn(0..n-1) on up to `jobs` threads. The first exception is rethrown.
void parallel_for(std::size_t n, unsigned jobs, const std::function<void(std::size_t)>& fn) {
    jobs = std::max(1u, std::min<unsigned>(jobs, static_cast<unsigned>(std::max<std::size_t>(n, 1))));
    if (jobs == 1) {
        for (std::size_t i = 0; i < n; ++i)
            fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    std::vector<std::thread> workers;
    for (unsigned w = 0; w < jobs; ++w) {
        workers.emplace_back([&] {
            for (std::size_t i = next++; i < n; i = next++) {
                try {
                    fn(i);
                } catch (...) {
                    std::lock_guard lock(error_mutex);
                    if (!error)
                        error = std::current_exception();
                }
            }
        });
    }
    for (auto& t : workers)
        t.join();
    if (error)
        std::rethrow_exception(error);
}

std::set<std::string> as_set(const std::vector<std::string>& ids) {
    return {ids.begin(), ids.end()};
}

VersionOutcome make_outcome(const VersionLabel& label, const MinimizationResult& result, double wall) {
    VersionOutcome o;
    o.version_id = label.version_id;
    o.accuracy = accuracy(as_set(result.selected), label);
    o.detected = o.accuracy > 0.0;
    o.wall_time = wall;
    o.config_fingerprint = result.config_fingerprint;
    return o;
}

nlohmann::ordered_json descriptive_json(const Descriptive& d) {
    return {{"min", d.min}, {"q1", d.q1}, {"mean", d.mean}, {"median", d.median}, {"q3", d.q3}, {"max", d.max}};
}

nlohmann::ordered_json number_or_text(double v) {
    if (std::isfinite(v))
        return v;
    if (std::isnan(v))
        return nullptr;
    return format_double(v);
}

} // namespace

std::vector<VersionLabel> parse_version_labels(std::string_view json_text) {
    using nlohmann::json;
    json doc;
    try {
        doc = json::parse(json_text);
    } catch (const json::parse_error& e) {
        throw LabelError(std::string("malformed label file: ") + e.what());
    }
    auto one = [](const json& obj) {
        if (!obj.is_object())
            throw LabelError("version label must be a JSON object");
        VersionLabel label;
        auto id = obj.find("version_id");
        if (id == obj.end() || !id->is_string() || id->get<std::string>().empty())
            throw LabelError("version label without a version_id");
        label.version_id = id->get<std::string>();
        auto ts = obj.find("as_of");
        if (ts == obj.end() || !ts->is_number_integer() || ts->get<std::int64_t>() <= 0)
            throw LabelError("version " + label.version_id + ": as_of must be a positive integer");
        label.as_of = ts->get<std::int64_t>();
        auto tests = obj.find("fault_revealing_tests");
        if (tests == obj.end() || !tests->is_array())
            throw LabelError("version " + label.version_id + ": missing fault_revealing_tests");
        for (const auto& t : *tests) {
            if (!t.is_string())
                throw LabelError("version " + label.version_id + ": test ids must be strings");
            label.fault_revealing_tests.insert(t.get<std::string>());
        }
        if (label.fault_revealing_tests.empty())
            throw LabelError("version " + label.version_id + " has no fault-revealing tests");
        return label;
    };

    std::vector<VersionLabel> labels;
    if (doc.is_array()) {
        for (const auto& obj : doc)
            labels.push_back(one(obj));
    } else {
        labels.push_back(one(doc));
    }
    return labels;
}

std::string config_fingerprint(const RunConfig& cfg) {
    return "metric=" + to_string(cfg.metric) + ";horizon=" + to_string(cfg.horizon) +
           ";aggregate=" + to_string(cfg.op) + ";budget=" + format_double(cfg.budget.fraction());
}

std::string config_fingerprint(const RunConfig& cfg, std::int64_t as_of) {
    return config_fingerprint(cfg) + ";as_of=" + std::to_string(as_of);
}

std::vector<TestScore> score_tests(const DependencyMap& deps, const RiskTable& risks, AggregationOp op) {
    std::vector<TestScore> scores;
    scores.reserve(deps.size());
    for (const auto& [test, classes] : deps)
        scores.push_back(score_test(test, classes, risks, op));
    return scores;
}

MinimizationResult minimize_suite(const HistoryMap& histories, const DependencyMap& deps,
                                  const RunConfig& cfg, std::int64_t as_of) {
    const RiskTable risks = risk_table(histories, RiskConfig{cfg.metric, cfg.horizon, as_of});
    return select(score_tests(deps, risks, cfg.op), cfg.budget, config_fingerprint(cfg, as_of));
}

double accuracy(const std::set<std::string>& selected, const VersionLabel& label) {
    const auto& faults = label.fault_revealing_tests;
    if (faults.empty())
        throw LabelError("version " + label.version_id + " has no fault-revealing tests");
    std::size_t kept = 0;
    for (const auto& t : faults)
        kept += selected.contains(t) ? 1 : 0;
    return static_cast<double>(kept) / static_cast<double>(faults.size());
}

double fdr(const std::vector<VersionOutcome>& outcomes) {
    if (outcomes.empty())
        throw std::invalid_argument("FDR of zero versions is undefined");
    std::size_t hits = 0;
    for (const auto& o : outcomes)
        hits += o.detected ? 1 : 0;
    return static_cast<double>(hits) / static_cast<double>(outcomes.size());
}

VersionOutcome run_version(const VersionInputs& inputs, const RunConfig& cfg) {
    const auto start = Clock::now();
    const ProjectInputs& p = *inputs.project;
    const DependencyMap deps = build_dependency_map(p.graph, p.entries, p.test_filter);
    const MinimizationResult result = minimize_suite(p.histories, deps, cfg, inputs.label.as_of);
    return make_outcome(inputs.label, result, p.ingest_seconds + seconds_since(start));
}

std::vector<VersionOutcome> evaluate(const std::vector<VersionInputs>& dataset, const RunConfig& cfg,
                                     unsigned jobs) {
    std::vector<VersionOutcome> out(dataset.size());
    parallel_for(dataset.size(), jobs, [&](std::size_t i) { out[i] = run_version(dataset[i], cfg); });
    return out;
}

Descriptive describe(std::span<const double> values) {
    if (values.empty())
        throw std::invalid_argument("descriptive statistics of an empty sample");
    std::vector<double> v(values.begin(), values.end());
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    const std::size_t half = n / 2;

    Descriptive d;
    d.min = v.front();
    d.max = v.back();
    double sum = 0.0;
    for (double x : v)
        sum += x;
    d.mean = sum / static_cast<double>(n);
    d.median = median(v);
    if (half == 0) {
        d.q1 = d.q3 = v.front();
    } else {
        d.q1 = median(std::span<const double>(v).first(half));
        d.q3 = median(std::span<const double>(v).last(half));
    }
    return d;
}

SweepGrid SweepGrid::canonical(bool include_static) {
    SweepGrid g;
    g.metrics = {ChangeMetric::Frequency, ChangeMetric::Extent};
    for (int k = 0; k <= 9; ++k)
        g.horizons.push_back(Horizon::half_life(std::ldexp(1.0, k)));
    if (include_static)
        g.horizons.push_back(Horizon::static_mode());
    g.operators.assign(kAllAggregationOps.begin(), kAllAggregationOps.end());
    g.budgets = {0.25, 0.5, 0.75};
    return g;
}

SweepReport run_sweep(const std::vector<VersionInputs>& dataset, const SweepGrid& grid, unsigned jobs) {
    std::vector<Budget> budgets;
    for (double b : grid.budgets)
        budgets.emplace_back(b);
    const std::size_t n_ops = grid.operators.size();
    const std::size_t n_budgets = budgets.size();
    const std::size_t n_cells = grid.cells_per_budget() * n_budgets;
    auto cell_index = [&](std::size_t m, std::size_t h, std::size_t o, std::size_t b) {
        return ((m * grid.horizons.size() + h) * n_ops + o) * n_budgets + b;
    };

    // per_version[v][cell]
    std::vector<std::vector<VersionOutcome>> per_version(dataset.size());
    parallel_for(dataset.size(), jobs, [&](std::size_t v) {
        const VersionInputs& in = dataset[v];
        const ProjectInputs& p = *in.project;
        auto& outcomes = per_version[v];
        outcomes.resize(n_cells);

        auto t = Clock::now();
        const DependencyMap deps = build_dependency_map(p.graph, p.entries, p.test_filter);
        const double deps_time = p.ingest_seconds + seconds_since(t);

        for (std::size_t m = 0; m < grid.metrics.size(); ++m) {
            for (std::size_t h = 0; h < grid.horizons.size(); ++h) {
                t = Clock::now();
                const RiskTable risks =
                    risk_table(p.histories, RiskConfig{grid.metrics[m], grid.horizons[h], in.label.as_of});
                const double risk_time = seconds_since(t);
                for (std::size_t o = 0; o < n_ops; ++o) {
                    t = Clock::now();
                    const auto scores = score_tests(deps, risks, grid.operators[o]);
                    const double score_time = seconds_since(t);
                    for (std::size_t b = 0; b < n_budgets; ++b) {
                        t = Clock::now();
                        const RunConfig cfg{grid.metrics[m], grid.horizons[h], grid.operators[o], budgets[b]};
                        const auto result = select(scores, budgets[b], config_fingerprint(cfg, in.label.as_of));
                        const double wall = deps_time + risk_time + score_time + seconds_since(t);
                        outcomes[cell_index(m, h, o, b)] = make_outcome(in.label, result, wall);
                    }
                }
            }
        }
    });

    SweepReport report;
    for (std::size_t m = 0; m < grid.metrics.size(); ++m)
        for (std::size_t h = 0; h < grid.horizons.size(); ++h)
            for (std::size_t o = 0; o < n_ops; ++o)
                for (std::size_t b = 0; b < n_budgets; ++b) {
                    SweepCell cell{grid.metrics[m], grid.horizons[h], grid.operators[o], grid.budgets[b],
                                   dataset.size(), 0.0, 0.0, Descriptive{}, 0.0};
                    if (!dataset.empty()) {
                        std::vector<VersionOutcome> column;
                        std::vector<double> acc;
                        double time = 0.0;
                        for (const auto& per : per_version) {
                            column.push_back(per[cell_index(m, h, o, b)]);
                            acc.push_back(column.back().accuracy);
                            time += column.back().wall_time;
                        }
                        cell.accuracy = describe(acc);
                        cell.mean_accuracy = cell.accuracy.mean;
                        cell.fdr = fdr(column);
                        cell.mean_time_s = time / static_cast<double>(column.size());
                    }
                    report.cells.push_back(cell);
                }
    return report;
}

void write_sweep_csv(std::ostream& out, const SweepReport& report) {
    out << "metric,horizon_days,operator,budget,mean_accuracy,fdr,min_acc,q1_acc,median_acc,q3_acc,max_acc,"
           "mean_time_s\n";
    for (const auto& c : report.cells) {
        out << to_string(c.metric) << ',' << to_string(c.horizon) << ',' << to_string(c.op) << ','
            << format_double(c.budget) << ',' << format_double(c.mean_accuracy) << ',' << format_double(c.fdr)
            << ',' << format_double(c.accuracy.min) << ',' << format_double(c.accuracy.q1) << ','
            << format_double(c.accuracy.median) << ',' << format_double(c.accuracy.q3) << ','
            << format_double(c.accuracy.max) << ',' << format_double(c.mean_time_s) << '\n';
    }
}

void write_heatmap_csv(std::ostream& out, const SweepReport& report) {
    // Preserve first-appearance order of each axis.
    std::vector<ChangeMetric> metrics;
    std::vector<Horizon> horizons;
    std::vector<AggregationOp> ops;
    std::vector<double> budgets;
    auto note = [](auto& list, const auto& v) {
        if (std::find(list.begin(), list.end(), v) == list.end())
            list.push_back(v);
    };
    for (const auto& c : report.cells) {
        note(metrics, c.metric);
        note(horizons, c.horizon);
        note(ops, c.op);
        note(budgets, c.budget);
    }

    out << "metric,budget,value,horizon_days";
    for (auto op : ops)
        out << ',' << to_string(op);
    out << '\n';
    for (auto m : metrics)
        for (double b : budgets)
            for (const char* value : {"accuracy", "fdr"})
                for (const auto& h : horizons) {
                    out << to_string(m) << ',' << format_double(b) << ',' << value << ',' << to_string(h);
                    for (auto op : ops) {
                        auto it = std::find_if(report.cells.begin(), report.cells.end(), [&](const SweepCell& c) {
                            return c.metric == m && c.budget == b && c.horizon == h && c.op == op;
                        });
                        out << ',';
                        if (it != report.cells.end())
                            out << format_double(std::string_view(value) == "fdr" ? it->fdr : it->mean_accuracy);
                    }
                    out << '\n';
                }
}

void write_outcomes_csv(std::ostream& out, const std::vector<VersionOutcome>& outcomes) {
    out << "version_id,accuracy,detected,wall_time_s\n";
    for (const auto& o : outcomes)
        out << o.version_id << ',' << format_double(o.accuracy) << ',' << (o.detected ? 1 : 0) << ','
            << format_double(o.wall_time) << '\n';
}

std::vector<VersionOutcome> parse_outcomes_csv(std::istream& in) {
    std::vector<VersionOutcome> outcomes;
    std::string line;
    std::size_t line_no = 0;
    bool header_seen = false;
    while (std::getline(in, line)) {
        ++line_no;
        const auto text = trim(line);
        if (text.empty())
            continue;
        if (!header_seen) {
            if (text != "version_id,accuracy,detected,wall_time_s")
                throw ParseError("unexpected outcomes header", line_no);
            header_seen = true;
            continue;
        }
        const auto fields = split(text, ',');
        if (fields.size() != 4)
            throw ParseError("expected 4 fields", line_no);
        VersionOutcome o;
        o.version_id = fields[0];
        const auto acc = parse_double(fields[1]);
        const auto time = parse_double(fields[3]);
        if (o.version_id.empty() || !acc || *acc < 0.0 || *acc > 1.0 || !time)
            throw ParseError("malformed outcome row", line_no);
        if (fields[2] != "0" && fields[2] != "1")
            throw ParseError("detected must be 0 or 1", line_no);
        o.accuracy = *acc;
        o.detected = fields[2] == "1";
        o.wall_time = *time;
        outcomes.push_back(std::move(o));
    }
    if (!header_seen)
        throw ParseError("empty outcomes file", 0);
    return outcomes;
}

void write_evaluation_summary(std::ostream& out, const std::vector<VersionOutcome>& outcomes,
                              const std::string& fingerprint) {
    std::vector<double> acc, flags;
    double time = 0.0;
    for (const auto& o : outcomes) {
        acc.push_back(o.accuracy);
        flags.push_back(o.detected ? 1.0 : 0.0);
        time += o.wall_time;
    }
    nlohmann::ordered_json doc;
    doc["config"] = fingerprint;
    doc["versions"] = outcomes.size();
    if (!outcomes.empty()) {
        const Descriptive a = describe(acc);
        doc["mean_accuracy"] = a.mean;
        doc["fdr"] = fdr(outcomes);
        doc["accuracy"] = descriptive_json(a);
        doc["detection"] = descriptive_json(describe(flags));
        doc["mean_wall_time_s"] = time / static_cast<double>(outcomes.size());
    }
    out << doc.dump(2) << '\n';
}

Comparison compare_outcomes(const std::vector<VersionOutcome>& a, const std::vector<VersionOutcome>& b,
                            std::size_t bonferroni_m) {
    std::map<std::string, const VersionOutcome*> left, right;
    for (const auto& o : a)
        left.emplace(o.version_id, &o);
    for (const auto& o : b)
        right.emplace(o.version_id, &o);

    std::vector<std::string> missing;
    for (const auto& [id, _] : left)
        if (!right.contains(id))
            missing.push_back(id + " (only in first)");
    for (const auto& [id, _] : right)
        if (!left.contains(id))
            missing.push_back(id + " (only in second)");
    if (!missing.empty() || left.size() != a.size() || right.size() != b.size()) {
        std::string msg = "outcome files do not cover the same versions:";
        for (const auto& m : missing)
            msg += " " + m;
        if (left.size() != a.size() || right.size() != b.size())
            msg += " (duplicate version ids)";
        throw AlignmentError(msg);
    }
    if (left.empty())
        throw AlignmentError("no versions to compare");

    Comparison cmp;
    cmp.versions = left.size();
    cmp.bonferroni_m = bonferroni_m;
    stats::PairedSample paired;
    std::vector<double> acc_a, acc_b;
    for (const auto& [id, oa] : left) {
        const VersionOutcome* ob = right.at(id);
        paired.pairs.emplace_back(oa->accuracy, ob->accuracy);
        acc_a.push_back(oa->accuracy);
        acc_b.push_back(ob->accuracy);
        (oa->detected ? cmp.detection_table.a : cmp.detection_table.b) += 1;
        (ob->detected ? cmp.detection_table.c : cmp.detection_table.d) += 1;
    }

    try {
        cmp.wilcoxon = stats::wilcoxon_signed_rank(paired);
        cmp.wilcoxon_status = "ok";
    } catch (const std::domain_error& e) {
        cmp.wilcoxon_status = e.what();
    }
    cmp.fisher = stats::fisher_exact_2x2(cmp.detection_table);
    cmp.cliffs_delta = stats::cliffs_delta(acc_a, acc_b);

    std::vector<double> raw{cmp.fisher.p_two_sided};
    if (cmp.wilcoxon)
        raw.push_back(cmp.wilcoxon->p_two_sided);
    const auto adjusted = stats::bonferroni(raw, bonferroni_m);
    cmp.fisher_p_adjusted = adjusted[0];
    if (cmp.wilcoxon)
        cmp.wilcoxon_p_adjusted = adjusted[1];
    return cmp;
}

void write_comparison_json(std::ostream& out, const Comparison& cmp) {
    nlohmann::ordered_json doc;
    doc["versions"] = cmp.versions;
    doc["bonferroni_m"] = cmp.bonferroni_m;

    nlohmann::ordered_json w;
    w["status"] = cmp.wilcoxon_status;
    if (cmp.wilcoxon) {
        w["statistic"] = cmp.wilcoxon->statistic;
        w["w_plus"] = cmp.wilcoxon->w_plus;
        w["w_minus"] = cmp.wilcoxon->w_minus;
        w["n_effective"] = cmp.wilcoxon->n_effective;
        w["method"] = cmp.wilcoxon->exact ? "exact" : "normal";
        w["p_two_sided"] = cmp.wilcoxon->p_two_sided;
        w["p_adjusted"] = *cmp.wilcoxon_p_adjusted;
    }
    doc["wilcoxon_accuracy"] = std::move(w);

    const auto& t = cmp.detection_table;
    nlohmann::ordered_json f;
    f["table"] = {{t.a, t.b}, {t.c, t.d}};
    f["p_two_sided"] = cmp.fisher.p_two_sided;
    f["odds_ratio"] = number_or_text(cmp.fisher.odds_ratio);
    f["p_adjusted"] = cmp.fisher_p_adjusted;
    doc["fisher_detection"] = std::move(f);

    doc["cliffs_delta_accuracy"] = cmp.cliffs_delta;
    out << doc.dump(2) << '\n';
}

} // namespace trtm
