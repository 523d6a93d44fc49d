#pragma once

#include "trtm/change_history.hpp"
#include "trtm/dependency_graph.hpp"
#include "trtm/minimizer.hpp"
#include "trtm/risk_aggregation.hpp"
#include "trtm/stats.hpp"
#include "trtm/temporal_risk.hpp"

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace trtm {

struct VersionLabel {
    std::string version_id;
    std::set<std::string> fault_revealing_tests;
    std::int64_t as_of = 0;
};

/// Accepts one label object or an array of them. Throws LabelError on missing
/// fields or an empty fault-revealing set.
std::vector<VersionLabel> parse_version_labels(std::string_view json_text);

struct VersionOutcome {
    std::string version_id;
    double accuracy = 0.0;
    bool detected = false;
    double wall_time = 0.0;  // seconds
    std::string config_fingerprint;
};

/// Everything about one project that does not depend on the configuration.
struct ProjectInputs {
    std::string project_id;
    HistoryMap histories;
    CallGraph graph;
    std::vector<EntryPoint> entries;
    std::set<std::string> test_filter;
    double ingest_seconds = 0.0;  // time spent parsing and consolidating inputs
};

struct VersionInputs {
    std::shared_ptr<const ProjectInputs> project;
    VersionLabel label;
};

struct RunConfig {
    ChangeMetric metric = ChangeMetric::Frequency;
    Horizon horizon = Horizon::static_mode();
    AggregationOp op = AggregationOp::GMean;
    Budget budget{0.5};
};

/// `metric=...;horizon=...;aggregate=...;budget=...`, plus `;as_of=...` in the second form.
std::string config_fingerprint(const RunConfig& cfg);
std::string config_fingerprint(const RunConfig& cfg, std::int64_t as_of);

std::vector<TestScore> score_tests(const DependencyMap& deps, const RiskTable& risks, AggregationOp op);

/// risk_table -> score_tests -> select over precomputed dependencies.
MinimizationResult minimize_suite(const HistoryMap& histories, const DependencyMap& deps,
                                  const RunConfig& cfg, std::int64_t as_of);

/// |selected ∩ F| / |F|. Throws LabelError when F is empty.
double accuracy(const std::set<std::string>& selected, const VersionLabel& label);

/// Fraction of outcomes that kept at least one fault-revealing test.
/// Throws std::invalid_argument on an empty sequence.
double fdr(const std::vector<VersionOutcome>& outcomes);

/// Full pipeline for one labelled version. wall_time covers ingestion plus
/// every in-process stage.
VersionOutcome run_version(const VersionInputs& inputs, const RunConfig& cfg);

/// run_version over many versions, `jobs` at a time; results keep input order.
std::vector<VersionOutcome> evaluate(const std::vector<VersionInputs>& dataset, const RunConfig& cfg,
                                     unsigned jobs = 1);

struct Descriptive {
    double min = 0, q1 = 0, mean = 0, median = 0, q3 = 0, max = 0;
};

/// Quartiles are the medians of the lower and upper halves (the middle element
/// of an odd sample belongs to neither). Throws on empty input.
Descriptive describe(std::span<const double> values);

struct SweepGrid {
    std::vector<ChangeMetric> metrics;
    std::vector<Horizon> horizons;
    std::vector<AggregationOp> operators;
    std::vector<double> budgets;

    /// 2 metrics x half-lives 2^0..2^9 days x 4 operators, budgets 25/50/75%.
    static SweepGrid canonical(bool include_static = false);
    std::size_t cells_per_budget() const noexcept {
        return metrics.size() * horizons.size() * operators.size();
    }
};

struct SweepCell {
    ChangeMetric metric;
    Horizon horizon;
    AggregationOp op;
    double budget;
    std::size_t versions = 0;
    double mean_accuracy = 0.0;
    double fdr = 0.0;
    Descriptive accuracy;
    double mean_time_s = 0.0;
};

struct SweepReport {
    std::vector<SweepCell> cells;  // metric, horizon, operator, budget order
};

/// Evaluates every grid cell on every version. Risk tables are computed once
/// per (version, metric, horizon) and dependency maps once per version.
SweepReport run_sweep(const std::vector<VersionInputs>& dataset, const SweepGrid& grid, unsigned jobs = 1);

void write_sweep_csv(std::ostream& out, const SweepReport& report);
/// Horizon rows by operator columns, one block per (metric, budget, value).
void write_heatmap_csv(std::ostream& out, const SweepReport& report);

void write_outcomes_csv(std::ostream& out, const std::vector<VersionOutcome>& outcomes);
/// Reads the CSV written by write_outcomes_csv. Throws ParseError.
std::vector<VersionOutcome> parse_outcomes_csv(std::istream& in);
void write_evaluation_summary(std::ostream& out, const std::vector<VersionOutcome>& outcomes,
                              const std::string& config_fingerprint);

struct Comparison {
    std::size_t versions = 0;
    std::optional<stats::WilcoxonResult> wilcoxon;  // empty when every pair is equal
    std::string wilcoxon_status;                     // "ok" or the reason it was not computed
    stats::Table2x2 detection_table;
    stats::FisherResult fisher;
    double cliffs_delta = 0.0;
    std::size_t bonferroni_m = 1;
    std::optional<double> wilcoxon_p_adjusted;
    double fisher_p_adjusted = 1.0;
};

/// Pairs the outcomes by version id (A minus B). Throws AlignmentError naming
/// the ids present on only one side, and std::invalid_argument when
/// bonferroni_m is smaller than the number of p-values reported (1 or 2).
Comparison compare_outcomes(const std::vector<VersionOutcome>& a, const std::vector<VersionOutcome>& b,
                            std::size_t bonferroni_m);

void write_comparison_json(std::ostream& out, const Comparison& cmp);

} // namespace trtm
