#pragma once

#include "trtm/temporal_risk.hpp"

#include <array>
#include <cstddef>
#include <set>
#include <span>
#include <string>
#include <string_view>

namespace trtm {

/// Central-tendency operators for collapsing class risks into a test score.
/// Min, Max, Sum and StdDev are intentionally absent.
enum class AggregationOp { Avg, GMean, HMean, Median };

inline constexpr std::array kAllAggregationOps{
    AggregationOp::Avg, AggregationOp::GMean, AggregationOp::HMean, AggregationOp::Median};

struct TestScore {
    std::string test_id;
    double score = 0.0;
    std::size_t dep_count = 0;
    std::size_t nonzero_dep_count = 0;

    bool operator==(const TestScore&) const = default;
};

/// Aggregates strictly positive values. The input is sorted internally, so the
/// result does not depend on its order. Throws std::invalid_argument when
/// `values` is empty or holds a value <= 0 (or non-finite).
double aggregate(std::span<const double> values, AggregationOp op);

/// Median with the even-n rule (mean of the middle pair) over an unsorted copy.
/// Shared by the evaluation statistics. Throws on empty input.
double median(std::span<const double> values);

/// Scores one test from the risks of its dependency classes. Classes missing
/// from `risks` or with zero risk are left out of the aggregate; a test with
/// nothing left scores 0.
TestScore score_test(const std::string& test_id, const std::set<std::string>& deps,
                     const RiskTable& risks, AggregationOp op);

std::string to_string(AggregationOp op);
AggregationOp parse_aggregation(std::string_view text);

} // namespace trtm
