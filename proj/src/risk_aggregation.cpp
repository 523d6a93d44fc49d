#include "trtm/risk_aggregation.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

namespace trtm {

namespace {

double sorted_median(const std::vector<double>& v) {
    const std::size_t n = v.size();
    if (n % 2 == 1)
        return v[n / 2];
    return (v[n / 2 - 1] + v[n / 2]) / 2.0;
}

} // namespace

double median(std::span<const double> values) {
    if (values.empty())
        throw std::invalid_argument("median of an empty sample");
    std::vector<double> v(values.begin(), values.end());
    std::sort(v.begin(), v.end());
    return sorted_median(v);
}

double aggregate(std::span<const double> values, AggregationOp op) {
    if (values.empty())
        throw std::invalid_argument("cannot aggregate an empty set of risks");
    std::vector<double> v(values.begin(), values.end());
    for (double x : v) {
        if (!(x > 0.0) || !std::isfinite(x))
            throw std::invalid_argument("aggregated risks must be positive and finite");
    }
    std::sort(v.begin(), v.end());
    // Accumulate in extended precision and round once, so that equal means of
    // different risk sets compare equal and the id tie-break decides.
    const auto n = static_cast<long double>(v.size());

    switch (op) {
    case AggregationOp::Avg: {
        long double sum = 0.0L;
        for (double x : v)
            sum += x;
        return static_cast<double>(sum / n);
    }
    case AggregationOp::GMean: {
        long double log_sum = 0.0L;
        for (double x : v)
            log_sum += std::log(static_cast<long double>(x));
        return static_cast<double>(std::exp(log_sum / n));
    }
    case AggregationOp::HMean: {
        long double inv_sum = 0.0L;
        for (double x : v)
            inv_sum += 1.0L / x;
        return static_cast<double>(n / inv_sum);
    }
    case AggregationOp::Median:
        return sorted_median(v);
    }
    throw std::invalid_argument("unknown aggregation operator");
}

TestScore score_test(const std::string& test_id, const std::set<std::string>& deps,
                     const RiskTable& risks, AggregationOp op) {
    std::vector<double> values;
    values.reserve(deps.size());
    for (const auto& cls : deps) {
        auto it = risks.find(cls);
        if (it != risks.end() && it->second.score > 0.0)
            values.push_back(it->second.score);
    }
    TestScore ts{test_id, 0.0, deps.size(), values.size()};
    if (!values.empty())
        ts.score = aggregate(values, op);
    return ts;
}

std::string to_string(AggregationOp op) {
    switch (op) {
    case AggregationOp::Avg:
        return "avg";
    case AggregationOp::GMean:
        return "gmean";
    case AggregationOp::HMean:
        return "hmean";
    case AggregationOp::Median:
        return "median";
    }
    return "?";
}

AggregationOp parse_aggregation(std::string_view text) {
    for (auto op : kAllAggregationOps) {
        if (text == to_string(op))
            return op;
    }
    throw std::invalid_argument("unknown aggregation '" + std::string(text) +
                                "' (expected avg, gmean, hmean or median)");
}

} // namespace trtm
