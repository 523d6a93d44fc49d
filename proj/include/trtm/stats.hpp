#pragma once

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

namespace trtm::stats {

struct PairedSample {
    std::vector<std::pair<double, double>> pairs;
};

struct WilcoxonResult {
    double statistic = 0.0;  // min(W+, W-)
    double w_plus = 0.0;
    double w_minus = 0.0;
    double p_two_sided = 1.0;
    std::size_t n_effective = 0;  // nonzero differences
    bool exact = false;
};

/// Below this many nonzero differences the p-value is exact.
inline constexpr std::size_t kWilcoxonExactBelow = 10;

/// Wilcoxon signed-rank test on a - b. Zero differences are dropped and tied
/// |d| receive midranks. Exact null distribution for n_effective < 10,
/// otherwise the normal approximation with tie-corrected variance and a 0.5
/// continuity correction. Throws std::domain_error("degenerate sample") when
/// every difference is zero.
WilcoxonResult wilcoxon_signed_rank(const PairedSample& sample);

/// Exact two-sided p for the given differences regardless of n (zeros dropped,
/// midranks for ties). Counts sign assignments by dynamic programming over
/// doubled ranks.
double wilcoxon_exact_p(std::span<const double> differences);

/// Normal-approximation two-sided p for the given differences.
double wilcoxon_normal_p(std::span<const double> differences);

struct Table2x2 {
    std::int64_t a = 0, b = 0;  // row 1
    std::int64_t c = 0, d = 0;  // row 2
};

struct FisherResult {
    double p_two_sided = 1.0;
    double odds_ratio = 1.0;  // (a*d)/(b*c); +inf when b*c = 0 < a*d, NaN when both are 0
};

/// Two-sided Fisher exact test: sums the hypergeometric probabilities (fixed
/// margins) of every table no more likely than the observed one, with 1e-7
/// relative slack. Throws std::invalid_argument on negative cells or an
/// empty table.
FisherResult fisher_exact_2x2(const Table2x2& table);

/// (#(a_i > b_j) - #(a_i < b_j)) / (|a| |b|). Throws on empty input.
double cliffs_delta(std::span<const double> a, std::span<const double> b);

/// min(1, p * m) elementwise. Throws unless m >= p_values.size() >= 1.
std::vector<double> bonferroni(std::span<const double> p_values, std::size_t m);

} // namespace trtm::stats
