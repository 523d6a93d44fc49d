#include "trtm/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

namespace trtm::stats {

namespace {

struct SignedRanks {
    std::vector<double> ranks;  // midranks of |d|, aligned with `positive`
    std::vector<bool> positive;
    double tie_term = 0.0;      // sum of t^3 - t over tie groups
};

SignedRanks rank_differences(std::span<const double> differences) {
    std::vector<double> d;
    for (double x : differences) {
        if (x != 0.0)
            d.push_back(x);
    }
    if (d.empty())
        throw std::domain_error("degenerate sample");

    std::sort(d.begin(), d.end(), [](double x, double y) { return std::abs(x) < std::abs(y); });
    SignedRanks out;
    out.ranks.resize(d.size());
    out.positive.resize(d.size());
    std::size_t i = 0;
    while (i < d.size()) {
        std::size_t j = i;
        while (j + 1 < d.size() && std::abs(d[j + 1]) == std::abs(d[i]))
            ++j;
        const double midrank = (static_cast<double>(i + 1) + static_cast<double>(j + 1)) / 2.0;
        const double t = static_cast<double>(j - i + 1);
        out.tie_term += t * t * t - t;
        for (std::size_t k = i; k <= j; ++k) {
            out.ranks[k] = midrank;
            out.positive[k] = d[k] > 0.0;
        }
        i = j + 1;
    }
    return out;
}

std::pair<double, double> rank_sums(const SignedRanks& r) {
    double plus = 0.0, minus = 0.0;
    for (std::size_t k = 0; k < r.ranks.size(); ++k)
        (r.positive[k] ? plus : minus) += r.ranks[k];
    return {plus, minus};
}

double exact_p(const SignedRanks& r) {
    // Midranks are multiples of 1/2, so doubled ranks are integers.
    std::vector<std::size_t> doubled;
    std::size_t total = 0;
    for (double rank : r.ranks) {
        doubled.push_back(static_cast<std::size_t>(std::lround(2.0 * rank)));
        total += doubled.back();
    }
    std::vector<double> ways(total + 1, 0.0);
    ways[0] = 1.0;
    for (std::size_t w : doubled) {
        for (std::size_t s = total; s >= w; --s) {
            ways[s] += ways[s - w];
            if (s == w)
                break;
        }
    }
    const auto [plus, minus] = rank_sums(r);
    const auto observed = static_cast<std::size_t>(std::lround(2.0 * std::min(plus, minus)));
    double tail = 0.0;
    for (std::size_t s = 0; s <= observed; ++s)
        tail += ways[s];
    const double p = 2.0 * tail / std::exp2(static_cast<double>(r.ranks.size()));
    return std::min(1.0, p);
}

double normal_p(const SignedRanks& r) {
    const double n = static_cast<double>(r.ranks.size());
    const auto [plus, minus] = rank_sums(r);
    const double mean = n * (n + 1.0) / 4.0;
    const double var = n * (n + 1.0) * (2.0 * n + 1.0) / 24.0 - r.tie_term / 48.0;
    if (var <= 0.0)
        return 1.0;
    const double z = std::max(0.0, std::abs(plus - mean) - 0.5) / std::sqrt(var);
    return std::min(1.0, std::erfc(z / std::numbers::sqrt2));
}

double log_choose(std::int64_t n, std::int64_t k) {
    return std::lgamma(static_cast<double>(n + 1)) - std::lgamma(static_cast<double>(k + 1)) -
           std::lgamma(static_cast<double>(n - k + 1));
}

} // namespace

WilcoxonResult wilcoxon_signed_rank(const PairedSample& sample) {
    std::vector<double> diffs;
    diffs.reserve(sample.pairs.size());
    for (const auto& [a, b] : sample.pairs)
        diffs.push_back(a - b);
    const SignedRanks r = rank_differences(diffs);
    const auto [plus, minus] = rank_sums(r);

    WilcoxonResult res;
    res.w_plus = plus;
    res.w_minus = minus;
    res.statistic = std::min(plus, minus);
    res.n_effective = r.ranks.size();
    res.exact = res.n_effective < kWilcoxonExactBelow;
    res.p_two_sided = res.exact ? exact_p(r) : normal_p(r);
    return res;
}

double wilcoxon_exact_p(std::span<const double> differences) {
    return exact_p(rank_differences(differences));
}

double wilcoxon_normal_p(std::span<const double> differences) {
    return normal_p(rank_differences(differences));
}

FisherResult fisher_exact_2x2(const Table2x2& t) {
    if (t.a < 0 || t.b < 0 || t.c < 0 || t.d < 0)
        throw std::invalid_argument("contingency table cells must be non-negative");
    const std::int64_t row1 = t.a + t.b;
    const std::int64_t row2 = t.c + t.d;
    const std::int64_t col1 = t.a + t.c;
    const std::int64_t n = row1 + row2;
    if (n == 0)
        throw std::invalid_argument("contingency table is empty");

    const double log_denominator = log_choose(n, col1);
    auto prob = [&](std::int64_t x) {
        return std::exp(log_choose(row1, x) + log_choose(row2, col1 - x) - log_denominator);
    };

    const double observed = prob(t.a);
    const double threshold = observed * (1.0 + 1e-7);
    // Normalizing by the summed mass of all tables makes p exactly 1 when every
    // table is at least as extreme as the observed one.
    double included = 0.0;
    double total = 0.0;
    for (std::int64_t x = std::max<std::int64_t>(0, col1 - row2); x <= std::min(row1, col1); ++x) {
        const double px = prob(x);
        total += px;
        if (px <= threshold)
            included += px;
    }

    FisherResult res;
    res.p_two_sided = std::min(1.0, included / total);
    const double ad = static_cast<double>(t.a) * static_cast<double>(t.d);
    const double bc = static_cast<double>(t.b) * static_cast<double>(t.c);
    if (bc == 0.0)
        res.odds_ratio = ad > 0.0 ? std::numeric_limits<double>::infinity()
                                  : std::numeric_limits<double>::quiet_NaN();
    else
        res.odds_ratio = ad / bc;
    return res;
}

double cliffs_delta(std::span<const double> a, std::span<const double> b) {
    if (a.empty() || b.empty())
        throw std::invalid_argument("Cliff's delta needs two non-empty samples");
    std::vector<double> sorted_b(b.begin(), b.end());
    std::sort(sorted_b.begin(), sorted_b.end());
    std::int64_t greater = 0, less = 0;
    for (double x : a) {
        const auto lo = std::lower_bound(sorted_b.begin(), sorted_b.end(), x);
        const auto hi = std::upper_bound(lo, sorted_b.end(), x);
        less += sorted_b.end() - hi;    // b_j > a_i
        greater += lo - sorted_b.begin();  // b_j < a_i
    }
    return static_cast<double>(greater - less) /
           (static_cast<double>(a.size()) * static_cast<double>(b.size()));
}

std::vector<double> bonferroni(std::span<const double> p_values, std::size_t m) {
    if (p_values.empty() || m < p_values.size())
        throw std::invalid_argument("Bonferroni needs m >= number of p-values >= 1");
    std::vector<double> out;
    out.reserve(p_values.size());
    for (double p : p_values)
        out.push_back(std::min(1.0, p * static_cast<double>(m)));
    return out;
}

} // namespace trtm::stats
