#pragma once

#include "trtm/risk_aggregation.hpp"

#include <cstddef>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

namespace trtm {

/// Fraction of the suite to retain, 0 < fraction <= 1.
class Budget {
public:
    explicit Budget(double fraction);
    double fraction() const noexcept { return fraction_; }

private:
    double fraction_;
};

struct MinimizationResult {
    std::vector<std::string> selected;  // highest score first
    std::vector<std::string> excluded;  // continues the same ranking
    std::map<std::string, double> scores;
    std::string config_fingerprint;
};

/// round-half-up(n * fraction), at least 1 when n > 0.
std::size_t budget_count(std::size_t n_tests, const Budget& budget);

/// Ranks by score descending, then test id ascending, and keeps the first
/// budget_count tests.
MinimizationResult select(const std::vector<TestScore>& scores, const Budget& budget,
                          std::string config_fingerprint = {});

void write_result_json(std::ostream& out, const MinimizationResult& result);
/// One selected test id per line.
void write_selected_txt(std::ostream& out, const MinimizationResult& result);

} // namespace trtm
