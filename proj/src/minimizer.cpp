#include "trtm/minimizer.hpp"

#include "trtm/text_format.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <ostream>
#include <stdexcept>

namespace trtm {

Budget::Budget(double fraction) : fraction_(fraction) {
    if (!(fraction > 0.0 && fraction <= 1.0))
        throw std::invalid_argument("budget must satisfy 0 < fraction <= 1, got " + format_double(fraction));
}

std::size_t budget_count(std::size_t n_tests, const Budget& budget) {
    if (n_tests == 0)
        return 0;
    // The small slack keeps decimal fractions such as 0.35 * 10 on the intended side of .5.
    const double target = static_cast<double>(n_tests) * budget.fraction();
    auto k = static_cast<std::size_t>(std::floor(target + 0.5 + 1e-9));
    return std::clamp<std::size_t>(k, 1, n_tests);
}

MinimizationResult select(const std::vector<TestScore>& scores, const Budget& budget,
                          std::string config_fingerprint) {
    std::vector<const TestScore*> ranked;
    ranked.reserve(scores.size());
    for (const auto& s : scores)
        ranked.push_back(&s);
    std::sort(ranked.begin(), ranked.end(), [](const TestScore* a, const TestScore* b) {
        if (a->score != b->score)
            return a->score > b->score;
        return a->test_id < b->test_id;
    });

    MinimizationResult result;
    result.config_fingerprint = std::move(config_fingerprint);
    const std::size_t keep = budget_count(ranked.size(), budget);
    for (std::size_t i = 0; i < ranked.size(); ++i) {
        (i < keep ? result.selected : result.excluded).push_back(ranked[i]->test_id);
        result.scores[ranked[i]->test_id] = ranked[i]->score;
    }
    return result;
}

void write_result_json(std::ostream& out, const MinimizationResult& result) {
    nlohmann::ordered_json doc;
    doc["config"] = result.config_fingerprint;
    doc["selected"] = result.selected;
    doc["excluded"] = result.excluded;
    nlohmann::ordered_json scores = nlohmann::ordered_json::object();
    for (const auto& [id, s] : result.scores)
        scores[id] = s;
    doc["scores"] = std::move(scores);
    out << doc.dump(2) << '\n';
}

void write_selected_txt(std::ostream& out, const MinimizationResult& result) {
    for (const auto& id : result.selected)
        out << id << '\n';
}

} // namespace trtm
