#pragma once

// Randomized micro-projects and a naive end-to-end selection oracle.
// The oracle works from the generator's own structures, never from parsed
// library types.

#include "oracles.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <numbers>
#include <optional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

namespace trtm::oracle {

struct RawMethod {
    std::string cls;
    std::string name;
    bool is_test = false;
};

struct RawEvent {
    int cls;  // index into prod_classes
    std::int64_t ts;
    int add, del, mod;
    std::string commit;
};

struct MicroProject {
    std::vector<std::string> prod_classes;
    std::vector<std::string> test_classes;
    std::vector<RawMethod> methods;
    std::vector<std::pair<int, int>> edges;  // method indices
    std::vector<RawEvent> events;
    std::int64_t as_of = 1'600'000'000;

    std::string change_log_jsonl() const {
        std::ostringstream out;
        for (const auto& e : events) {
            std::string path = "src/main/java/" + prod_classes[e.cls] + ".java";
            std::replace(path.begin() + 14, path.end() - 5, '.', '/');
            out << "{\"path\":\"" << path << "\",\"ts\":" << e.ts << ",\"add\":" << e.add << ",\"del\":" << e.del
                << ",\"mod\":" << e.mod << ",\"commit\":\"" << e.commit << "\"}\n";
        }
        return out.str();
    }

    std::string callgraph_text() const {
        std::ostringstream out;
        for (auto [a, b] : edges) {
            out << "M:" << methods[a].cls << ':' << methods[a].name << "() (" << "MISOD"[(a + b) % 5] << ')'
                << methods[b].cls << ':' << methods[b].name << "()\n";
        }
        return out.str();
    }
};

struct MicroLimits {
    int max_classes = 20;
    int max_tests = 40;
    int max_edges = 200;
    int max_events = 100;
};

inline MicroProject random_micro_project(std::uint64_t seed, const MicroLimits& lim = {}) {
    std::mt19937_64 rng(seed);
    auto uniform = [&](int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); };

    MicroProject p;
    const int n_prod = uniform(2, lim.max_classes);
    for (int i = 0; i < n_prod; ++i)
        p.prod_classes.push_back("org.demo.pkg" + std::to_string(i % 3) + ".C" + std::to_string(i));
    std::vector<int> prod_methods;
    for (int i = 0; i < n_prod; ++i)
        for (int k = uniform(1, 3); k > 0; --k) {
            prod_methods.push_back(static_cast<int>(p.methods.size()));
            p.methods.push_back({p.prod_classes[i], "m" + std::to_string(k), false});
        }

    const int n_tests = uniform(1, lim.max_tests);
    std::vector<int> test_methods;
    int test_class = -1;
    for (int t = 0; t < n_tests; ++t) {
        if (test_class < 0 || uniform(0, 2) == 0) {
            ++test_class;
            p.test_classes.push_back("org.demo.T" + std::to_string(test_class) + "Test");
        }
        test_methods.push_back(static_cast<int>(p.methods.size()));
        p.methods.push_back({p.test_classes.back(), "test" + std::to_string(t), true});
    }

    const int n_edges = uniform(0, lim.max_edges);
    std::set<std::pair<int, int>> seen;
    for (int e = 0; e < n_edges; ++e) {
        const int from = uniform(0, 3) == 0 ? test_methods[uniform(0, n_tests - 1)]
                                            : uniform(0, static_cast<int>(p.methods.size()) - 1);
        const int to = uniform(0, 9) == 0 ? test_methods[uniform(0, n_tests - 1)]
                                          : prod_methods[uniform(0, static_cast<int>(prod_methods.size()) - 1)];
        if (seen.emplace(from, to).second)
            p.edges.emplace_back(from, to);
    }

    // Commits touch several classes at once; (commit, class) pairs are unique.
    const int n_events = uniform(0, lim.max_events);
    int commit_no = 0;
    while (static_cast<int>(p.events.size()) < n_events) {
        const std::int64_t ts = p.as_of - uniform(-30 * 86400, 1000 * 86400);
        const std::string commit = "c" + std::to_string(commit_no++);
        std::set<int> touched;
        for (int k = uniform(1, 4); k > 0 && static_cast<int>(p.events.size()) < n_events; --k) {
            const int cls = uniform(0, n_prod - 1);
            if (touched.insert(cls).second)
                p.events.push_back({cls, ts, uniform(0, 60), uniform(0, 40), uniform(0, 20), commit});
        }
    }
    return p;
}

struct NaiveConfig {
    bool extent = false;
    std::optional<double> half_life;  // nullopt = static
    int op = 0;                       // 0 avg, 1 gmean, 2 hmean, 3 median
    int budget_percent = 50;
};

inline double naive_class_risk(const MicroProject& p, int cls, const NaiveConfig& cfg) {
    double risk = 0.0;
    for (const auto& e : p.events) {
        if (e.cls != cls)
            continue;
        const double age = static_cast<double>(p.as_of - e.ts) / 86400.0;
        if (age < 0)
            continue;
        const double w = cfg.extent ? std::log(1.0 + e.add + e.del + e.mod) : 1.0;
        const double decay = cfg.half_life ? std::exp(-(std::numbers::ln2 / *cfg.half_life) * age) : 1.0;
        risk += w * decay;
    }
    return risk;
}

inline double naive_aggregate(std::vector<double> v, int op) {
    std::sort(v.begin(), v.end());
    const long double n = static_cast<long double>(v.size());
    long double acc = op == 1 ? 1.0L : 0.0L;
    switch (op) {
    case 0:
        for (double x : v)
            acc += x;
        return static_cast<double>(acc / n);
    case 1:
        for (double x : v)
            acc *= x;
        return static_cast<double>(std::pow(acc, 1.0L / n));
    case 2:
        for (double x : v)
            acc += 1.0L / x;
        return static_cast<double>(n / acc);
    default:
        if (v.size() % 2 == 1)
            return v[v.size() / 2];
        return (v[v.size() / 2 - 1] + v[v.size() / 2]) / 2.0;
    }
}

struct NaiveRanking {
    std::vector<std::string> selected;
    std::map<std::string, double> scores;
};

inline NaiveRanking naive_select(const MicroProject& p, const NaiveConfig& cfg, double risk_scale = 1.0) {
    const int n = static_cast<int>(p.methods.size());
    const auto reach = closure_floyd(n, p.edges);
    const std::set<std::string> test_classes(p.test_classes.begin(), p.test_classes.end());
    std::map<std::string, int> class_index;
    for (int i = 0; i < static_cast<int>(p.prod_classes.size()); ++i)
        class_index[p.prod_classes[i]] = i;

    std::vector<double> risk(p.prod_classes.size());
    for (std::size_t c = 0; c < risk.size(); ++c)
        risk[c] = naive_class_risk(p, static_cast<int>(c), cfg) * risk_scale;

    std::vector<std::pair<std::string, double>> scored;
    for (int t = 0; t < n; ++t) {
        if (!p.methods[t].is_test)
            continue;
        std::set<std::string> deps;
        for (int j = 0; j < n; ++j)
            if (reach[t][j] && !test_classes.count(p.methods[j].cls))
                deps.insert(p.methods[j].cls);
        std::vector<double> values;
        for (const auto& c : deps)
            if (risk[class_index.at(c)] > 0)
                values.push_back(risk[class_index.at(c)]);
        const double s = values.empty() ? 0.0 : naive_aggregate(values, cfg.op);
        scored.emplace_back(p.methods[t].cls + "#" + p.methods[t].name, s);
    }

    NaiveRanking out;
    for (const auto& [id, s] : scored)
        out.scores[id] = s;
    const long total = static_cast<long>(scored.size());
    long keep = (2 * total * cfg.budget_percent + 100) / 200;
    keep = std::clamp(keep, total > 0 ? 1L : 0L, total);
    std::vector<bool> taken(scored.size(), false);
    for (long k = 0; k < keep; ++k) {
        int best = -1;
        for (int i = 0; i < static_cast<int>(scored.size()); ++i) {
            if (taken[i])
                continue;
            if (best < 0 || scored[i].second > scored[best].second ||
                (scored[i].second == scored[best].second && scored[i].first < scored[best].first))
                best = i;
        }
        taken[best] = true;
        out.selected.push_back(scored[best].first);
    }
    return out;
}

} // namespace trtm::oracle
