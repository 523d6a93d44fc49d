#include "trtm/dependency_graph.hpp"

#include "trtm/errors.hpp"
#include "trtm/text_format.hpp"

#include <json.hpp>

#include <algorithm>
#include <functional>
#include <istream>
#include <ostream>
#include <stdexcept>

namespace trtm {

namespace {

constexpr std::string_view kKnownCallTypes = "MIOSD";

bool has_space(std::string_view s) {
    return s.find_first_of(" \t") != std::string_view::npos;
}

// `cls:meth(args)` from java-callgraph output.
MethodRef parse_callgraph_endpoint(std::string_view text, std::size_t line_no) {
    const auto colon = text.find(':');
    if (colon == std::string_view::npos || colon == 0 || colon + 1 == text.size() || has_space(text))
        throw ParseError("malformed call-graph endpoint '" + std::string(text) + "'", line_no);
    const std::string_view cls = text.substr(0, colon);
    const std::string_view meth = text.substr(colon + 1);
    const auto paren = meth.find('(');
    MethodRef ref;
    ref.class_id = std::string(cls);
    ref.method_name = std::string(meth.substr(0, paren));
    if (paren != std::string_view::npos)
        ref.descriptor = std::string(meth.substr(paren));
    if (ref.method_name.empty())
        throw ParseError("call-graph endpoint without a method name", line_no);
    return ref;
}

// `cls#meth` from CSV pairs.
MethodRef parse_hash_endpoint(std::string_view text, std::size_t line_no) {
    text = trim(text);
    const auto hash = text.find('#');
    if (hash == std::string_view::npos || hash == 0 || hash + 1 == text.size())
        throw ParseError("expected class#method, got '" + std::string(text) + "'", line_no);
    return MethodRef{std::string(text.substr(0, hash)), std::string(text.substr(hash + 1)), {}};
}

std::string_view simple_name(std::string_view class_id) {
    const auto dot = class_id.rfind('.');
    return dot == std::string_view::npos ? class_id : class_id.substr(dot + 1);
}

} // namespace

std::size_t MethodRefHash::operator()(const MethodRef& m) const noexcept {
    const std::hash<std::string> h;
    std::size_t seed = h(m.class_id);
    seed ^= h(m.method_name) + 0x9e3779b97f4a7c15ULL + (seed << 6) + (seed >> 2);
    seed ^= h(m.descriptor) + 0x9e3779b97f4a7c15ULL + (seed << 6) + (seed >> 2);
    return seed;
}

CallGraph::NodeId CallGraph::add_node(const MethodRef& m) {
    if (auto it = index_.find(m); it != index_.end())
        return it->second;
    const auto id = static_cast<NodeId>(nodes_.size());
    nodes_.push_back(m);
    adjacency_.emplace_back();
    index_.emplace(m, id);
    return id;
}

void CallGraph::add_edge(const MethodRef& caller, const MethodRef& callee) {
    const NodeId from = add_node(caller);
    const NodeId to = add_node(callee);
    auto& succ = adjacency_[from];
    auto pos = std::lower_bound(succ.begin(), succ.end(), to);
    if (pos != succ.end() && *pos == to)
        return;
    succ.insert(pos, to);
    ++edge_count_;
}

std::optional<CallGraph::NodeId> CallGraph::find(const MethodRef& m) const {
    if (auto it = index_.find(m); it != index_.end())
        return it->second;
    return std::nullopt;
}

CallGraphFormat parse_callgraph_format(std::string_view text) {
    if (text == "callgraph-text")
        return CallGraphFormat::CallgraphText;
    if (text == "csv")
        return CallGraphFormat::CsvPairs;
    throw std::invalid_argument("unknown call-graph format '" + std::string(text) +
                                "' (expected callgraph-text or csv)");
}

ParsedCallGraph parse_callgraph_edges(std::istream& in, CallGraphFormat format) {
    ParsedCallGraph out;
    std::string raw;
    std::size_t line_no = 0;
    while (std::getline(in, raw)) {
        ++line_no;
        const std::string_view line = trim(raw);
        if (line.empty())
            continue;

        if (format == CallGraphFormat::CsvPairs) {
            const auto parts = split(line, ',');
            if (parts.size() != 2)
                throw ParseError("expected two comma-separated endpoints", line_no);
            out.graph.add_edge(parse_hash_endpoint(parts[0], line_no), parse_hash_endpoint(parts[1], line_no));
            continue;
        }

        if (line.starts_with("C:"))
            continue;
        if (!line.starts_with("M:"))
            throw ParseError("unrecognized call-graph line", line_no);

        const std::string_view body = line.substr(2);
        const auto open = body.find(" (");
        const auto close = open == std::string_view::npos ? open : body.find(')', open + 2);
        if (close == std::string_view::npos || close == open + 2)
            throw ParseError("missing call-type tag", line_no);
        const std::string_view tag = body.substr(open + 2, close - open - 2);
        const MethodRef caller = parse_callgraph_endpoint(body.substr(0, open), line_no);
        const MethodRef callee = parse_callgraph_endpoint(body.substr(close + 1), line_no);
        if (tag.size() != 1 || kKnownCallTypes.find(tag.front()) == std::string_view::npos) {
            out.warnings.push_back("unknown call type '" + std::string(tag) + "' at line " +
                                   std::to_string(line_no));
        }
        out.graph.add_edge(caller, callee);
    }
    return out;
}

EntrySelector parse_entry_selector(std::string_view json_text) {
    using nlohmann::json;
    json doc;
    try {
        doc = json::parse(json_text);
    } catch (const json::parse_error& e) {
        throw ParseError(std::string("malformed entry selector: ") + e.what(), 0);
    }
    auto string_or_empty = [](const json& obj, const char* key) -> std::string {
        auto it = obj.find(key);
        if (it == obj.end() || it->is_null())
            return {};
        if (!it->is_string())
            throw ParseError(std::string("entry selector field '") + key + "' must be a string", 0);
        return it->get<std::string>();
    };

    if (doc.is_object() && doc.contains("explicit")) {
        const auto& list = doc["explicit"];
        if (!list.is_array())
            throw ParseError("entry selector 'explicit' must be an array", 0);
        ExplicitSelector sel;
        for (const auto& id : list) {
            if (!id.is_string() || id.get<std::string>().find('#') == std::string::npos)
                throw ParseError("explicit test ids must be strings of the form class#method", 0);
            sel.test_ids.push_back(id.get<std::string>());
        }
        return sel;
    }
    if (doc.is_object() && doc.contains("pattern")) {
        const auto& p = doc["pattern"];
        if (!p.is_object())
            throw ParseError("entry selector 'pattern' must be an object", 0);
        return PatternSelector{string_or_empty(p, "class_prefix"), string_or_empty(p, "class_suffix"),
                               string_or_empty(p, "method_prefix")};
    }
    throw ParseError("entry selector needs an 'explicit' or 'pattern' key", 0);
}

std::vector<EntryPoint> test_entry_points(const CallGraph& graph, const EntrySelector& selector) {
    std::vector<EntryPoint> entries;
    if (const auto* pattern = std::get_if<PatternSelector>(&selector)) {
        for (const auto& m : graph.nodes()) {
            const auto name = simple_name(m.class_id);
            if (name.starts_with(pattern->class_prefix) && name.ends_with(pattern->class_suffix) &&
                std::string_view(m.method_name).starts_with(pattern->method_prefix))
                entries.push_back({m, false});
        }
    } else {
        const auto& ids = std::get<ExplicitSelector>(selector).test_ids;
        std::map<std::string, std::vector<MethodRef>> by_id;
        for (const auto& m : graph.nodes())
            by_id[m.test_id()].push_back(m);
        for (const auto& id : ids) {
            if (auto it = by_id.find(id); it != by_id.end()) {
                for (const auto& m : it->second)
                    entries.push_back({m, false});
            } else {
                const auto hash = id.find('#');
                entries.push_back({MethodRef{id.substr(0, hash), id.substr(hash + 1), {}}, true});
            }
        }
    }
    std::sort(entries.begin(), entries.end());
    entries.erase(std::unique(entries.begin(), entries.end()), entries.end());
    return entries;
}

std::set<std::string> test_class_filter(const std::vector<EntryPoint>& entries,
                                        const std::vector<std::string>& extra) {
    std::set<std::string> filter(extra.begin(), extra.end());
    for (const auto& e : entries)
        filter.insert(e.method.class_id);
    return filter;
}

std::set<std::string> reachable_classes(const CallGraph& graph, const MethodRef& entry,
                                        const std::set<std::string>& test_class_filter) {
    std::set<std::string> classes;
    const auto start = graph.find(entry);
    if (!start)
        return classes;

    std::vector<bool> visited(graph.node_count(), false);
    std::vector<CallGraph::NodeId> stack(graph.successors(*start).begin(), graph.successors(*start).end());
    while (!stack.empty()) {
        const auto id = stack.back();
        stack.pop_back();
        if (visited[id])
            continue;
        visited[id] = true;
        const auto& cls = graph.node(id).class_id;
        if (!test_class_filter.contains(cls))
            classes.insert(cls);
        for (auto next : graph.successors(id)) {
            if (!visited[next])
                stack.push_back(next);
        }
    }
    return classes;
}

DependencyMap build_dependency_map(const CallGraph& graph, const std::vector<EntryPoint>& entries,
                                   const std::set<std::string>& test_class_filter) {
    DependencyMap deps;
    for (const auto& e : entries) {
        auto& set = deps[e.method.test_id()];
        set.merge(reachable_classes(graph, e.method, test_class_filter));
    }
    return deps;
}

void write_dependency_map_json(std::ostream& out, const DependencyMap& deps) {
    nlohmann::json doc = nlohmann::json::object();
    for (const auto& [test, classes] : deps)
        doc[test] = classes;
    out << doc.dump(2) << '\n';
}

} // namespace trtm
