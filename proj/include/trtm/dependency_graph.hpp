#pragma once

#include <compare>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <unordered_map>
#include <variant>
#include <vector>

namespace trtm {

struct MethodRef {
    std::string class_id;
    std::string method_name;
    std::string descriptor;  // e.g. "(java.lang.String)", may be empty

    /// `class_id#method_name`, the form used for test identifiers.
    std::string test_id() const { return class_id + '#' + method_name; }

    auto operator<=>(const MethodRef&) const = default;
    bool operator==(const MethodRef&) const = default;
};

struct MethodRefHash {
    std::size_t operator()(const MethodRef& m) const noexcept;
};

/// Directed method-level call graph. Nodes are interned; adjacency lists are
/// sorted and free of duplicates. Self-loops and cycles are allowed.
class CallGraph {
public:
    using NodeId = std::uint32_t;

    NodeId add_node(const MethodRef& m);
    void add_edge(const MethodRef& caller, const MethodRef& callee);

    std::optional<NodeId> find(const MethodRef& m) const;
    const MethodRef& node(NodeId id) const { return nodes_[id]; }
    const std::vector<NodeId>& successors(NodeId id) const { return adjacency_[id]; }

    std::size_t node_count() const noexcept { return nodes_.size(); }
    std::size_t edge_count() const noexcept { return edge_count_; }
    const std::vector<MethodRef>& nodes() const noexcept { return nodes_; }

private:
    std::vector<MethodRef> nodes_;
    std::vector<std::vector<NodeId>> adjacency_;
    std::unordered_map<MethodRef, NodeId, MethodRefHash> index_;
    std::size_t edge_count_ = 0;
};

enum class CallGraphFormat { CallgraphText, CsvPairs };

CallGraphFormat parse_callgraph_format(std::string_view text);

struct ParsedCallGraph {
    CallGraph graph;
    std::vector<std::string> warnings;
};

/// CallgraphText: java-callgraph method lines `M:<cls>:<meth>[(args)] (<T>)<cls>:<meth>[(args)]`;
/// `C:` class-level lines are skipped. Unknown call-type tags keep the edge and warn.
/// CsvPairs: `caller_class#caller_method,callee_class#callee_method`.
/// Throws ParseError with the line number on malformed lines.
ParsedCallGraph parse_callgraph_edges(std::istream& in, CallGraphFormat format);

struct PatternSelector {
    std::string class_prefix;
    std::string class_suffix;
    std::string method_prefix;
};

struct ExplicitSelector {
    std::vector<std::string> test_ids;  // `class#method`
};

using EntrySelector = std::variant<ExplicitSelector, PatternSelector>;

/// Parses `{"explicit": [...]}` or `{"pattern": {"class_suffix": ..., "method_prefix": ...}}`
/// (`class_prefix` is also accepted). Throws ParseError.
EntrySelector parse_entry_selector(std::string_view json_text);

struct EntryPoint {
    MethodRef method;
    bool isolated = false;  // named explicitly but absent from the graph

    auto operator<=>(const EntryPoint&) const = default;
};

/// Pattern rules match on the simple class name (after the last '.').
/// Explicit ids match every overload of the named method; ids with no node in
/// the graph are kept as isolated entries.
std::vector<EntryPoint> test_entry_points(const CallGraph& graph, const EntrySelector& selector);

/// Classes of the entry points plus any extra exclusions.
std::set<std::string> test_class_filter(const std::vector<EntryPoint>& entries,
                                        const std::vector<std::string>& extra = {});

/// Classes of every method reachable from `entry` through one or more call
/// edges, minus the filtered classes. Iterative DFS with a visited set.
std::set<std::string> reachable_classes(const CallGraph& graph, const MethodRef& entry,
                                        const std::set<std::string>& test_class_filter);

using DependencyMap = std::map<std::string, std::set<std::string>>;

/// One entry per test id (overloads sharing an id are merged); entries that
/// reach nothing are recorded with an empty set.
DependencyMap build_dependency_map(const CallGraph& graph, const std::vector<EntryPoint>& entries,
                                   const std::set<std::string>& test_class_filter);

void write_dependency_map_json(std::ostream& out, const DependencyMap& deps);

} // namespace trtm
