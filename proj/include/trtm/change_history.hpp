#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace trtm {

/// One commit-level modification of one file.
struct ChangeEvent {
    std::int64_t timestamp = 0;  // Unix seconds
    std::int64_t added = 0;
    std::int64_t deleted = 0;
    std::int64_t modified = 0;
    std::string commit_id;
    std::string path;
    std::optional<std::string> renamed_from;

    std::int64_t churn() const noexcept { return added + deleted + modified; }

    bool operator==(const ChangeEvent&) const = default;
};

/// Chronological events of one logical class, merged across every path it lived under.
struct ClassHistory {
    std::string class_id;
    std::vector<ChangeEvent> events;

    bool operator==(const ClassHistory&) const = default;
};

using HistoryMap = std::map<std::string, ClassHistory>;

struct SourceRootConfig {
    std::vector<std::string> roots;
    std::vector<std::string> extensions;

    /// Maven/Gradle layouts plus a bare `src`, recognizing `.java` files.
    static SourceRootConfig java_defaults();
};

struct NumstatLog {
    std::vector<ChangeEvent> events;
    std::vector<std::string> warnings;
};

/// Reads change-event JSONL (one object per line; blank lines skipped).
/// Throws ParseError naming the offending line.
std::vector<ChangeEvent> parse_change_log(std::istream& in);

/// Reads `git log --numstat --format="COMMIT %H %at"` output.
/// Binary entries (`-` counts) become zero-count events and add a warning.
/// Rename entries (`a => b`, `p/{a => b}/s`) produce an event at the new path
/// with `renamed_from` set to the old one.
NumstatLog parse_git_numstat(std::istream& in);

/// Serializes events back to the JSONL interchange format, one per line.
void write_change_log(std::ostream& out, const std::vector<ChangeEvent>& events);

/// Maps a repository path to a dotted class name, or nullopt for files whose
/// extension is not recognized. The longest matching source root is stripped;
/// when no root matches the whole path is converted.
std::optional<std::string> path_to_class(std::string_view path, const SourceRootConfig& cfg);

/// Groups events by logical class. Rename annotations link the old and new
/// identities (the history is keyed by the newest name); paths that resolve
/// to the same class are merged. Events are deduplicated on (commit_id, path)
/// and ordered by (timestamp, commit_id, path).
HistoryMap consolidate(const std::vector<ChangeEvent>& events, const SourceRootConfig& cfg);

/// All events of all histories, in class order.
std::vector<ChangeEvent> flatten(const HistoryMap& histories);

/// Strict chronological order used inside every ClassHistory.
bool event_order_less(const ChangeEvent& a, const ChangeEvent& b) noexcept;

} // namespace trtm
