#include "trtm/change_history.hpp"

#include "trtm/errors.hpp"

#include <json.hpp>

#include <algorithm>
#include <cctype>
#include <charconv>
#include <istream>
#include <ostream>
#include <set>
#include <sstream>
#include <unordered_map>
#include <utility>

namespace trtm {

namespace {

using nlohmann::json;

void strip_cr(std::string& line) {
    if (!line.empty() && line.back() == '\r')
        line.pop_back();
}

bool is_blank(std::string_view s) {
    return std::all_of(s.begin(), s.end(), [](unsigned char c) { return std::isspace(c); });
}

const json& required(const json& obj, const char* key, std::size_t line) {
    auto it = obj.find(key);
    if (it == obj.end() || it->is_null())
        throw ParseError(std::string("missing required field '") + key + "'", line);
    return *it;
}

std::int64_t integer_field(const json& value, const char* key, std::size_t line) {
    if (!value.is_number_integer())
        throw ParseError(std::string("field '") + key + "' must be an integer", line);
    if (value.is_number_unsigned())
        return static_cast<std::int64_t>(value.get<std::uint64_t>());
    return value.get<std::int64_t>();
}

std::int64_t line_count(const json& obj, const char* key, std::size_t line, bool optional) {
    auto it = obj.find(key);
    if (it == obj.end() || it->is_null()) {
        if (optional)
            return 0;
        throw ParseError(std::string("missing required field '") + key + "'", line);
    }
    const std::int64_t v = integer_field(*it, key, line);
    if (v < 0)
        throw ParseError("negative line count", line);
    return v;
}

std::string string_field(const json& value, const char* key, std::size_t line) {
    if (!value.is_string())
        throw ParseError(std::string("field '") + key + "' must be a string", line);
    return value.get<std::string>();
}

std::optional<std::int64_t> parse_int(std::string_view s) {
    std::int64_t v = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size())
        return std::nullopt;
    return v;
}

std::string collapse_slashes(std::string s) {
    std::string out;
    out.reserve(s.size());
    for (char c : s) {
        if (c == '/' && !out.empty() && out.back() == '/')
            continue;
        out.push_back(c);
    }
    return out;
}

// git prints renames as `old => new` or `prefix{old => new}suffix`; either side of
// the braced form may be empty.
std::optional<std::pair<std::string, std::string>> split_rename(const std::string& path) {
    static constexpr std::string_view arrow = " => ";
    const auto open = path.find('{');
    const auto close = open == std::string::npos ? std::string::npos : path.find('}', open);
    if (open != std::string::npos && close != std::string::npos) {
        const std::string inner = path.substr(open + 1, close - open - 1);
        const auto at = inner.find(arrow);
        if (at != std::string::npos) {
            const std::string prefix = path.substr(0, open);
            const std::string suffix = path.substr(close + 1);
            return std::pair{collapse_slashes(prefix + inner.substr(0, at) + suffix),
                             collapse_slashes(prefix + inner.substr(at + arrow.size()) + suffix)};
        }
    }
    const auto at = path.find(arrow);
    if (at == std::string::npos)
        return std::nullopt;
    return std::pair{path.substr(0, at), path.substr(at + arrow.size())};
}

std::string normalize_separators(std::string_view path) {
    std::string p(path);
    std::replace(p.begin(), p.end(), '\\', '/');
    while (p.starts_with("./"))
        p.erase(0, 2);
    return p;
}

class ClassUnion {
public:
    std::string find(const std::string& c) {
        auto it = parent_.find(c);
        if (it == parent_.end()) {
            parent_.emplace(c, c);
            return c;
        }
        if (it->second == c)
            return c;
        std::string root = find(it->second);
        parent_[c] = root;
        return root;
    }

    // Links two identities; the merged group takes `to` as its current name.
    void link(const std::string& from, const std::string& to) {
        const std::string a = find(from);
        const std::string b = find(to);
        if (a != b)
            parent_[a] = b;
        name_[b] = to;
    }

    std::string name_of(const std::string& c) {
        const std::string root = find(c);
        auto it = name_.find(root);
        return it == name_.end() ? root : it->second;
    }

private:
    std::unordered_map<std::string, std::string> parent_;
    std::unordered_map<std::string, std::string> name_;
};

} // namespace

SourceRootConfig SourceRootConfig::java_defaults() {
    return SourceRootConfig{
        {"src/main/java", "src/test/java", "src/java", "src/test", "src"},
        {".java"},
    };
}

bool event_order_less(const ChangeEvent& a, const ChangeEvent& b) noexcept {
    if (a.timestamp != b.timestamp)
        return a.timestamp < b.timestamp;
    if (a.commit_id != b.commit_id)
        return a.commit_id < b.commit_id;
    return a.path < b.path;
}

std::vector<ChangeEvent> parse_change_log(std::istream& in) {
    std::vector<ChangeEvent> events;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        strip_cr(line);
        if (is_blank(line))
            continue;

        json obj;
        try {
            obj = json::parse(line);
        } catch (const json::parse_error&) {
            throw ParseError("malformed JSON record", line_no);
        }
        if (!obj.is_object())
            throw ParseError("record is not a JSON object", line_no);

        ChangeEvent ev;
        ev.path = string_field(required(obj, "path", line_no), "path", line_no);
        ev.commit_id = string_field(required(obj, "commit", line_no), "commit", line_no);
        ev.timestamp = integer_field(required(obj, "ts", line_no), "ts", line_no);
        if (ev.timestamp <= 0)
            throw ParseError("timestamp must be positive", line_no);
        ev.added = line_count(obj, "add", line_no, false);
        ev.deleted = line_count(obj, "del", line_no, false);
        ev.modified = line_count(obj, "mod", line_no, true);
        if (auto it = obj.find("renamed_from"); it != obj.end() && !it->is_null())
            ev.renamed_from = string_field(*it, "renamed_from", line_no);
        events.push_back(std::move(ev));
    }
    return events;
}

NumstatLog parse_git_numstat(std::istream& in) {
    NumstatLog log;
    std::optional<std::pair<std::string, std::int64_t>> commit;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        strip_cr(line);
        if (is_blank(line))
            continue;

        if (line.starts_with("COMMIT")) {
            std::istringstream header(line);
            std::string tag, hash, ts_text, extra;
            header >> tag >> hash >> ts_text;
            const auto ts = parse_int(ts_text);
            if (tag != "COMMIT" || hash.empty() || !ts || *ts <= 0 || (header >> extra))
                throw ParseError("unparseable commit header", line_no);
            commit = std::pair{hash, *ts};
            continue;
        }

        const auto tab1 = line.find('\t');
        const auto tab2 = tab1 == std::string::npos ? std::string::npos : line.find('\t', tab1 + 1);
        if (tab2 == std::string::npos)
            throw ParseError("unparseable numstat entry", line_no);
        if (!commit)
            throw ParseError("numstat entry before any commit header", line_no);

        const std::string_view add_text(line.data(), tab1);
        const std::string_view del_text(line.data() + tab1 + 1, tab2 - tab1 - 1);
        std::string path = line.substr(tab2 + 1);
        if (path.empty())
            throw ParseError("numstat entry without a path", line_no);

        ChangeEvent ev;
        ev.commit_id = commit->first;
        ev.timestamp = commit->second;
        if (add_text == "-" && del_text == "-") {
            log.warnings.push_back("binary change counted as zero lines at line " +
                                   std::to_string(line_no) + ": " + path);
        } else {
            const auto add = parse_int(add_text);
            const auto del = parse_int(del_text);
            if (!add || !del || *add < 0 || *del < 0)
                throw ParseError("unparseable numstat counts", line_no);
            ev.added = *add;
            ev.deleted = *del;
        }
        if (auto rename = split_rename(path)) {
            ev.renamed_from = std::move(rename->first);
            ev.path = std::move(rename->second);
        } else {
            ev.path = std::move(path);
        }
        log.events.push_back(std::move(ev));
    }
    return log;
}

void write_change_log(std::ostream& out, const std::vector<ChangeEvent>& events) {
    for (const auto& ev : events) {
        json obj = {
            {"path", ev.path}, {"ts", ev.timestamp}, {"add", ev.added},
            {"del", ev.deleted}, {"mod", ev.modified}, {"commit", ev.commit_id},
        };
        if (ev.renamed_from)
            obj["renamed_from"] = *ev.renamed_from;
        out << obj.dump() << '\n';
    }
}

std::optional<std::string> path_to_class(std::string_view raw_path, const SourceRootConfig& cfg) {
    const std::string path = normalize_separators(raw_path);

    std::string_view ext;
    for (const auto& e : cfg.extensions) {
        if (path.size() > e.size() && path.ends_with(e) && e.size() > ext.size())
            ext = e;
    }
    if (ext.empty())
        return std::nullopt;

    std::string_view rest(path);
    std::size_t best = 0;
    for (const auto& r : cfg.roots) {
        std::string root = normalize_separators(r);
        while (!root.empty() && root.back() == '/')
            root.pop_back();
        if (root.empty() || root.size() <= best)
            continue;
        if (path.size() > root.size() + 1 && path.starts_with(root) && path[root.size()] == '/') {
            best = root.size();
            rest = std::string_view(path).substr(root.size() + 1);
        }
    }

    rest.remove_suffix(ext.size());
    if (rest.empty() || rest.back() == '/')
        return std::nullopt;
    std::string id(rest);
    std::replace(id.begin(), id.end(), '/', '.');
    return id;
}

HistoryMap consolidate(const std::vector<ChangeEvent>& events, const SourceRootConfig& cfg) {
    struct Resolved {
        const ChangeEvent* event;
        std::string class_id;
    };

    std::vector<Resolved> resolved;
    std::set<std::pair<std::string_view, std::string_view>> seen;
    for (const auto& ev : events) {
        auto cls = path_to_class(ev.path, cfg);
        if (!cls)
            continue;
        if (!seen.emplace(ev.commit_id, ev.path).second)
            continue;
        resolved.push_back({&ev, std::move(*cls)});
    }
    std::stable_sort(resolved.begin(), resolved.end(), [](const Resolved& a, const Resolved& b) {
        return event_order_less(*a.event, *b.event);
    });

    // Renames are applied in commit order so the group's name is its newest identity.
    ClassUnion identities;
    for (const auto& r : resolved) {
        identities.find(r.class_id);
        if (!r.event->renamed_from)
            continue;
        if (auto old_cls = path_to_class(*r.event->renamed_from, cfg))
            identities.link(*old_cls, r.class_id);
    }

    HistoryMap out;
    for (const auto& r : resolved) {
        const std::string name = identities.name_of(r.class_id);
        auto& h = out[name];
        h.class_id = name;
        h.events.push_back(*r.event);
    }
    return out;
}

std::vector<ChangeEvent> flatten(const HistoryMap& histories) {
    std::vector<ChangeEvent> all;
    for (const auto& [_, h] : histories)
        all.insert(all.end(), h.events.begin(), h.events.end());
    return all;
}

} // namespace trtm
