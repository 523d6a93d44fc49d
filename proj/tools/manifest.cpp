#include "manifest.hpp"

#include "trtm/errors.hpp"

#include <json.hpp>

#include <chrono>
#include <fstream>
#include <sstream>

namespace trtm::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw MissingInput("cannot open input file: " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::ifstream open_input(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw MissingInput("cannot open input file: " + path.string());
    return in;
}

std::string string_key(const json& doc, const char* key, bool required, const fs::path& source) {
    auto it = doc.find(key);
    if (it == doc.end() || it->is_null()) {
        if (required)
            throw ParseError(source.string() + ": manifest is missing '" + key + "'", 0);
        return {};
    }
    if (!it->is_string())
        throw ParseError(source.string() + ": manifest field '" + key + "' must be a string", 0);
    return it->get<std::string>();
}

std::vector<std::string> string_list(const json& doc, const char* key, const fs::path& source) {
    std::vector<std::string> out;
    auto it = doc.find(key);
    if (it == doc.end() || it->is_null())
        return out;
    if (!it->is_array())
        throw ParseError(source.string() + ": manifest field '" + key + "' must be an array", 0);
    for (const auto& v : *it) {
        if (!v.is_string())
            throw ParseError(source.string() + ": manifest field '" + key + "' must hold strings", 0);
        out.push_back(v.get<std::string>());
    }
    return out;
}

} // namespace

RunManifest load_manifest(const fs::path& path) {
    const std::string text = read_file(path);
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ParseError(path.string() + ": malformed manifest: " + e.what(), 0);
    }
    if (!doc.is_object())
        throw ParseError(path.string() + ": manifest must be a JSON object", 0);

    const fs::path base = path.parent_path();
    auto resolve = [&](const std::string& p) { return fs::path(p).is_absolute() ? fs::path(p) : base / p; };

    RunManifest m;
    m.source = path;
    m.project_id = string_key(doc, "project_id", false, path);
    if (m.project_id.empty())
        m.project_id = path.stem().string();
    m.change_log = resolve(string_key(doc, "change_log", true, path));
    m.callgraph = resolve(string_key(doc, "callgraph", true, path));

    const std::string log_format = string_key(doc, "change_log_format", false, path);
    if (log_format.empty() || log_format == "jsonl")
        m.change_log_format = ChangeLogFormat::Jsonl;
    else if (log_format == "numstat")
        m.change_log_format = ChangeLogFormat::Numstat;
    else
        throw ParseError(path.string() + ": unknown change_log_format '" + log_format + "'", 0);

    if (const std::string cg_format = string_key(doc, "callgraph_format", false, path); !cg_format.empty()) {
        try {
            m.callgraph_format = parse_callgraph_format(cg_format);
        } catch (const std::invalid_argument& e) {
            throw ParseError(path.string() + ": " + e.what(), 0);
        }
    }

    auto sel = doc.find("entry_selector");
    if (sel == doc.end())
        throw ParseError(path.string() + ": manifest is missing 'entry_selector'", 0);
    m.entry_selector = parse_entry_selector(sel->dump());

    if (auto roots = string_list(doc, "source_roots", path); !roots.empty())
        m.source_roots.roots = std::move(roots);
    if (auto exts = string_list(doc, "extensions", path); !exts.empty())
        m.source_roots.extensions = std::move(exts);
    m.exclude_classes = string_list(doc, "exclude_classes", path);

    if (auto labels = string_key(doc, "labels", false, path); !labels.empty())
        m.labels = resolve(labels);
    if (auto out = string_key(doc, "output_dir", false, path); !out.empty())
        m.output_dir = resolve(out);
    return m;
}

std::shared_ptr<const ProjectInputs> load_project(const RunManifest& manifest, std::vector<std::string>& warnings) {
    const auto start = std::chrono::steady_clock::now();
    auto project = std::make_shared<ProjectInputs>();
    project->project_id = manifest.project_id;

    std::vector<ChangeEvent> events;
    {
        auto in = open_input(manifest.change_log);
        if (manifest.change_log_format == ChangeLogFormat::Numstat) {
            auto log = parse_git_numstat(in);
            events = std::move(log.events);
            for (auto& w : log.warnings)
                warnings.push_back(manifest.change_log.string() + ": " + w);
        } else {
            events = parse_change_log(in);
        }
    }
    project->histories = consolidate(events, manifest.source_roots);

    {
        auto in = open_input(manifest.callgraph);
        auto parsed = parse_callgraph_edges(in, manifest.callgraph_format);
        project->graph = std::move(parsed.graph);
        for (auto& w : parsed.warnings)
            warnings.push_back(manifest.callgraph.string() + ": " + w);
    }
    project->entries = test_entry_points(project->graph, manifest.entry_selector);
    project->test_filter = test_class_filter(project->entries, manifest.exclude_classes);
    project->ingest_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return project;
}

std::vector<VersionLabel> load_labels(const RunManifest& manifest) {
    if (!manifest.labels)
        throw LabelError(manifest.source.string() + ": no 'labels' file configured");
    std::ifstream in(*manifest.labels, std::ios::binary);
    if (!in)
        throw LabelError("cannot open label file: " + manifest.labels->string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_version_labels(ss.str());
}

} // namespace trtm::cli
