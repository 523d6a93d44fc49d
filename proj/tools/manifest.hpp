#pragma once

#include "trtm/change_history.hpp"
#include "trtm/dependency_graph.hpp"
#include "trtm/evaluation.hpp"

#include <filesystem>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace trtm::cli {

/// A referenced input file does not exist.
class MissingInput : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

enum class ChangeLogFormat { Jsonl, Numstat };

/// Per-project run description. Relative paths are resolved against the
/// manifest's own directory.
struct RunManifest {
    std::filesystem::path source;
    std::string project_id;
    std::filesystem::path change_log;
    ChangeLogFormat change_log_format = ChangeLogFormat::Jsonl;
    std::filesystem::path callgraph;
    CallGraphFormat callgraph_format = CallGraphFormat::CallgraphText;
    EntrySelector entry_selector;
    SourceRootConfig source_roots = SourceRootConfig::java_defaults();
    std::vector<std::string> exclude_classes;
    std::optional<std::filesystem::path> labels;
    std::optional<std::filesystem::path> output_dir;
};

/// Throws MissingInput when the manifest is absent and ParseError when it is malformed.
RunManifest load_manifest(const std::filesystem::path& path);

/// Reads, parses and consolidates every input of a manifest, timing the work.
/// `warnings` collects non-fatal notes from the parsers.
std::shared_ptr<const ProjectInputs> load_project(const RunManifest& manifest,
                                                  std::vector<std::string>& warnings);

/// Throws LabelError when the manifest names no label file or it cannot be read.
std::vector<VersionLabel> load_labels(const RunManifest& manifest);

} // namespace trtm::cli
