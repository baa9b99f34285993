#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "matchx/graph.hpp"

namespace matchx {

/// {"id", "num_nodes", "features", "edges": [[u, v, w]], "label", "gt_nodes"}.
/// Edges with features are written as [u, v, w, [f...]].
nlohmann::json graph_to_json(const Graph& g);

/// `where` prefixes error messages (e.g. "graph[3]"). Unknown keys produce a
/// warning and are otherwise ignored.
Graph graph_from_json(const nlohmann::json& j, const std::string& where = "graph");

/// Writes the graph array, and `<path>.manifest.json` when a manifest is given.
void save_dataset(const std::filesystem::path& path, std::span<const Graph> graphs,
                  const std::optional<nlohmann::json>& manifest = std::nullopt);

std::vector<Graph> load_dataset(const std::filesystem::path& path);

std::filesystem::path manifest_path(const std::filesystem::path& dataset);

/// Writes `text` to `path`, raising IoError with the path on failure.
void write_text(const std::filesystem::path& path, const std::string& text);
std::string read_text(const std::filesystem::path& path);

}  // namespace matchx
