#include "matchx/io.hpp"

#include <fstream>
#include <set>
#include <sstream>
#include <string>

#include "matchx/errors.hpp"
#include "matchx/log.hpp"

namespace matchx {
namespace {

using nlohmann::json;

const std::set<std::string>& known_keys() {
  static const std::set<std::string> keys{"id",    "num_nodes", "features",
                                          "edges", "label",     "gt_nodes"};
  return keys;
}

const json& field(const json& j, const char* key, const std::string& where) {
  auto it = j.find(key);
  if (it == j.end()) throw ParseError(where + ": missing field \"" + key + "\"");
  return *it;
}

std::string line_col(const std::string& text, std::size_t byte) {
  std::size_t line = 1;
  std::size_t col = 1;
  for (std::size_t i = 0; i < byte && i < text.size(); ++i) {
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return "line " + std::to_string(line) + ", column " + std::to_string(col);
}

}  // namespace

json graph_to_json(const Graph& g) {
  json features = json::array();
  for (Eigen::Index i = 0; i < g.features().rows(); ++i) {
    json row = json::array();
    for (Eigen::Index k = 0; k < g.features().cols(); ++k) row.push_back(g.features()(i, k));
    features.push_back(std::move(row));
  }
  json edges = json::array();
  for (const Edge& e : g.edges()) {
    json item = {e.u, e.v, e.w};
    if (!e.feat.empty()) item.push_back(e.feat);
    edges.push_back(std::move(item));
  }
  json j;
  j["id"] = g.id();
  j["num_nodes"] = g.num_nodes();
  j["features"] = std::move(features);
  j["edges"] = std::move(edges);
  j["label"] = g.label() ? json(*g.label()) : json(nullptr);
  j["gt_nodes"] = g.gt_nodes() ? json(g.gt_nodes()->indices()) : json(nullptr);
  return j;
}

Graph graph_from_json(const json& j, const std::string& where) {
  if (!j.is_object()) throw ParseError(where + ": expected an object");
  for (const auto& [key, value] : j.items()) {
    if (!known_keys().contains(key)) warn(where + ": ignoring unknown field \"" + key + "\"");
  }
  try {
    const auto id = field(j, "id", where).get<std::string>();
    const auto n = field(j, "num_nodes", where).get<std::size_t>();
    const json& jf = field(j, "features", where);
    if (!jf.is_array() || jf.size() != n) {
      throw ParseError(where + ".features: expected " + std::to_string(n) + " rows");
    }
    const std::size_t width = n == 0 ? 0 : jf.at(0).size();
    Matrix features(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(width));
    for (std::size_t i = 0; i < n; ++i) {
      const auto row = jf.at(i).get<std::vector<double>>();
      if (row.size() != width) {
        throw ParseError(where + ".features[" + std::to_string(i) + "]: expected width " +
                         std::to_string(width));
      }
      for (std::size_t k = 0; k < width; ++k) {
        features(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = row[k];
      }
    }
    const json& je = field(j, "edges", where);
    if (!je.is_array()) throw ParseError(where + ".edges: expected an array");
    std::vector<Edge> edges;
    edges.reserve(je.size());
    for (std::size_t k = 0; k < je.size(); ++k) {
      const json& item = je[k];
      const std::string ew = where + ".edges[" + std::to_string(k) + "]";
      if (!item.is_array() || item.size() < 2 || item.size() > 4) {
        throw ParseError(ew + ": expected [u, v, w] or [u, v, w, [features]]");
      }
      Edge e;
      e.u = item[0].get<std::size_t>();
      e.v = item[1].get<std::size_t>();
      if (item.size() >= 3) e.w = item[2].get<double>();
      if (item.size() == 4) e.feat = item[3].get<std::vector<double>>();
      edges.push_back(std::move(e));
    }
    std::optional<int> label;
    if (auto it = j.find("label"); it != j.end() && !it->is_null()) label = it->get<int>();
    std::optional<NodeSet> gt;
    if (auto it = j.find("gt_nodes"); it != j.end() && !it->is_null()) {
      gt = NodeSet(it->get<std::vector<std::size_t>>());
    }
    return Graph(id, std::move(features), std::move(edges), label, std::move(gt));
  } catch (const json::exception& e) {
    throw ParseError(where + ": " + e.what());
  } catch (const ParseError&) {
    throw;
  } catch (const DataError& e) {
    throw ParseError(where + ": " + e.what());
  }
}

std::filesystem::path manifest_path(const std::filesystem::path& dataset) {
  return std::filesystem::path(dataset.string() + ".manifest.json");
}

void save_dataset(const std::filesystem::path& path, std::span<const Graph> graphs,
                  const std::optional<json>& manifest) {
  std::string out = "[";
  for (std::size_t i = 0; i < graphs.size(); ++i) {
    out += i == 0 ? "\n" : ",\n";
    out += graph_to_json(graphs[i]).dump();
  }
  out += "\n]\n";
  write_text(path, out);
  if (manifest) write_text(manifest_path(path), manifest->dump(2) + "\n");
}

std::vector<Graph> load_dataset(const std::filesystem::path& path) {
  const std::string text = read_text(path);
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(path.string() + ": " + line_col(text, e.byte == 0 ? 0 : e.byte - 1) +
                     ": " + e.what());
  }
  if (!j.is_array()) throw ParseError(path.string() + ": expected a JSON array of graphs");
  std::vector<Graph> graphs;
  graphs.reserve(j.size());
  for (std::size_t i = 0; i < j.size(); ++i) {
    graphs.push_back(graph_from_json(j[i], path.string() + ": graph[" + std::to_string(i) + "]"));
  }
  return graphs;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("cannot open '" + path.string() + "' for writing");
  os << text;
  if (!os) throw IoError("failed writing '" + path.string() + "'");
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open '" + path.string() + "' for reading");
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

}  // namespace matchx
