#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "matchx/graph.hpp"

namespace matchx {

enum class Motif { house, cycle, grid };

std::string_view to_string(Motif m);
Motif parse_motif(std::string_view s);

/// Node count of each motif: house 5, cycle 6, grid 9.
std::size_t motif_size(Motif m);

/// Edge list of the motif on nodes 0..size-1.
std::vector<std::pair<std::size_t, std::size_t>> motif_edges(Motif m);

struct DatasetSpec {
  std::size_t n_graphs = 300;
  std::size_t base_min = 15;
  std::size_t base_max = 25;
  std::vector<Motif> motifs{Motif::house, Motif::cycle};
  std::size_t attach_edges = 1;
  std::size_t degree_cap = 10;  // one-hot width is degree_cap + 1
  std::uint64_t seed = 0;
  std::string id_prefix = "g";

  void validate() const;
};

/// "ba2": house vs cycle. "ba3": house, cycle, grid.
DatasetSpec preset(std::string_view name);

/// Barabasi-Albert base (m = 2) with one planted motif per graph. Graph i
/// gets class i mod |motifs|; motif nodes follow the base nodes and form
/// gt_nodes.
std::vector<Graph> gen_motif_dataset(const DatasetSpec& spec);

nlohmann::json spec_to_json(const DatasetSpec& spec);

}  // namespace matchx
