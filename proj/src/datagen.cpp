#include "matchx/datagen.hpp"

#include <algorithm>
#include <set>
#include <string>

#include "matchx/errors.hpp"
#include "matchx/parallel.hpp"
#include "matchx/rng.hpp"

namespace matchx {
namespace {

using EdgeList = std::vector<std::pair<std::size_t, std::size_t>>;

// Preferential attachment with m = 2 from a seed triangle.
EdgeList barabasi_albert(std::size_t n, Rng& rng) {
  constexpr std::size_t kAttach = 2;
  EdgeList edges{{0, 1}, {0, 2}, {1, 2}};
  std::vector<std::size_t> endpoints{0, 1, 0, 2, 1, 2};
  for (std::size_t t = kAttach + 1; t < n; ++t) {
    std::size_t targets[kAttach];
    std::size_t chosen = 0;
    while (chosen < kAttach) {
      const std::size_t c = endpoints[rng.below(endpoints.size())];
      if (std::find(targets, targets + chosen, c) == targets + chosen) targets[chosen++] = c;
    }
    for (std::size_t c : targets) {
      edges.emplace_back(c, t);
      endpoints.push_back(c);
      endpoints.push_back(t);
    }
  }
  return edges;
}

Graph make_graph(const DatasetSpec& spec, std::size_t index) {
  Rng rng(derive_seed(spec.seed, "data", index));
  const std::size_t cls = index % spec.motifs.size();
  const Motif motif = spec.motifs[cls];
  const std::size_t base = spec.base_min + rng.below(spec.base_max - spec.base_min + 1);
  EdgeList edges = barabasi_albert(base, rng);

  const std::size_t msize = motif_size(motif);
  for (auto [u, v] : motif_edges(motif)) edges.emplace_back(base + u, base + v);

  std::set<std::pair<std::size_t, std::size_t>> bridges;
  const std::size_t wanted = std::min(spec.attach_edges, base * msize);
  while (bridges.size() < wanted) {
    const std::size_t b = rng.below(base);
    const std::size_t mnode = base + rng.below(msize);
    if (bridges.emplace(b, mnode).second) edges.emplace_back(b, mnode);
  }

  const std::size_t n = base + msize;
  std::vector<std::size_t> degree(n, 0);
  std::vector<Edge> out;
  out.reserve(edges.size());
  for (auto [u, v] : edges) {
    ++degree[u];
    ++degree[v];
    out.push_back(Edge{u, v, 1.0, {}});
  }
  Matrix features = Matrix::Zero(static_cast<Eigen::Index>(n),
                                 static_cast<Eigen::Index>(spec.degree_cap + 1));
  for (std::size_t v = 0; v < n; ++v) {
    features(static_cast<Eigen::Index>(v),
             static_cast<Eigen::Index>(std::min(degree[v], spec.degree_cap))) = 1.0;
  }
  std::vector<std::size_t> gt(msize);
  for (std::size_t k = 0; k < msize; ++k) gt[k] = base + k;
  return Graph(spec.id_prefix + std::to_string(index), std::move(features), std::move(out),
               static_cast<int>(cls), NodeSet(std::move(gt)));
}

}  // namespace

std::string_view to_string(Motif m) {
  switch (m) {
    case Motif::house:
      return "house";
    case Motif::cycle:
      return "cycle";
    case Motif::grid:
      return "grid";
  }
  return "?";
}

Motif parse_motif(std::string_view s) {
  if (s == "house") return Motif::house;
  if (s == "cycle") return Motif::cycle;
  if (s == "grid") return Motif::grid;
  throw DataError("unknown motif '" + std::string(s) + "'");
}

std::size_t motif_size(Motif m) {
  switch (m) {
    case Motif::house:
      return 5;
    case Motif::cycle:
      return 6;
    case Motif::grid:
      return 9;
  }
  return 0;
}

std::vector<std::pair<std::size_t, std::size_t>> motif_edges(Motif m) {
  switch (m) {
    case Motif::house:
      // square 0-1-2-3 with the roof 4 on top of edge 0-1
      return {{0, 1}, {1, 2}, {2, 3}, {0, 3}, {0, 4}, {1, 4}};
    case Motif::cycle:
      return {{0, 1}, {1, 2}, {2, 3}, {3, 4}, {4, 5}, {0, 5}};
    case Motif::grid: {
      EdgeList e;
      for (std::size_t r = 0; r < 3; ++r) {
        for (std::size_t c = 0; c < 3; ++c) {
          const std::size_t v = r * 3 + c;
          if (c < 2) e.emplace_back(v, v + 1);
          if (r < 2) e.emplace_back(v, v + 3);
        }
      }
      return e;
    }
  }
  return {};
}

void DatasetSpec::validate() const {
  if (n_graphs < 1) throw DataError("n_graphs must be >= 1");
  if (base_min < 5) throw DataError("base_min must be >= 5");
  if (base_max < base_min) throw DataError("base_max must be >= base_min");
  if (motifs.empty()) throw DataError("at least one motif is required");
}

DatasetSpec preset(std::string_view name) {
  DatasetSpec spec;
  if (name == "ba2") {
    spec.motifs = {Motif::house, Motif::cycle};
  } else if (name == "ba3") {
    spec.motifs = {Motif::house, Motif::cycle, Motif::grid};
  } else {
    throw DataError("unknown preset '" + std::string(name) + "'");
  }
  return spec;
}

std::vector<Graph> gen_motif_dataset(const DatasetSpec& spec) {
  spec.validate();
  std::vector<Graph> graphs(spec.n_graphs);
  parallel_for(spec.n_graphs, Exec::parallel,
               [&](std::size_t i) { graphs[i] = make_graph(spec, i); });
  return graphs;
}

nlohmann::json spec_to_json(const DatasetSpec& spec) {
  std::vector<std::string> motifs;
  for (Motif m : spec.motifs) motifs.emplace_back(to_string(m));
  return {{"n_graphs", spec.n_graphs},         {"base_min", spec.base_min},
          {"base_max", spec.base_max},         {"motifs", motifs},
          {"attach_edges", spec.attach_edges}, {"degree_cap", spec.degree_cap},
          {"seed", spec.seed},                 {"id_prefix", spec.id_prefix}};
}

}  // namespace matchx
