#include "matchx/graph.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <string>
#include <utility>

#include "matchx/errors.hpp"

namespace matchx {

NodeSet::NodeSet(std::vector<std::size_t> nodes) : nodes_(std::move(nodes)) {
  std::sort(nodes_.begin(), nodes_.end());
  if (std::adjacent_find(nodes_.begin(), nodes_.end()) != nodes_.end()) {
    throw InvalidNodeSet("node set contains duplicate indices");
  }
}

NodeSet NodeSet::all(std::size_t n) {
  std::vector<std::size_t> v(n);
  for (std::size_t i = 0; i < n; ++i) v[i] = i;
  return NodeSet(std::move(v));
}

bool NodeSet::contains(std::size_t v) const {
  return std::binary_search(nodes_.begin(), nodes_.end(), v);
}

void NodeSet::check_against(std::size_t n) const {
  if (!nodes_.empty() && nodes_.back() >= n) {
    throw InvalidNodeSet("node index " + std::to_string(nodes_.back()) +
                         " out of range for graph with " + std::to_string(n) + " nodes");
  }
}

std::size_t intersection_size(const NodeSet& a, const NodeSet& b) {
  std::size_t count = 0;
  auto ia = a.begin();
  auto ib = b.begin();
  while (ia != a.end() && ib != b.end()) {
    if (*ia < *ib) {
      ++ia;
    } else if (*ib < *ia) {
      ++ib;
    } else {
      ++count;
      ++ia;
      ++ib;
    }
  }
  return count;
}

Graph::Graph(std::string id, Matrix features, std::vector<Edge> edges, std::optional<int> label,
             std::optional<NodeSet> gt_nodes)
    : id_(std::move(id)),
      features_(std::move(features)),
      edges_(std::move(edges)),
      label_(label),
      gt_nodes_(std::move(gt_nodes)) {
  const std::size_t n = num_nodes();
  if (!features_.allFinite()) throw InvalidGraph("graph '" + id_ + "': non-finite node feature");
  if (label_ && *label_ < 0) throw InvalidGraph("graph '" + id_ + "': negative label");
  std::set<std::pair<std::size_t, std::size_t>> seen;
  for (std::size_t k = 0; k < edges_.size(); ++k) {
    Edge& e = edges_[k];
    if (e.u > e.v) std::swap(e.u, e.v);
    const std::string where = "graph '" + id_ + "' edge " + std::to_string(k);
    if (e.v >= n) throw InvalidGraph(where + ": endpoint out of range");
    if (e.u == e.v) throw InvalidGraph(where + ": self-loop");
    if (!std::isfinite(e.w)) throw InvalidGraph(where + ": non-finite weight");
    if (!seen.emplace(e.u, e.v).second) throw InvalidGraph(where + ": duplicate edge");
    if (k == 0) {
      edge_width_ = e.feat.size();
    } else if (e.feat.size() != edge_width_) {
      throw InvalidGraph(where + ": inconsistent edge feature width");
    }
    for (double f : e.feat) {
      if (!std::isfinite(f)) throw InvalidGraph(where + ": non-finite edge feature");
    }
  }
  if (gt_nodes_) {
    try {
      gt_nodes_->check_against(n);
    } catch (const InvalidNodeSet& ex) {
      throw InvalidGraph("graph '" + id_ + "' gt_nodes: " + ex.what());
    }
  }
}

std::vector<std::size_t> Graph::degrees() const {
  std::vector<std::size_t> deg(num_nodes(), 0);
  for (const Edge& e : edges_) {
    ++deg[e.u];
    ++deg[e.v];
  }
  return deg;
}

Graph Graph::with_id(std::string id) const {
  Graph g = *this;
  g.id_ = std::move(id);
  return g;
}

Graph Graph::with_label(std::optional<int> label) const {
  Graph g = *this;
  g.label_ = label;
  return g;
}

Graph Graph::with_weights(std::span<const double> weights) const {
  if (weights.size() != edges_.size()) throw ShapeError("weight count does not match edge count");
  Graph g = *this;
  for (std::size_t k = 0; k < weights.size(); ++k) g.edges_[k].w = weights[k];
  return g;
}

bool operator==(const Graph& a, const Graph& b) {
  if (a.features_.rows() != b.features_.rows() || a.features_.cols() != b.features_.cols()) {
    return false;
  }
  return a.id_ == b.id_ && a.features_ == b.features_ && a.edges_ == b.edges_ &&
         a.label_ == b.label_ && a.gt_nodes_ == b.gt_nodes_;
}

Graph induced_subgraph(const Graph& g, const NodeSet& s) {
  s.check_against(g.num_nodes());
  constexpr std::size_t kAbsent = static_cast<std::size_t>(-1);
  std::vector<std::size_t> remap(g.num_nodes(), kAbsent);
  Matrix features(static_cast<Eigen::Index>(s.size()), g.features().cols());
  for (std::size_t k = 0; k < s.size(); ++k) {
    remap[s[k]] = k;
    features.row(static_cast<Eigen::Index>(k)) = g.features().row(static_cast<Eigen::Index>(s[k]));
  }
  std::vector<Edge> edges;
  for (const Edge& e : g.edges()) {
    if (remap[e.u] != kAbsent && remap[e.v] != kAbsent) {
      edges.push_back(Edge{remap[e.u], remap[e.v], e.w, e.feat});
    }
  }
  std::optional<NodeSet> gt;
  if (g.gt_nodes()) {
    std::vector<std::size_t> kept;
    for (std::size_t v : *g.gt_nodes()) {
      if (remap[v] != kAbsent) kept.push_back(remap[v]);
    }
    gt = NodeSet(std::move(kept));
  }
  return Graph(g.id(), std::move(features), std::move(edges), g.label(), std::move(gt));
}

NodeSet complement_nodes(const Graph& g, const NodeSet& s) {
  s.check_against(g.num_nodes());
  std::vector<std::size_t> rest;
  rest.reserve(g.num_nodes() - s.size());
  for (std::size_t v = 0; v < g.num_nodes(); ++v) {
    if (!s.contains(v)) rest.push_back(v);
  }
  return NodeSet(std::move(rest));
}

}  // namespace matchx
