#pragma once

#include <cstddef>
#include <initializer_list>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace matchx {

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;

/// Sorted set of unique node indices.
class NodeSet {
 public:
  NodeSet() = default;
  /// Sorts the input. Duplicates raise InvalidNodeSet.
  NodeSet(std::vector<std::size_t> nodes);
  NodeSet(std::initializer_list<std::size_t> nodes)
      : NodeSet(std::vector<std::size_t>(nodes)) {}

  static NodeSet all(std::size_t n);

  std::size_t size() const { return nodes_.size(); }
  bool empty() const { return nodes_.empty(); }
  bool contains(std::size_t v) const;
  std::size_t operator[](std::size_t i) const { return nodes_[i]; }
  auto begin() const { return nodes_.begin(); }
  auto end() const { return nodes_.end(); }
  const std::vector<std::size_t>& indices() const { return nodes_; }

  /// Throws InvalidNodeSet when an index is >= n.
  void check_against(std::size_t n) const;

  friend bool operator==(const NodeSet&, const NodeSet&) = default;
  friend auto operator<=>(const NodeSet& a, const NodeSet& b) {
    return a.nodes_ <=> b.nodes_;
  }

 private:
  std::vector<std::size_t> nodes_;
};

std::size_t intersection_size(const NodeSet& a, const NodeSet& b);

struct Edge {
  std::size_t u = 0;
  std::size_t v = 0;
  double w = 1.0;
  std::vector<double> feat;  // empty when the graph has no edge features

  friend bool operator==(const Edge&, const Edge&) = default;
};

/// Immutable undirected attributed graph. Edges are stored once with u < v;
/// the constructor normalizes orientation and rejects self-loops, duplicate
/// edges, out-of-range endpoints and non-finite weights.
class Graph {
 public:
  Graph() = default;
  Graph(std::string id, Matrix features, std::vector<Edge> edges,
        std::optional<int> label = std::nullopt,
        std::optional<NodeSet> gt_nodes = std::nullopt);

  const std::string& id() const { return id_; }
  std::size_t num_nodes() const { return static_cast<std::size_t>(features_.rows()); }
  std::size_t num_edges() const { return edges_.size(); }
  std::size_t feature_width() const { return static_cast<std::size_t>(features_.cols()); }
  /// 0 when edges carry no feature vectors.
  std::size_t edge_feature_width() const { return edge_width_; }
  const Matrix& features() const { return features_; }
  std::span<const Edge> edges() const { return edges_; }
  const std::optional<int>& label() const { return label_; }
  const std::optional<NodeSet>& gt_nodes() const { return gt_nodes_; }
  std::vector<std::size_t> degrees() const;

  Graph with_id(std::string id) const;
  Graph with_label(std::optional<int> label) const;
  /// Same structure with edge weights replaced (one per edge, same order).
  Graph with_weights(std::span<const double> weights) const;

  friend bool operator==(const Graph&, const Graph&);

 private:
  std::string id_;
  Matrix features_;
  std::vector<Edge> edges_;
  std::optional<int> label_;
  std::optional<NodeSet> gt_nodes_;
  std::size_t edge_width_ = 0;
};

/// Node-induced subgraph on `s`, relabelled densely in ascending order.
/// Label and id are kept; gt_nodes are remapped to the surviving nodes.
Graph induced_subgraph(const Graph& g, const NodeSet& s);

/// V \ s.
NodeSet complement_nodes(const Graph& g, const NodeSet& s);

}  // namespace matchx
