#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "matchx/gnn.hpp"
#include "matchx/graph.hpp"
#include "matchx/matcher.hpp"
#include "matchx/parallel.hpp"

namespace matchx {

/// ceil(rho * n) clamped to [1, n]; 0 for the empty graph. A 1e-9 slack
/// absorbs representation error (0.3 * 10 must give 3, not 4).
std::size_t budget_for_ratio(double rho, std::size_t n);

/// Explanation size: an absolute node count K or a retaining ratio rho.
class Budget {
 public:
  static Budget nodes(std::size_t k);
  static Budget ratio(double rho);

  /// Throws BudgetError when an absolute K is 0 or exceeds n.
  std::size_t resolve(std::size_t n) const;
  bool is_ratio() const { return ratio_.has_value(); }
  double rho() const { return *ratio_; }
  std::size_t k() const { return k_; }

 private:
  std::optional<double> ratio_;
  std::size_t k_ = 0;
};

struct ExplainConfig {
  Budget budget = Budget::ratio(0.5);
  std::optional<double> reference_sample;  // fraction of the reference set
  std::uint64_t seed = 0;
  Metric metric = Metric::euclidean;
  Exec exec = Exec::parallel;

  void validate() const;
};

/// Work performed by one explain() call.
struct ExplainCost {
  std::size_t qualifications = 0;
  std::size_t matchings = 0;
  std::size_t matching_rounds = 0;
};

struct Explanation {
  std::string graph_id;
  NodeSet nodes;
  std::string counterpart_id;  // empty for explainers without a counterpart
  double d_g = 0.0;
  double delta = 0.0;
  bool verified = false;
  ExplainCost cost;
};

/// Graphs available as counterparts, with their predicted class and node
/// embeddings cached under one model.
class ReferenceSet {
 public:
  ReferenceSet() = default;
  static ReferenceSet build(const Model& m, std::vector<Graph> graphs,
                            Exec exec = Exec::parallel);

  std::size_t size() const { return graphs_.size(); }
  bool empty() const { return graphs_.empty(); }
  const Graph& graph(std::size_t i) const { return graphs_[i]; }
  int predicted(std::size_t i) const { return predicted_[i]; }
  const Matrix& embedding(std::size_t i) const { return embeddings_[i]; }
  std::uint64_t fingerprint() const { return fingerprint_; }
  std::optional<std::size_t> find(const std::string& id) const;

  /// Throws ModelMismatch when built under a different model.
  void check_model(const Model& m) const;

 private:
  std::vector<Graph> graphs_;
  std::vector<int> predicted_;
  std::vector<Matrix> embeddings_;
  std::uint64_t fingerprint_ = 0;
};

/// Same predicted class, different id, and at least k nodes in g2.
bool qualify_counterpart(const Model& m, const Graph& g, const Graph& g2, std::size_t k);

struct MatchResult {
  NodeSet nodes;  // matched nodes of the explained graph
  double d_g = 0.0;
  bool verified = false;
  std::size_t rounds = 0;
};

/// Greedy correspondence between the embeddings of g and g2; the matched
/// g-side nodes form the candidate. verified: the candidate alone keeps the
/// predicted class of g.
MatchResult match_pair(const Model& m, const Graph& g, const Graph& g2, std::size_t k,
                       Metric metric = Metric::euclidean);

/// match_pair on precomputed embeddings, without verification.
Correspondence match_embeddings(const Matrix& emb_g, const Matrix& emb_g2, std::size_t k,
                                Metric metric, Exec exec = Exec::serial);

/// Target class used for scoring: the label if present, else the prediction.
int target_class(const Model& m, const Graph& g);

/// p_c(g) - p_c(g minus s), with c = target_class(g).
double delta_score(const Model& m, const Graph& g, const NodeSet& s);

/// Sweeps the (optionally subsampled) reference set, keeps verified
/// candidates, and returns the one with the largest delta. Ties: smaller d_g,
/// then the lexicographically smaller node set. Without verified candidates
/// the smallest-d_g candidate is returned with verified = false.
Explanation explain(const Model& m, const Graph& g, const ReferenceSet& refs,
                    const ExplainConfig& cfg);

/// Uniform random k-subset. delta is left at 0.
Explanation explain_random(const Graph& g, std::size_t k, std::uint64_t seed);
/// As above, with delta filled in from the model.
Explanation explain_random(const Model& m, const Graph& g, std::size_t k, std::uint64_t seed);

/// Saliency baseline: node score is the summed |d logit / d w| over incident
/// edges for the predicted class; top-k nodes, ties to the smaller index.
Explanation explain_sa(const Model& m, const Graph& g, std::size_t k);

nlohmann::json explanation_to_json(const Explanation& e);

/// Graphviz rendering of g with explanation nodes filled.
std::string explanation_to_dot(const Graph& g, const Explanation& e);

}  // namespace matchx
