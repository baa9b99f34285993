#include "matchx/explainer.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>
#include <string>

#include "matchx/errors.hpp"
#include "matchx/rng.hpp"

namespace matchx {
namespace {

constexpr double kRatioSlack = 1e-9;

struct Candidate {
  std::size_t ref = 0;
  MatchResult match;
  double delta = 0.0;
};

// Total order used to pick the winner: larger delta, then smaller d_g, then
// the lexicographically smaller node set, then the earlier reference.
bool better(const Candidate& a, const Candidate& b) {
  if (a.delta != b.delta) return a.delta > b.delta;
  if (a.match.d_g != b.match.d_g) return a.match.d_g < b.match.d_g;
  if (a.match.nodes != b.match.nodes) return a.match.nodes < b.match.nodes;
  return a.ref < b.ref;
}

bool closer(const Candidate& a, const Candidate& b) {
  if (a.match.d_g != b.match.d_g) return a.match.d_g < b.match.d_g;
  if (a.match.nodes != b.match.nodes) return a.match.nodes < b.match.nodes;
  return a.ref < b.ref;
}

std::vector<std::size_t> sweep_indices(const ReferenceSet& refs, const Graph& g,
                                       const ExplainConfig& cfg) {
  std::vector<std::size_t> idx;
  if (cfg.reference_sample && *cfg.reference_sample < 1.0) {
    const auto r = refs.size();
    const auto take = std::max<std::size_t>(
        1, static_cast<std::size_t>(std::ceil(*cfg.reference_sample * static_cast<double>(r) -
                                              kRatioSlack)));
    Rng rng(derive_seed(cfg.seed, "explain", hash_name(g.id())));
    idx = rng.sample(r, take);
  } else {
    idx.resize(refs.size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  }
  return idx;
}

}  // namespace

std::size_t budget_for_ratio(double rho, std::size_t n) {
  if (n == 0) return 0;
  const double raw = std::ceil(rho * static_cast<double>(n) - kRatioSlack);
  if (raw < 1.0) return 1;
  if (raw > static_cast<double>(n)) return n;
  return static_cast<std::size_t>(raw);
}

Budget Budget::nodes(std::size_t k) {
  Budget b;
  b.k_ = k;
  return b;
}

Budget Budget::ratio(double rho) {
  if (!(rho > 0.0 && rho <= 1.0)) throw BudgetError("ratio must lie in (0, 1]");
  Budget b;
  b.ratio_ = rho;
  return b;
}

std::size_t Budget::resolve(std::size_t n) const {
  if (ratio_) return budget_for_ratio(*ratio_, n);
  if (k_ < 1 || k_ > n) {
    throw BudgetError("budget K=" + std::to_string(k_) + " outside [1, " + std::to_string(n) +
                      "]");
  }
  return k_;
}

void ExplainConfig::validate() const {
  if (reference_sample && !(*reference_sample > 0.0 && *reference_sample <= 1.0)) {
    throw BudgetError("reference_sample must lie in (0, 1]");
  }
}

ReferenceSet ReferenceSet::build(const Model& m, std::vector<Graph> graphs, Exec exec) {
  ReferenceSet r;
  r.graphs_ = std::move(graphs);
  r.predicted_.resize(r.graphs_.size());
  r.embeddings_.resize(r.graphs_.size());
  parallel_for(r.graphs_.size(), exec, [&](std::size_t i) {
    r.embeddings_[i] = forward_embed(m, r.graphs_[i]);
    r.predicted_[i] = predict_class(m, r.graphs_[i]);
  });
  r.fingerprint_ = m.fingerprint();
  return r;
}

std::optional<std::size_t> ReferenceSet::find(const std::string& id) const {
  for (std::size_t i = 0; i < graphs_.size(); ++i) {
    if (graphs_[i].id() == id) return i;
  }
  return std::nullopt;
}

void ReferenceSet::check_model(const Model& m) const {
  if (m.fingerprint() != fingerprint_) {
    throw ModelMismatch("reference set was built under a different model");
  }
}

bool qualify_counterpart(const Model& m, const Graph& g, const Graph& g2, std::size_t k) {
  if (g2.id() == g.id() || g2.num_nodes() < k) return false;
  return predict_class(m, g) == predict_class(m, g2);
}

Correspondence match_embeddings(const Matrix& emb_g, const Matrix& emb_g2, std::size_t k,
                                Metric metric, Exec exec) {
  return greedy_match(pairwise_distances(emb_g, emb_g2, metric, exec), k);
}

MatchResult match_pair(const Model& m, const Graph& g, const Graph& g2, std::size_t k,
                       Metric metric) {
  const Correspondence c = match_embeddings(forward_embed(m, g), forward_embed(m, g2), k, metric);
  MatchResult r{c.left_nodes(), c.total_distance, false, c.rounds};
  r.verified = predict_class(m, induced_subgraph(g, r.nodes)) == predict_class(m, g);
  return r;
}

int target_class(const Model& m, const Graph& g) {
  if (g.label() && static_cast<std::size_t>(*g.label()) < m.num_classes()) return *g.label();
  return predict_class(m, g);
}

double delta_score(const Model& m, const Graph& g, const NodeSet& s) {
  s.check_against(g.num_nodes());
  const int c = target_class(m, g);
  const double full = forward_predict(m, g)[c];
  const double rest = forward_predict(m, induced_subgraph(g, complement_nodes(g, s)))[c];
  return full - rest;
}

Explanation explain(const Model& m, const Graph& g, const ReferenceSet& refs,
                    const ExplainConfig& cfg) {
  cfg.validate();
  refs.check_model(m);
  const std::size_t k = cfg.budget.resolve(g.num_nodes());
  const Matrix emb_g = forward_embed(m, g);
  const int predicted = predict_class(m, g);
  const int c_star = target_class(m, g);
  const double p_full = forward_predict(m, g)[c_star];
  const std::vector<std::size_t> sweep = sweep_indices(refs, g, cfg);

  // One slot per swept reference, filled independently and reduced in order.
  std::vector<std::optional<Candidate>> slots(sweep.size());
  parallel_for(sweep.size(), cfg.exec, [&](std::size_t s) {
    const std::size_t r = sweep[s];
    const Graph& g2 = refs.graph(r);
    if (g2.id() == g.id() || g2.num_nodes() < k || refs.predicted(r) != predicted) return;
    const Correspondence corr = match_embeddings(emb_g, refs.embedding(r), k, cfg.metric);
    Candidate cand{r, MatchResult{corr.left_nodes(), corr.total_distance, false, corr.rounds}};
    const Graph sub = induced_subgraph(g, cand.match.nodes);
    cand.match.verified = predict_class(m, sub) == predicted;
    const Graph rest = induced_subgraph(g, complement_nodes(g, cand.match.nodes));
    cand.delta = p_full - forward_predict(m, rest)[c_star];
    slots[s] = std::move(cand);
  });

  ExplainCost cost;
  cost.qualifications = sweep.size();
  const Candidate* best_verified = nullptr;
  const Candidate* closest = nullptr;
  for (const auto& slot : slots) {
    if (!slot) continue;
    ++cost.matchings;
    cost.matching_rounds += slot->match.rounds;
    // Identical node sets share delta, so duplicates never change the winner;
    // the ordering keeps the copy with the smallest d_g.
    if (slot->match.verified && (!best_verified || better(*slot, *best_verified))) {
      best_verified = &*slot;
    }
    if (!closest || closer(*slot, *closest)) closest = &*slot;
  }
  if (closest == nullptr) {
    throw NoQualifiedCounterpart("no qualified counterpart for graph '" + g.id() + "'");
  }
  const Candidate& pick = best_verified ? *best_verified : *closest;
  Explanation e;
  e.graph_id = g.id();
  e.nodes = pick.match.nodes;
  e.counterpart_id = refs.graph(pick.ref).id();
  e.d_g = pick.match.d_g;
  e.delta = pick.delta;
  e.verified = pick.match.verified;
  e.cost = cost;
  return e;
}

Explanation explain_random(const Graph& g, std::size_t k, std::uint64_t seed) {
  if (k < 1 || k > g.num_nodes()) {
    throw BudgetError("budget K=" + std::to_string(k) + " outside [1, " +
                      std::to_string(g.num_nodes()) + "]");
  }
  Rng rng(derive_seed(seed, "random-explainer", hash_name(g.id())));
  Explanation e;
  e.graph_id = g.id();
  e.nodes = NodeSet(rng.sample(g.num_nodes(), k));
  return e;
}

Explanation explain_random(const Model& m, const Graph& g, std::size_t k, std::uint64_t seed) {
  Explanation e = explain_random(g, k, seed);
  e.delta = delta_score(m, g, e.nodes);
  e.verified = predict_class(m, induced_subgraph(g, e.nodes)) == predict_class(m, g);
  return e;
}

Explanation explain_sa(const Model& m, const Graph& g, std::size_t k) {
  if (g.num_edges() == 0) {
    throw EmptySaliency("graph '" + g.id() + "' has no edges to score");
  }
  if (k < 1 || k > g.num_nodes()) {
    throw BudgetError("budget K=" + std::to_string(k) + " outside [1, " +
                      std::to_string(g.num_nodes()) + "]");
  }
  const int predicted = predict_class(m, g);
  const std::vector<double> sal = edge_saliency(m, g, predicted);
  std::vector<double> score(g.num_nodes(), 0.0);
  std::size_t idx = 0;
  for (const Edge& e : g.edges()) {
    score[e.u] += std::abs(sal[idx]);
    score[e.v] += std::abs(sal[idx]);
    ++idx;
  }
  std::vector<std::size_t> order(g.num_nodes());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return score[a] > score[b]; });
  order.resize(k);
  Explanation e;
  e.graph_id = g.id();
  e.nodes = NodeSet(std::move(order));
  e.delta = delta_score(m, g, e.nodes);
  e.verified = predict_class(m, induced_subgraph(g, e.nodes)) == predicted;
  return e;
}

nlohmann::json explanation_to_json(const Explanation& e) {
  return {{"graph_id", e.graph_id},   {"nodes", e.nodes.indices()},
          {"counterpart_id", e.counterpart_id}, {"delta", e.delta},
          {"d_g", e.d_g},             {"verified", e.verified}};
}

std::string explanation_to_dot(const Graph& g, const Explanation& e) {
  std::ostringstream os;
  std::string name = g.id();
  std::replace(name.begin(), name.end(), '"', '\'');
  os << "graph \"" << name << "\" {\n";
  os << "  node [shape=circle];\n";
  for (std::size_t v = 0; v < g.num_nodes(); ++v) {
    os << "  " << v;
    if (e.nodes.contains(v)) os << " [style=filled, fillcolor=\"#f4a261\"]";
    os << ";\n";
  }
  for (const Edge& edge : g.edges()) {
    os << "  " << edge.u << " -- " << edge.v;
    if (e.nodes.contains(edge.u) && e.nodes.contains(edge.v)) os << " [penwidth=2]";
    os << ";\n";
  }
  os << "}\n";
  return os.str();
}

}  // namespace matchx
