#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string_view>

#include "matchx/explainer.hpp"
#include "matchx/gnn.hpp"
#include "matchx/graph.hpp"
#include "matchx/rng.hpp"

namespace matchx {

enum class Strategy { none, dropnode, fpdrop, matchdrop };

std::string_view to_string(Strategy s);
Strategy parse_strategy(std::string_view s);

struct AugmentConfig {
  Strategy strategy = Strategy::none;
  double rho = 0.95;
  std::optional<int> warmup_epochs;  // default: 10% of the training epochs
  std::uint64_t seed = 0;
  Metric metric = Metric::euclidean;

  int resolved_warmup(int epochs) const;
  void validate() const;
};

/// floor((1 - rho) * n), with the same slack as budget_for_ratio.
std::size_t drop_count(double rho, std::size_t n);

/// Induced subgraph on a uniform random budget_for_ratio(rho, n)-subset.
Graph dropnode_subgraph(const Graph& g, double rho, Rng& rng);

/// Node set kept by MatchDrop: the matched nodes of g against a random
/// same-label counterpart from `pool`. Empty optional when no counterpart
/// qualifies.
std::optional<NodeSet> matchdrop_nodes(const Model& m, const Graph& g,
                                       const ReferenceSet& pool, double rho, Rng& rng,
                                       Metric metric = Metric::euclidean);

/// Keeps the matched part of g. Falls back to dropnode_subgraph (with a
/// warning) when no same-label counterpart has enough nodes.
Graph matchdrop_subgraph(const Model& m, const Graph& g, const ReferenceSet& pool,
                         double rho, Rng& rng, Metric metric = Metric::euclidean);

/// Opposite of MatchDrop: removes drop_count(rho, n) random nodes from inside
/// the matched part and keeps everything else.
Graph fpdrop_subgraph(const Model& m, const Graph& g, const ReferenceSet& pool, double rho,
                      Rng& rng, Metric metric = Metric::euclidean);

/// Augmented copy of every graph for one epoch. Graph i draws from its own
/// stream derived from (seed, epoch, i), so the result does not depend on
/// the thread count.
std::vector<Graph> augment_epoch(const Model& m, std::span<const Graph> train,
                                 const AugmentConfig& acfg, int epoch,
                                 Exec exec = Exec::parallel);

/// warmup_epochs of plain training, then each epoch trains on freshly
/// augmented graphs produced under the current model.
TrainResult train_with_augmentation(Model m, std::span<const Graph> train,
                                    const TrainConfig& cfg, const AugmentConfig& acfg,
                                    const EpochCallback& on_epoch = {},
                                    Exec exec = Exec::parallel);

}  // namespace matchx
