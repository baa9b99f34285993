#include "matchx/augment.hpp"

#include <cmath>
#include <string>

#include "matchx/errors.hpp"
#include "matchx/log.hpp"

namespace matchx {
namespace {

constexpr double kRatioSlack = 1e-9;

void check_rho(double rho) {
  if (!(rho > 0.0 && rho <= 1.0)) throw BudgetError("rho must lie in (0, 1]");
}

}  // namespace

std::string_view to_string(Strategy s) {
  switch (s) {
    case Strategy::none:
      return "none";
    case Strategy::dropnode:
      return "dropnode";
    case Strategy::fpdrop:
      return "fpdrop";
    case Strategy::matchdrop:
      return "matchdrop";
  }
  return "?";
}

Strategy parse_strategy(std::string_view s) {
  if (s == "none") return Strategy::none;
  if (s == "dropnode") return Strategy::dropnode;
  if (s == "fpdrop") return Strategy::fpdrop;
  if (s == "matchdrop") return Strategy::matchdrop;
  throw DataError("unknown strategy '" + std::string(s) + "'");
}

int AugmentConfig::resolved_warmup(int epochs) const {
  return warmup_epochs ? *warmup_epochs : epochs / 10;
}

void AugmentConfig::validate() const {
  check_rho(rho);
  if (warmup_epochs && *warmup_epochs < 0) throw BudgetError("warmup_epochs must be >= 0");
}

std::size_t drop_count(double rho, std::size_t n) {
  const double raw = std::floor((1.0 - rho) * static_cast<double>(n) + kRatioSlack);
  return raw <= 0.0 ? 0 : std::min(n, static_cast<std::size_t>(raw));
}

Graph dropnode_subgraph(const Graph& g, double rho, Rng& rng) {
  check_rho(rho);
  const std::size_t k = budget_for_ratio(rho, g.num_nodes());
  if (k >= g.num_nodes()) return g;
  return induced_subgraph(g, NodeSet(rng.sample(g.num_nodes(), k)));
}

std::optional<NodeSet> matchdrop_nodes(const Model& m, const Graph& g, const ReferenceSet& pool,
                                       double rho, Rng& rng, Metric metric) {
  check_rho(rho);
  if (!g.label()) throw MissingLabel("graph '" + g.id() + "' has no label");
  const std::size_t k = budget_for_ratio(rho, g.num_nodes());
  if (k >= g.num_nodes()) return NodeSet::all(g.num_nodes());
  std::vector<std::size_t> qualified;
  for (std::size_t i = 0; i < pool.size(); ++i) {
    const Graph& g2 = pool.graph(i);
    if (g2.label() == g.label() && g2.id() != g.id() && g2.num_nodes() >= k) {
      qualified.push_back(i);
    }
  }
  if (qualified.empty()) return std::nullopt;
  const std::size_t pick = qualified[rng.below(qualified.size())];
  const auto self = pool.find(g.id());
  const Matrix emb_g = self ? pool.embedding(*self) : forward_embed(m, g);
  return match_embeddings(emb_g, pool.embedding(pick), k, metric).left_nodes();
}

Graph matchdrop_subgraph(const Model& m, const Graph& g, const ReferenceSet& pool, double rho,
                         Rng& rng, Metric metric) {
  const auto kept = matchdrop_nodes(m, g, pool, rho, rng, metric);
  if (!kept) {
    warn("matchdrop: no counterpart for graph '" + g.id() + "', falling back to dropnode");
    return dropnode_subgraph(g, rho, rng);
  }
  if (kept->size() == g.num_nodes()) return g;
  return induced_subgraph(g, *kept);
}

Graph fpdrop_subgraph(const Model& m, const Graph& g, const ReferenceSet& pool, double rho,
                      Rng& rng, Metric metric) {
  const std::size_t drop = drop_count(rho, g.num_nodes());
  if (drop == 0) return g;
  const auto explanatory = matchdrop_nodes(m, g, pool, rho, rng, metric);
  if (!explanatory) {
    warn("fpdrop: no counterpart for graph '" + g.id() + "', falling back to dropnode");
    return dropnode_subgraph(g, rho, rng);
  }
  if (drop > explanatory->size()) {
    warn("fpdrop: drop count exceeds the explanatory set of graph '" + g.id() +
         "', removing all of it");
  }
  std::vector<std::size_t> removed;
  for (std::size_t pos : rng.sample(explanatory->size(), drop)) {
    removed.push_back((*explanatory)[pos]);
  }
  return induced_subgraph(g, complement_nodes(g, NodeSet(std::move(removed))));
}

std::vector<Graph> augment_epoch(const Model& m, std::span<const Graph> train,
                                 const AugmentConfig& acfg, int epoch, Exec exec) {
  acfg.validate();
  std::vector<Graph> out(train.size());
  const bool needs_pool =
      acfg.strategy == Strategy::matchdrop || acfg.strategy == Strategy::fpdrop;
  const ReferenceSet pool = needs_pool
                                ? ReferenceSet::build(m, {train.begin(), train.end()}, exec)
                                : ReferenceSet{};
  const std::uint64_t epoch_seed =
      derive_seed(acfg.seed, "augment", static_cast<std::uint64_t>(epoch));
  parallel_for(train.size(), exec, [&](std::size_t i) {
    Rng rng(derive_seed(epoch_seed, "graph", i));
    switch (acfg.strategy) {
      case Strategy::none:
        out[i] = train[i];
        break;
      case Strategy::dropnode:
        out[i] = dropnode_subgraph(train[i], acfg.rho, rng);
        break;
      case Strategy::matchdrop:
        out[i] = matchdrop_subgraph(m, train[i], pool, acfg.rho, rng, acfg.metric);
        break;
      case Strategy::fpdrop:
        out[i] = fpdrop_subgraph(m, train[i], pool, acfg.rho, rng, acfg.metric);
        break;
    }
  });
  return out;
}

TrainResult train_with_augmentation(Model m, std::span<const Graph> train, const TrainConfig& cfg,
                                    const AugmentConfig& acfg, const EpochCallback& on_epoch,
                                    Exec exec) {
  acfg.validate();
  if (acfg.strategy == Strategy::none) return train_supervised(std::move(m), train, cfg, on_epoch, exec);
  cfg.validate();
  Trainer trainer(std::move(m), cfg, exec);
  const int warmup = acfg.resolved_warmup(cfg.epochs);
  std::vector<double> history;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    if (epoch < warmup) {
      history.push_back(trainer.run_epoch(train));
    } else {
      const auto augmented = augment_epoch(trainer.model(), train, acfg, epoch, exec);
      history.push_back(trainer.run_epoch(augmented));
    }
    if (on_epoch) on_epoch(epoch, history.back(), trainer.model());
  }
  return {trainer.release(), std::move(history)};
}

}  // namespace matchx
