#pragma once

// Test-only builders and independent oracles. Nothing here calls into the
// code paths it is used to check (finite differences use only forward
// passes; the isomorphism check is plain permutation search).

#include <algorithm>
#include <cmath>
#include <numeric>
#include <utility>
#include <vector>

#include "matchx/datagen.hpp"
#include "matchx/gnn.hpp"
#include "matchx/graph.hpp"
#include "matchx/rng.hpp"

namespace matchx::testing {

inline Graph make_graph(std::string id, std::size_t n,
                        const std::vector<std::pair<std::size_t, std::size_t>>& edges,
                        std::size_t width = 3, std::optional<int> label = std::nullopt) {
  Matrix x = Matrix::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(width));
  for (std::size_t i = 0; i < n; ++i) {
    x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i % width)) = 1.0;
  }
  std::vector<Edge> es;
  for (auto [u, v] : edges) es.push_back(Edge{u, v, 1.0, {}});
  return Graph(std::move(id), std::move(x), std::move(es), label);
}

inline Graph with_features(const Graph& g, Matrix x) {
  std::vector<Edge> es(g.edges().begin(), g.edges().end());
  return Graph(g.id(), std::move(x), std::move(es), g.label(), g.gt_nodes());
}

/// Random connected graph with Gaussian-free uniform features and weights.
inline Graph random_graph(Rng& rng, std::string id, std::size_t n, std::size_t width,
                          double extra_edge_prob = 0.3, bool random_weights = true) {
  Matrix x(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(width));
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    for (Eigen::Index k = 0; k < x.cols(); ++k) x(i, k) = rng.uniform(-1.0, 1.0);
  }
  std::vector<Edge> es;
  for (std::size_t v = 1; v < n; ++v) {
    es.push_back(Edge{rng.below(v), v, random_weights ? rng.uniform(0.5, 1.5) : 1.0, {}});
  }
  for (std::size_t u = 0; u < n; ++u) {
    for (std::size_t v = u + 2; v < n; ++v) {
      const bool exists = std::any_of(es.begin(), es.end(), [&](const Edge& e) {
        return (e.u == u && e.v == v) || (e.u == v && e.v == u);
      });
      if (!exists && rng.uniform() < extra_edge_prob) {
        es.push_back(Edge{u, v, random_weights ? rng.uniform(0.5, 1.5) : 1.0, {}});
      }
    }
  }
  return Graph(std::move(id), std::move(x), std::move(es));
}

/// Node permutation: node v of g becomes perm[v].
inline Graph permute(const Graph& g, const std::vector<std::size_t>& perm) {
  Matrix x(g.features().rows(), g.features().cols());
  for (std::size_t v = 0; v < g.num_nodes(); ++v) {
    x.row(static_cast<Eigen::Index>(perm[v])) = g.features().row(static_cast<Eigen::Index>(v));
  }
  std::vector<Edge> es;
  for (const Edge& e : g.edges()) es.push_back(Edge{perm[e.u], perm[e.v], e.w, e.feat});
  return Graph(g.id(), std::move(x), std::move(es), g.label());
}

inline std::vector<std::size_t> random_permutation(Rng& rng, std::size_t n) {
  std::vector<std::size_t> p(n);
  std::iota(p.begin(), p.end(), std::size_t{0});
  rng.shuffle(p);
  return p;
}

/// Cross-entropy from a forward pass only.
inline double ce_loss(const Model& m, const Graph& g, int label) {
  return -std::log(forward_predict(m, g)[label]);
}

/// Central finite-difference gradient of the CE loss w.r.t. every parameter.
inline Vector fd_param_gradient(const Model& m, const Graph& g, int label, double h = 1e-5) {
  Model probe = m;
  Vector grad(m.params().size());
  for (Eigen::Index i = 0; i < grad.size(); ++i) {
    const double orig = probe.params()[i];
    probe.params()[i] = orig + h;
    const double up = ce_loss(probe, g, label);
    probe.params()[i] = orig - h;
    const double down = ce_loss(probe, g, label);
    probe.params()[i] = orig;
    grad[i] = (up - down) / (2.0 * h);
  }
  return grad;
}

/// Central finite-difference of logit_c w.r.t. every edge weight.
inline std::vector<double> fd_edge_gradient(const Model& m, const Graph& g, int c,
                                            double h = 1e-5) {
  std::vector<double> w;
  for (const Edge& e : g.edges()) w.push_back(e.w);
  std::vector<double> out;
  for (std::size_t k = 0; k < w.size(); ++k) {
    auto wp = w;
    wp[k] += h;
    auto wm = w;
    wm[k] -= h;
    const double up = forward_logits(m, g.with_weights(wp))[c];
    const double down = forward_logits(m, g.with_weights(wm))[c];
    out.push_back((up - down) / (2.0 * h));
  }
  return out;
}

/// Relative error with an absolute floor for near-zero components.
inline double rel_err(double analytic, double numeric) {
  return std::abs(analytic - numeric) / std::max(1e-6, std::abs(analytic) + std::abs(numeric));
}

/// Brute-force isomorphism test for small simple graphs given as edge lists.
inline bool isomorphic(std::size_t n, std::vector<std::pair<std::size_t, std::size_t>> a,
                       std::vector<std::pair<std::size_t, std::size_t>> b) {
  if (a.size() != b.size()) return false;
  auto norm = [](std::vector<std::pair<std::size_t, std::size_t>>& e) {
    for (auto& [u, v] : e) {
      if (u > v) std::swap(u, v);
    }
    std::sort(e.begin(), e.end());
  };
  norm(b);
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  do {
    std::vector<std::pair<std::size_t, std::size_t>> mapped;
    for (auto [u, v] : a) mapped.emplace_back(perm[u], perm[v]);
    norm(mapped);
    if (mapped == b) return true;
  } while (std::next_permutation(perm.begin(), perm.end()));
  return false;
}

/// Edgeless graph whose node features are given row by row.
inline Graph points(std::string id, const std::vector<std::vector<double>>& rows,
                    std::optional<int> label = std::nullopt) {
  Matrix x(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows[0].size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t k = 0; k < rows[i].size(); ++k) {
      x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = rows[i][k];
    }
  }
  return Graph(std::move(id), std::move(x), {}, label);
}

/// One layer with identity maps and zero eps: on edgeless graphs with
/// non-negative features the node embeddings equal the features. The head
/// is zero except for the bias, so every input predicts `favoured`.
inline Model identity_model(std::size_t width, std::size_t classes = 2, int favoured = 0) {
  Model m({width, width, classes}, Pooling::sum);
  const auto& L = m.layer(0);
  for (std::size_t k = 0; k < width; ++k) {
    m.params()[static_cast<Eigen::Index>(L.w1 + k * width + k)] = 1.0;
    m.params()[static_cast<Eigen::Index>(L.w2 + k * width + k)] = 1.0;
  }
  m.params()[static_cast<Eigen::Index>(m.head_bias_offset() + favoured)] = 1.0;
  return m;
}

struct Toy {
  std::vector<Graph> train;
  std::vector<Graph> test;
  Model model;
};

/// Small house-vs-cycle set with a trained default model, built once per
/// process.
inline const Toy& toy() {
  static const Toy t = [] {
    DatasetSpec spec = preset("ba2");
    spec.n_graphs = 200;
    spec.seed = 11;
    std::vector<Graph> all = gen_motif_dataset(spec);
    Toy r{{all.begin(), all.begin() + 160}, {all.begin() + 160, all.end()},
          default_model(all[0].feature_width(), 2, 3)};
    TrainConfig cfg;
    cfg.epochs = 60;
    r.model = train_supervised(r.model, r.train, cfg).model;
    return r;
  }();
  return t;
}

}  // namespace matchx::testing
