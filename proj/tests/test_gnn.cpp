#include <gtest/gtest.h>

#include <cstdio>
#include <filesystem>

#include "matchx/datagen.hpp"
#include "matchx/errors.hpp"
#include "matchx/gnn.hpp"
#include "support.hpp"

namespace matchx {
namespace {

using testing::make_graph;

Model random_model(std::uint64_t seed, std::size_t in = 3, std::size_t classes = 3,
                   Pooling pooling = Pooling::sum, std::size_t edge_dim = 0) {
  Model m = Model::initialized({in, 5, 4, classes}, pooling, seed, edge_dim);
  // Non-zero biases and eps so every parameter block is exercised.
  Rng rng(seed + 99);
  for (std::size_t l = 0; l < m.num_layers(); ++l) {
    const auto& L = m.layer(l);
    m.params()[static_cast<Eigen::Index>(L.eps)] = rng.uniform(-0.3, 0.3);
    for (std::size_t k = 0; k < L.out; ++k) {
      m.params()[static_cast<Eigen::Index>(L.b1 + k)] = rng.uniform(-0.2, 0.2);
      m.params()[static_cast<Eigen::Index>(L.b2 + k)] = rng.uniform(-0.2, 0.2);
    }
  }
  return m;
}

TEST(Model, ParameterCountFollowsLayout) {
  Model m({3, 5, 4, 2}, Pooling::sum);
  // layer0: 1 + 5*3 + 5 + 25 + 5, layer1: 1 + 4*5 + 4 + 16 + 4, head: 2*4 + 2
  EXPECT_EQ(m.num_params(), 51u + 45u + 10u);
  EXPECT_EQ(m.embedding_width(), 4u);
  EXPECT_THROW(Model({3, 2}, Pooling::sum), ShapeError);
}

TEST(ForwardEmbed, ShapeMismatchThrows) {
  Model m = random_model(1, 4);
  EXPECT_THROW(forward_embed(m, make_graph("g", 3, {{0, 1}}, 3)), ShapeError);
}

TEST(ForwardEmbed, AutomorphicNodesShareEmbeddings) {
  // Star centre 0 with leaves 1, 2 carrying equal features.
  Matrix x(3, 3);
  x << 1, 0, 0, 0, 1, 0, 0, 1, 0;
  Graph g("s", x, {Edge{0, 1, 1.0, {}}, Edge{0, 2, 1.0, {}}});
  const Matrix h = forward_embed(random_model(2), g);
  EXPECT_EQ(h.row(1), h.row(2));
}

TEST(ForwardEmbed, PermutationEquivariant) {
  Rng rng(3);
  for (int trial = 0; trial < 10; ++trial) {
    const Model m = random_model(trial);
    const Graph g = testing::random_graph(rng, "g", 4 + rng.below(6), 3);
    const auto perm = testing::random_permutation(rng, g.num_nodes());
    const Matrix h = forward_embed(m, g);
    const Matrix hp = forward_embed(m, testing::permute(g, perm));
    for (std::size_t v = 0; v < g.num_nodes(); ++v) {
      EXPECT_LT((h.row(static_cast<Eigen::Index>(v)) -
                 hp.row(static_cast<Eigen::Index>(perm[v])))
                    .norm(),
                1e-12);
    }
  }
}

TEST(ForwardEmbed, ZeroModelGivesZeros) {
  Rng rng(4);
  const Graph g = testing::random_graph(rng, "g", 6, 3);
  EXPECT_EQ(forward_embed(Model({3, 5, 4, 2}, Pooling::sum), g).norm(), 0.0);
}

TEST(ForwardPredict, IsADistribution) {
  Rng rng(5);
  for (int trial = 0; trial < 10; ++trial) {
    const Vector p = forward_predict(random_model(trial), testing::random_graph(rng, "g", 7, 3));
    EXPECT_NEAR(p.sum(), 1.0, 1e-12);
    EXPECT_GT(p.minCoeff(), 0.0);
    EXPECT_LT(p.maxCoeff(), 1.0);
  }
}

TEST(ForwardPredict, PermutationInvariant) {
  Rng rng(6);
  for (Pooling pooling : {Pooling::sum, Pooling::mean}) {
    for (int trial = 0; trial < 10; ++trial) {
      const Model m = random_model(trial, 3, 3, pooling);
      const Graph g = testing::random_graph(rng, "g", 4 + rng.below(8), 3);
      const Graph gp = testing::permute(g, testing::random_permutation(rng, g.num_nodes()));
      EXPECT_LT((forward_predict(m, g) - forward_predict(m, gp)).cwiseAbs().maxCoeff(), 1e-12);
    }
  }
}

TEST(ForwardPredict, EmptyGraphIsSoftmaxOfHeadBias) {
  Model m = random_model(7);
  Vector bias(3);
  bias << 0.5, -1.0, 2.0;
  for (Eigen::Index c = 0; c < 3; ++c) {
    m.params()[static_cast<Eigen::Index>(m.head_bias_offset()) + c] = bias[c];
  }
  const Graph empty("e", Matrix(0, 3), {});
  const Vector expected = bias.array().exp() / bias.array().exp().sum();
  EXPECT_LT((forward_predict(m, empty) - expected).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(Gradients, ParametersMatchFiniteDifferences) {
  Rng rng(8);
  for (int trial = 0; trial < 10; ++trial) {
    const Pooling pooling = trial % 2 ? Pooling::mean : Pooling::sum;
    const Model m = random_model(100 + trial, 3, 3, pooling);
    const Graph g = testing::random_graph(rng, "g", 4 + rng.below(6), 3);
    const int label = static_cast<int>(rng.below(3));
    Vector analytic = Vector::Zero(m.params().size());
    loss_and_gradient(m, g, label, analytic);
    const Vector numeric = testing::fd_param_gradient(m, g, label);
    for (Eigen::Index i = 0; i < analytic.size(); ++i) {
      EXPECT_LT(testing::rel_err(analytic[i], numeric[i]), 1e-4) << "param " << i;
    }
  }
}

TEST(Gradients, EdgeWeightsMatchFiniteDifferences) {
  Rng rng(9);
  for (int trial = 0; trial < 10; ++trial) {
    const Model m = random_model(200 + trial);
    const Graph g = testing::random_graph(rng, "g", 4 + rng.below(6), 3);
    const int c = static_cast<int>(rng.below(3));
    const auto analytic = edge_saliency(m, g, c);
    const auto numeric = testing::fd_edge_gradient(m, g, c);
    ASSERT_EQ(analytic.size(), numeric.size());
    for (std::size_t k = 0; k < analytic.size(); ++k) {
      EXPECT_LT(testing::rel_err(analytic[k], numeric[k]), 1e-4) << "edge " << k;
    }
  }
}

TEST(Gradients, EdgeFeaturesMatchFiniteDifferences) {
  Rng rng(10);
  const Model m = random_model(300, 3, 2, Pooling::mean, 2);
  Graph base = testing::random_graph(rng, "g", 6, 3);
  std::vector<Edge> es(base.edges().begin(), base.edges().end());
  for (Edge& e : es) e.feat = {rng.uniform(-1, 1), rng.uniform(-1, 1)};
  const Graph g("g", base.features(), es, 1);
  Vector analytic = Vector::Zero(m.params().size());
  loss_and_gradient(m, g, 1, analytic);
  const Vector numeric = testing::fd_param_gradient(m, g, 1);
  for (Eigen::Index i = 0; i < analytic.size(); ++i) {
    EXPECT_LT(testing::rel_err(analytic[i], numeric[i]), 1e-4);
  }
  const auto sal = edge_saliency(m, g, 0);
  const auto fd = testing::fd_edge_gradient(m, g, 0);
  for (std::size_t k = 0; k < sal.size(); ++k) EXPECT_LT(testing::rel_err(sal[k], fd[k]), 1e-4);
  EXPECT_THROW(forward_embed(m, base), ShapeError);
}

TEST(EdgeSaliency, ZeroModelAndEdgelessGraph) {
  Rng rng(11);
  const Graph g = testing::random_graph(rng, "g", 5, 3);
  const auto zero = edge_saliency(Model({3, 5, 4, 2}, Pooling::sum), g, 0);
  EXPECT_EQ(zero, std::vector<double>(g.num_edges(), 0.0));
  EXPECT_TRUE(edge_saliency(random_model(1), make_graph("e", 3, {}), 0).empty());
}

std::vector<Graph> toy_data(std::uint64_t seed, std::size_t n) {
  DatasetSpec spec = preset("ba2");
  spec.n_graphs = n;
  spec.seed = seed;
  return gen_motif_dataset(spec);
}

TEST(Training, ZeroEpochsLeavesParametersUnchanged) {
  const auto data = toy_data(1, 20);
  const Model m = default_model(11, 2, 1);
  TrainConfig cfg;
  cfg.epochs = 0;
  const auto r = train_supervised(m, data, cfg);
  EXPECT_EQ(r.model.params(), m.params());
  EXPECT_TRUE(r.history.empty());
}

TEST(Training, SameSeedIsBitwiseReproducible) {
  const auto data = toy_data(2, 40);
  TrainConfig cfg;
  cfg.epochs = 3;
  cfg.seed = 17;
  const auto a = train_supervised(default_model(11, 2, 3), data, cfg);
  const auto b = train_supervised(default_model(11, 2, 3), data, cfg, {}, Exec::serial);
  EXPECT_EQ(a.history, b.history);
  EXPECT_EQ(a.model.params(), b.model.params());
}

TEST(Training, MissingLabelIsRejected) {
  auto data = toy_data(3, 4);
  data[2] = data[2].with_label(std::nullopt);
  EXPECT_THROW(train_supervised(default_model(11, 2, 0), data, TrainConfig{}), MissingLabel);
}

TEST(Training, InvalidConfigIsRejected) {
  TrainConfig cfg;
  cfg.batch_size = 0;
  EXPECT_THROW(cfg.validate(), ShapeError);
  cfg = TrainConfig{};
  cfg.learning_rate = 0.0;
  EXPECT_THROW(cfg.validate(), ShapeError);
}

TEST(Training, EarlyLossMostlyDecreases) {
  const auto data = toy_data(4, 120);
  TrainConfig cfg;
  cfg.epochs = 6;
  cfg.seed = 4;
  const auto r = train_supervised(default_model(11, 2, 4), data, cfg);
  int non_increasing = 0;
  for (std::size_t e = 1; e < r.history.size(); ++e) non_increasing += r.history[e] <= r.history[e - 1];
  EXPECT_GE(non_increasing, 4);
}

TEST(Training, LearnsSeparableMotifs) {
  const auto data = toy_data(5, 300);
  TrainConfig cfg;
  cfg.seed = 5;
  const auto r = train_supervised(default_model(11, 2, 5), data, cfg);
  EXPECT_GE(accuracy(r.model, data), 0.95);
}

TEST(Checkpoint, RoundTripsExactly) {
  const Model m = random_model(12, 3, 2, Pooling::mean, 2);
  const auto path = std::filesystem::temp_directory_path() / "matchx_ckpt_test.json";
  save_checkpoint(m, path);
  const Model back = load_checkpoint(path);
  std::filesystem::remove(path);
  EXPECT_EQ(back.widths(), m.widths());
  EXPECT_EQ(back.pooling(), m.pooling());
  EXPECT_EQ(back.edge_dim(), 2u);
  EXPECT_EQ(back.params(), m.params());
  EXPECT_EQ(back.fingerprint(), m.fingerprint());
}

TEST(Checkpoint, SchemaKeys) {
  const auto j = model_to_json(Model({3, 4, 2}, Pooling::sum));
  EXPECT_EQ(j.at("version"), 1);
  EXPECT_EQ(j.at("pooling"), "sum");
  EXPECT_FALSE(j.contains("edge_dim"));
  EXPECT_EQ(j.at("params").size(), Model({3, 4, 2}, Pooling::sum).num_params());
  auto bad = j;
  bad["params"].push_back(1.0);
  EXPECT_THROW(model_from_json(bad), ParseError);
}

}  // namespace
}  // namespace matchx
