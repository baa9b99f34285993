#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "matchx/graph.hpp"
#include "matchx/parallel.hpp"
#include "matchx/rng.hpp"

namespace matchx {

enum class Pooling { sum, mean };

std::string_view to_string(Pooling p);
Pooling parse_pooling(std::string_view s);

/// GIN-style message-passing network followed by graph pooling and a linear
/// classifier head.
///
/// widths = {input, hidden_1, ..., hidden_L, classes}. Each layer computes
///
///   a_i  = (1 + eps) h_i + sum_{j in N(i)} w_ij h_j
///   h'_i = relu(W2 relu(W1 a_i + b1) + b2)
///
/// When edge_dim > 0, w_ij * e_ij is concatenated to the neighbour messages
/// (the self term contributes zeros there), so W1 has d_in + edge_dim columns.
///
/// Flat parameter layout, in order: for each layer [eps, W1 (row-major),
/// b1, W2 (row-major), b2], then the head [Wo (row-major, classes x
/// hidden_L), bo].
class Model {
 public:
  struct LayerOffsets {
    std::size_t in = 0;
    std::size_t out = 0;
    std::size_t eps = 0;
    std::size_t w1 = 0;
    std::size_t b1 = 0;
    std::size_t w2 = 0;
    std::size_t b2 = 0;
  };

  /// All parameters zero.
  Model(std::vector<std::size_t> widths, Pooling pooling, std::size_t edge_dim = 0);

  /// Glorot-uniform weights, zero biases and eps.
  static Model initialized(std::vector<std::size_t> widths, Pooling pooling,
                           std::uint64_t seed, std::size_t edge_dim = 0);

  const std::vector<std::size_t>& widths() const { return widths_; }
  Pooling pooling() const { return pooling_; }
  std::size_t edge_dim() const { return edge_dim_; }
  std::size_t input_width() const { return widths_.front(); }
  std::size_t embedding_width() const { return widths_[widths_.size() - 2]; }
  std::size_t num_classes() const { return widths_.back(); }
  std::size_t num_layers() const { return layers_.size(); }
  const LayerOffsets& layer(std::size_t l) const { return layers_[l]; }
  std::size_t head_weight_offset() const { return head_w_; }
  std::size_t head_bias_offset() const { return head_b_; }

  const Vector& params() const { return params_; }
  Vector& params() { return params_; }
  std::size_t num_params() const { return static_cast<std::size_t>(params_.size()); }

  /// FNV-1a over shape and parameter bytes.
  std::uint64_t fingerprint() const;

 private:
  std::vector<std::size_t> widths_;
  Pooling pooling_;
  std::size_t edge_dim_;
  std::vector<LayerOffsets> layers_;
  std::size_t head_w_ = 0;
  std::size_t head_b_ = 0;
  Vector params_;
};

/// Default architecture for a given input width and class count:
/// two layers of width 32, mean pooling.
Model default_model(std::size_t input_width, std::size_t classes, std::uint64_t seed);

/// Final-layer node embeddings (|V| x hidden_L), before pooling.
Matrix forward_embed(const Model& m, const Graph& g);

Vector forward_logits(const Model& m, const Graph& g);

/// Softmax class probabilities. The empty graph pools to the zero vector.
Vector forward_predict(const Model& m, const Graph& g);

/// argmax of the prediction; ties go to the smaller class index.
int predict_class(const Model& m, const Graph& g);
int argmax(const Vector& v);

/// Cross-entropy of the prediction against `label`; gradient w.r.t. the flat
/// parameter vector is added into `grad`.
double loss_and_gradient(const Model& m, const Graph& g, int label, Vector& grad);

/// d logit_c / d w_e for every edge e, in edge order.
std::vector<double> edge_saliency(const Model& m, const Graph& g, int c);

struct TrainConfig {
  int epochs = 100;
  std::size_t batch_size = 32;
  double learning_rate = 0.01;
  std::uint64_t seed = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_eps = 1e-8;

  void validate() const;
};

struct TrainResult {
  Model model;
  std::vector<double> history;  // mean CE per epoch
};

/// Called after every epoch with the 0-based epoch, its mean loss and the
/// model state at the end of the epoch.
using EpochCallback = std::function<void(int, double, const Model&)>;

/// Mini-batch Adam on mean cross-entropy. Per-graph gradients may be computed
/// concurrently; they are always summed in batch order.
class Trainer {
 public:
  Trainer(Model model, TrainConfig cfg, Exec exec = Exec::parallel);

  /// One pass over `data` in a freshly shuffled order. Returns the mean loss.
  double run_epoch(std::span<const Graph> data);

  const Model& model() const { return model_; }
  Model release() { return std::move(model_); }

 private:
  Model model_;
  TrainConfig cfg_;
  Exec exec_;
  Rng shuffle_rng_;
  Vector m1_;
  Vector m2_;
  std::uint64_t step_ = 0;
};

/// Sum of per-graph losses and the mean gradient over `batch`.
double batch_gradient(const Model& m, std::span<const Graph* const> batch, Vector& grad,
                      Exec exec = Exec::parallel);

TrainResult train_supervised(Model m, std::span<const Graph> data, const TrainConfig& cfg,
                             const EpochCallback& on_epoch = {}, Exec exec = Exec::parallel);

double accuracy(const Model& m, std::span<const Graph> data);

// Checkpoints: {"version":1, "widths":[...], "pooling":"sum|mean",
// "params":[...]}; "edge_dim" is present only when non-zero.
nlohmann::json model_to_json(const Model& m);
Model model_from_json(const nlohmann::json& j);
void save_checkpoint(const Model& m, const std::filesystem::path& path);
Model load_checkpoint(const std::filesystem::path& path);

}  // namespace matchx
