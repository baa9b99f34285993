#include "matchx/gnn.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>
#include <string>

#include "matchx/errors.hpp"
#include "matchx/io.hpp"

namespace matchx {
namespace {

using ConstMatrixMap = Eigen::Map<const Matrix>;
using MatrixMap = Eigen::Map<Matrix>;
using ConstVectorMap = Eigen::Map<const Vector>;
using VectorMap = Eigen::Map<Vector>;

struct LayerCache {
  Matrix agg;
  Matrix z1;
  Matrix r1;
  Matrix z2;
};

struct ForwardCache {
  std::vector<Matrix> inputs;  // inputs[l] feeds layer l; inputs.back() is the embedding
  std::vector<LayerCache> layers;
  Vector pooled;
  Vector logits;
};

void check_input(const Model& m, const Graph& g) {
  if (g.feature_width() != m.input_width()) {
    throw ShapeError("graph '" + g.id() + "' has feature width " +
                     std::to_string(g.feature_width()) + ", model expects " +
                     std::to_string(m.input_width()));
  }
  if (m.edge_dim() > 0 && g.num_edges() > 0 && g.edge_feature_width() != m.edge_dim()) {
    throw ShapeError("graph '" + g.id() + "' has edge feature width " +
                     std::to_string(g.edge_feature_width()) + ", model expects " +
                     std::to_string(m.edge_dim()));
  }
}

Matrix aggregate(const Graph& g, const Matrix& h, double eps, std::size_t edge_dim) {
  const Eigen::Index din = h.cols();
  const auto ed = static_cast<Eigen::Index>(edge_dim);
  Matrix a = Matrix::Zero(h.rows(), din + ed);
  a.leftCols(din) = (1.0 + eps) * h;
  for (const Edge& e : g.edges()) {
    const auto u = static_cast<Eigen::Index>(e.u);
    const auto v = static_cast<Eigen::Index>(e.v);
    a.row(u).head(din) += e.w * h.row(v);
    a.row(v).head(din) += e.w * h.row(u);
    if (ed > 0) {
      Eigen::Map<const Eigen::RowVectorXd> f(e.feat.data(), ed);
      a.row(u).tail(ed) += e.w * f;
      a.row(v).tail(ed) += e.w * f;
    }
  }
  return a;
}

Matrix relu(const Matrix& z) { return z.cwiseMax(0.0); }

Matrix relu_mask(const Matrix& z) { return (z.array() > 0.0).cast<double>().matrix(); }

ForwardCache forward(const Model& m, const Graph& g) {
  check_input(m, g);
  const double* p = m.params().data();
  const auto ed = m.edge_dim();
  ForwardCache c;
  c.inputs.reserve(m.num_layers() + 1);
  c.layers.reserve(m.num_layers());
  c.inputs.push_back(g.features());
  for (std::size_t l = 0; l < m.num_layers(); ++l) {
    const auto& L = m.layer(l);
    const auto in = static_cast<Eigen::Index>(L.in + ed);
    const auto out = static_cast<Eigen::Index>(L.out);
    ConstMatrixMap w1(p + L.w1, out, in);
    ConstVectorMap b1(p + L.b1, out);
    ConstMatrixMap w2(p + L.w2, out, out);
    ConstVectorMap b2(p + L.b2, out);
    LayerCache lc;
    lc.agg = aggregate(g, c.inputs.back(), p[L.eps], ed);
    lc.z1 = lc.agg * w1.transpose();
    lc.z1.rowwise() += b1.transpose();
    lc.r1 = relu(lc.z1);
    lc.z2 = lc.r1 * w2.transpose();
    lc.z2.rowwise() += b2.transpose();
    c.inputs.push_back(relu(lc.z2));
    c.layers.push_back(std::move(lc));
  }
  const Matrix& h = c.inputs.back();
  c.pooled = Vector::Zero(static_cast<Eigen::Index>(m.embedding_width()));
  if (h.rows() > 0) {
    c.pooled = h.colwise().sum().transpose();
    if (m.pooling() == Pooling::mean) c.pooled /= static_cast<double>(h.rows());
  }
  const auto classes = static_cast<Eigen::Index>(m.num_classes());
  ConstMatrixMap wo(p + m.head_weight_offset(), classes, c.pooled.size());
  ConstVectorMap bo(p + m.head_bias_offset(), classes);
  c.logits = wo * c.pooled + bo;
  return c;
}

// Propagates dlogits back through the network. Parameter gradients are added
// into `grad` and edge-weight gradients into `dweights` when non-null.
void backward(const Model& m, const Graph& g, const ForwardCache& c, const Vector& dlogits,
              Vector* grad, std::vector<double>* dweights) {
  const double* p = m.params().data();
  const auto ed = static_cast<Eigen::Index>(m.edge_dim());
  const auto classes = static_cast<Eigen::Index>(m.num_classes());
  const auto d = static_cast<Eigen::Index>(m.embedding_width());
  ConstMatrixMap wo(p + m.head_weight_offset(), classes, d);
  if (grad != nullptr) {
    MatrixMap dwo(grad->data() + m.head_weight_offset(), classes, d);
    VectorMap dbo(grad->data() + m.head_bias_offset(), classes);
    dwo.noalias() += dlogits * c.pooled.transpose();
    dbo += dlogits;
  }
  const auto n = static_cast<Eigen::Index>(g.num_nodes());
  if (n == 0) return;
  Vector dpooled = wo.transpose() * dlogits;
  if (m.pooling() == Pooling::mean) dpooled /= static_cast<double>(n);
  Matrix dh = dpooled.transpose().replicate(n, 1);

  for (std::size_t l = m.num_layers(); l-- > 0;) {
    const auto& L = m.layer(l);
    const LayerCache& lc = c.layers[l];
    const Matrix& h_in = c.inputs[l];
    const auto din = static_cast<Eigen::Index>(L.in);
    const auto out = static_cast<Eigen::Index>(L.out);
    ConstMatrixMap w1(p + L.w1, out, din + ed);
    ConstMatrixMap w2(p + L.w2, out, out);

    const Matrix dz2 = dh.cwiseProduct(relu_mask(lc.z2));
    const Matrix dz1 = (dz2 * w2).cwiseProduct(relu_mask(lc.z1));
    const Matrix da = dz1 * w1;
    if (grad != nullptr) {
      MatrixMap dw2(grad->data() + L.w2, out, out);
      VectorMap db2(grad->data() + L.b2, out);
      MatrixMap dw1(grad->data() + L.w1, out, din + ed);
      VectorMap db1(grad->data() + L.b1, out);
      dw2.noalias() += dz2.transpose() * lc.r1;
      db2 += dz2.colwise().sum().transpose();
      dw1.noalias() += dz1.transpose() * lc.agg;
      db1 += dz1.colwise().sum().transpose();
      (*grad)[static_cast<Eigen::Index>(L.eps)] += da.leftCols(din).cwiseProduct(h_in).sum();
    }
    if (dweights != nullptr) {
      std::size_t k = 0;
      for (const Edge& e : g.edges()) {
        const auto u = static_cast<Eigen::Index>(e.u);
        const auto v = static_cast<Eigen::Index>(e.v);
        double s = da.row(u).head(din).dot(h_in.row(v)) + da.row(v).head(din).dot(h_in.row(u));
        if (ed > 0) {
          Eigen::Map<const Eigen::RowVectorXd> f(e.feat.data(), ed);
          s += (da.row(u).tail(ed) + da.row(v).tail(ed)).dot(f);
        }
        (*dweights)[k++] += s;
      }
    }
    if (l > 0) {
      const double eps = p[L.eps];
      Matrix next = (1.0 + eps) * da.leftCols(din);
      for (const Edge& e : g.edges()) {
        const auto u = static_cast<Eigen::Index>(e.u);
        const auto v = static_cast<Eigen::Index>(e.v);
        next.row(u) += e.w * da.row(v).head(din);
        next.row(v) += e.w * da.row(u).head(din);
      }
      dh = std::move(next);
    }
  }
}

Vector softmax(const Vector& logits) {
  const double mx = logits.maxCoeff();
  Vector e = (logits.array() - mx).exp().matrix();
  return e / e.sum();
}

int checked_label(const Model& m, const Graph& g) {
  if (!g.label()) throw MissingLabel("graph '" + g.id() + "' has no label");
  const int y = *g.label();
  if (y < 0 || static_cast<std::size_t>(y) >= m.num_classes()) {
    throw InvalidGraph("graph '" + g.id() + "' label " + std::to_string(y) +
                       " outside [0, " + std::to_string(m.num_classes()) + ")");
  }
  return y;
}

void check_training_data(const Model& m, std::span<const Graph> data) {
  for (const Graph& g : data) {
    checked_label(m, g);
    check_input(m, g);
  }
}

}  // namespace

std::string_view to_string(Pooling p) { return p == Pooling::sum ? "sum" : "mean"; }

Pooling parse_pooling(std::string_view s) {
  if (s == "sum") return Pooling::sum;
  if (s == "mean") return Pooling::mean;
  throw ShapeError("unknown pooling '" + std::string(s) + "'");
}

Model::Model(std::vector<std::size_t> widths, Pooling pooling, std::size_t edge_dim)
    : widths_(std::move(widths)), pooling_(pooling), edge_dim_(edge_dim) {
  if (widths_.size() < 3) throw ShapeError("model needs at least one message-passing layer");
  for (std::size_t w : widths_) {
    if (w == 0) throw ShapeError("model widths must be positive");
  }
  std::size_t off = 0;
  for (std::size_t l = 0; l + 2 < widths_.size(); ++l) {
    LayerOffsets L;
    L.in = widths_[l];
    L.out = widths_[l + 1];
    L.eps = off;
    off += 1;
    L.w1 = off;
    off += L.out * (L.in + edge_dim_);
    L.b1 = off;
    off += L.out;
    L.w2 = off;
    off += L.out * L.out;
    L.b2 = off;
    off += L.out;
    layers_.push_back(L);
  }
  head_w_ = off;
  off += num_classes() * embedding_width();
  head_b_ = off;
  off += num_classes();
  params_ = Vector::Zero(static_cast<Eigen::Index>(off));
}

Model Model::initialized(std::vector<std::size_t> widths, Pooling pooling, std::uint64_t seed,
                         std::size_t edge_dim) {
  Model m(std::move(widths), pooling, edge_dim);
  Rng rng(derive_seed(seed, "init"));
  auto fill = [&](std::size_t offset, std::size_t rows, std::size_t cols) {
    const double limit = std::sqrt(6.0 / static_cast<double>(rows + cols));
    for (std::size_t k = 0; k < rows * cols; ++k) {
      m.params_[static_cast<Eigen::Index>(offset + k)] = rng.uniform(-limit, limit);
    }
  };
  for (const auto& L : m.layers_) {
    fill(L.w1, L.out, L.in + edge_dim);
    fill(L.w2, L.out, L.out);
  }
  fill(m.head_w_, m.num_classes(), m.embedding_width());
  return m;
}

std::uint64_t Model::fingerprint() const {
  std::uint64_t h = 0xCBF29CE484222325ULL;
  auto feed = [&h](const void* data, std::size_t bytes) {
    const auto* b = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < bytes; ++i) {
      h ^= b[i];
      h *= 0x100000001B3ULL;
    }
  };
  feed(widths_.data(), widths_.size() * sizeof(std::size_t));
  const int pool = pooling_ == Pooling::sum ? 0 : 1;
  feed(&pool, sizeof pool);
  feed(&edge_dim_, sizeof edge_dim_);
  feed(params_.data(), static_cast<std::size_t>(params_.size()) * sizeof(double));
  return h;
}

Model default_model(std::size_t input_width, std::size_t classes, std::uint64_t seed) {
  return Model::initialized({input_width, 32, 32, classes}, Pooling::mean, seed);
}

Matrix forward_embed(const Model& m, const Graph& g) { return forward(m, g).inputs.back(); }

Vector forward_logits(const Model& m, const Graph& g) { return forward(m, g).logits; }

Vector forward_predict(const Model& m, const Graph& g) { return softmax(forward_logits(m, g)); }

int argmax(const Vector& v) {
  Eigen::Index best = 0;
  for (Eigen::Index i = 1; i < v.size(); ++i) {
    if (v[i] > v[best]) best = i;
  }
  return static_cast<int>(best);
}

int predict_class(const Model& m, const Graph& g) { return argmax(forward_logits(m, g)); }

double loss_and_gradient(const Model& m, const Graph& g, int label, Vector& grad) {
  if (grad.size() != m.params().size()) grad = Vector::Zero(m.params().size());
  const ForwardCache c = forward(m, g);
  const Vector probs = softmax(c.logits);
  const double mx = c.logits.maxCoeff();
  const double lse = mx + std::log((c.logits.array() - mx).exp().sum());
  Vector dlogits = probs;
  dlogits[label] -= 1.0;
  backward(m, g, c, dlogits, &grad, nullptr);
  return lse - c.logits[label];
}

std::vector<double> edge_saliency(const Model& m, const Graph& g, int c) {
  if (c < 0 || static_cast<std::size_t>(c) >= m.num_classes()) {
    throw ShapeError("class index " + std::to_string(c) + " out of range");
  }
  const ForwardCache cache = forward(m, g);
  Vector dlogits = Vector::Zero(static_cast<Eigen::Index>(m.num_classes()));
  dlogits[c] = 1.0;
  std::vector<double> out(g.num_edges(), 0.0);
  backward(m, g, cache, dlogits, nullptr, &out);
  return out;
}

void TrainConfig::validate() const {
  if (epochs < 0) throw ShapeError("epochs must be >= 0");
  if (batch_size < 1) throw ShapeError("batch_size must be >= 1");
  if (!(learning_rate > 0.0)) throw ShapeError("learning_rate must be > 0");
}

double batch_gradient(const Model& m, std::span<const Graph* const> batch, Vector& grad,
                      Exec exec) {
  const auto p = m.params().size();
  std::vector<Vector> grads(batch.size());
  std::vector<double> losses(batch.size(), 0.0);
  parallel_for(batch.size(), exec, [&](std::size_t i) {
    grads[i] = Vector::Zero(p);
    losses[i] = loss_and_gradient(m, *batch[i], checked_label(m, *batch[i]), grads[i]);
  });
  grad = Vector::Zero(p);
  double total = 0.0;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    grad += grads[i];
    total += losses[i];
  }
  if (!batch.empty()) grad /= static_cast<double>(batch.size());
  return total;
}

Trainer::Trainer(Model model, TrainConfig cfg, Exec exec)
    : model_(std::move(model)),
      cfg_(cfg),
      exec_(exec),
      shuffle_rng_(derive_seed(cfg.seed, "train")),
      m1_(Vector::Zero(model_.params().size())),
      m2_(Vector::Zero(model_.params().size())) {
  cfg_.validate();
}

double Trainer::run_epoch(std::span<const Graph> data) {
  check_training_data(model_, data);
  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  shuffle_rng_.shuffle(order);
  double total = 0.0;
  Vector grad;
  std::vector<const Graph*> batch;
  for (std::size_t start = 0; start < order.size(); start += cfg_.batch_size) {
    batch.clear();
    for (std::size_t k = start; k < std::min(order.size(), start + cfg_.batch_size); ++k) {
      batch.push_back(&data[order[k]]);
    }
    total += batch_gradient(model_, batch, grad, exec_);
    ++step_;
    const double t = static_cast<double>(step_);
    m1_ = cfg_.beta1 * m1_ + (1.0 - cfg_.beta1) * grad;
    m2_ = cfg_.beta2 * m2_ + (1.0 - cfg_.beta2) * grad.cwiseProduct(grad);
    const double c1 = 1.0 - std::pow(cfg_.beta1, t);
    const double c2 = 1.0 - std::pow(cfg_.beta2, t);
    model_.params().array() -= cfg_.learning_rate * (m1_.array() / c1) /
                               ((m2_.array() / c2).sqrt() + cfg_.adam_eps);
  }
  return data.empty() ? 0.0 : total / static_cast<double>(data.size());
}

TrainResult train_supervised(Model m, std::span<const Graph> data, const TrainConfig& cfg,
                             const EpochCallback& on_epoch, Exec exec) {
  cfg.validate();
  check_training_data(m, data);
  Trainer trainer(std::move(m), cfg, exec);
  std::vector<double> history;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    history.push_back(trainer.run_epoch(data));
    if (on_epoch) on_epoch(epoch, history.back(), trainer.model());
  }
  return {trainer.release(), std::move(history)};
}

double accuracy(const Model& m, std::span<const Graph> data) {
  if (data.empty()) return 0.0;
  std::vector<int> hit(data.size(), 0);
  parallel_for(data.size(), Exec::parallel, [&](std::size_t i) {
    hit[i] = data[i].label() && predict_class(m, data[i]) == *data[i].label();
  });
  return static_cast<double>(std::accumulate(hit.begin(), hit.end(), 0)) /
         static_cast<double>(data.size());
}

nlohmann::json model_to_json(const Model& m) {
  nlohmann::json j;
  j["version"] = 1;
  j["widths"] = m.widths();
  j["pooling"] = std::string(to_string(m.pooling()));
  if (m.edge_dim() > 0) j["edge_dim"] = m.edge_dim();
  j["params"] = std::vector<double>(m.params().data(), m.params().data() + m.params().size());
  return j;
}

Model model_from_json(const nlohmann::json& j) {
  try {
    if (j.at("version").get<int>() != 1) throw ParseError("checkpoint: unsupported version");
    const auto widths = j.at("widths").get<std::vector<std::size_t>>();
    const Pooling pooling = parse_pooling(j.at("pooling").get<std::string>());
    const std::size_t edge_dim = j.value("edge_dim", std::size_t{0});
    Model m(widths, pooling, edge_dim);
    const auto params = j.at("params").get<std::vector<double>>();
    if (params.size() != m.num_params()) {
      throw ParseError("checkpoint: expected " + std::to_string(m.num_params()) +
                       " params, found " + std::to_string(params.size()));
    }
    for (std::size_t i = 0; i < params.size(); ++i) {
      m.params()[static_cast<Eigen::Index>(i)] = params[i];
    }
    if (!m.params().allFinite()) throw ParseError("checkpoint: non-finite parameter");
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("checkpoint: ") + e.what());
  } catch (const ShapeError& e) {
    throw ParseError(std::string("checkpoint: ") + e.what());
  }
}

void save_checkpoint(const Model& m, const std::filesystem::path& path) {
  write_text(path, model_to_json(m).dump() + "\n");
}

Model load_checkpoint(const std::filesystem::path& path) {
  const std::string text = read_text(path);
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
  try {
    return model_from_json(j);
  } catch (const ParseError& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

}  // namespace matchx
