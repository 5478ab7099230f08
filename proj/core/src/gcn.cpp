#include "nasgcn/gcn.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>

#include "nasgcn/error.hpp"
#include "nasgcn/random.hpp"

namespace nasgcn {

void GcnConfig::validate() const {
  for (int h : hidden_dims) {
    if (h < 1) throw Error("GCN hidden widths must be >= 1");
  }
  if (epochs < 1) throw Error("GCN epochs must be >= 1");
  if (!(lr > 0.0)) throw Error("GCN learning rate must be > 0");
  if (!(lr_decay > 0.0)) throw Error("GCN lr_decay must be > 0");
  if (!(weight_decay >= 0.0)) throw Error("GCN weight_decay must be >= 0");
}

double GcnConfig::learning_rate_at(int epoch) const {
  double rate = lr;
  if (epoch >= epochs / 2) rate *= lr_decay;
  if (epoch >= (3 * epochs) / 4) rate *= lr_decay;
  return rate;
}

GcnConfig GcnConfig::reduced() {
  GcnConfig c;
  c.hidden_dims = {32, 32};
  return c;
}

template <class Scalar>
std::size_t BasicGcnModel<Scalar>::parameter_count() const {
  std::size_t n = static_cast<std::size_t>(head.size()) + 1;
  for (const auto& w : layers) n += static_cast<std::size_t>(w.size());
  return n;
}

template <class Scalar>
BasicGcnModel<Scalar> BasicGcnModel<Scalar>::zeros_like() const {
  BasicGcnModel out;
  for (const auto& w : layers) out.layers.push_back(RowMatrix<Scalar>::Zero(w.rows(), w.cols()));
  out.head = ColVector<Scalar>::Zero(head.size());
  out.bias = 0;
  return out;
}

GcnModel init_model(int feat_dim, const GcnConfig& config) {
  if (feat_dim < 1) throw Error("feature dimension must be >= 1");
  config.validate();
  Rng rng(config.seed);
  auto glorot = [&rng](Eigen::Index fan_in, Eigen::Index fan_out, float* data, Eigen::Index n) {
    const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    for (Eigen::Index i = 0; i < n; ++i) data[i] = static_cast<float>(rng.uniform(-limit, limit));
  };
  GcnModel model;
  Eigen::Index in = feat_dim;
  for (int h : config.hidden_dims) {
    RowMatrix<float> w(in, h);
    glorot(in, h, w.data(), w.size());
    model.layers.push_back(std::move(w));
    in = h;
  }
  model.head.resize(in);
  glorot(in, 1, model.head.data(), model.head.size());
  model.bias = 0.0F;
  return model;
}

template <class Scalar>
GcnInputs<Scalar> prepare_inputs(const ArchGraph& graph) {
  GcnInputs<Scalar> inputs;
  inputs.a_hat = &graph.normalized();
  graph.normalized().multiply(graph.feature_matrix<Scalar>(), inputs.propagated_features);
  return inputs;
}

namespace {

template <class Scalar>
void check_shapes(const GcnInputs<Scalar>& inputs, const BasicGcnModel<Scalar>& model) {
  if (model.layers.empty()) throw Error("GCN model has no layers");
  if (model.feature_dim() != inputs.propagated_features.cols()) {
    throw Error("GCN expects " + std::to_string(model.feature_dim()) + " input features, graph has " +
                std::to_string(inputs.propagated_features.cols()));
  }
  for (std::size_t l = 1; l < model.layers.size(); ++l) {
    if (model.layers[l].rows() != model.layers[l - 1].cols()) {
      throw Error("GCN layer " + std::to_string(l) + " does not chain with the previous layer");
    }
  }
  if (model.head.size() != model.layers.back().cols()) throw Error("GCN head width mismatch");
}

template <class Scalar>
void relu_inplace(RowMatrix<Scalar>& m) {
  m = m.cwiseMax(Scalar(0));
}

/// Hidden activations H_1..H_L. Layer 0 uses the cached A_hat X; later layers
/// compute A_hat (H W).
template <class Scalar>
std::vector<RowMatrix<Scalar>> hidden_activations(const GcnInputs<Scalar>& inputs,
                                                  const BasicGcnModel<Scalar>& model,
                                                  bool keep_all) {
  std::vector<RowMatrix<Scalar>> hidden;
  RowMatrix<Scalar> current = inputs.propagated_features * model.layers[0];
  relu_inplace(current);
  for (std::size_t l = 1; l < model.layers.size(); ++l) {
    RowMatrix<Scalar> transformed = current * model.layers[l];
    if (keep_all) {
      hidden.push_back(std::move(current));
    } else {
      current.resize(0, 0);
    }
    inputs.a_hat->multiply(transformed, current);
    relu_inplace(current);
  }
  hidden.push_back(std::move(current));
  return hidden;
}

template <class Scalar>
ColVector<Scalar> output_from(const GcnInputs<Scalar>& inputs, const BasicGcnModel<Scalar>& model,
                              const RowMatrix<Scalar>& last_hidden) {
  ColVector<Scalar> u = last_hidden * model.head;
  ColVector<Scalar> y = inputs.a_hat->multiply(u);
  y.array() += model.bias;
  return y;
}

}  // namespace

template <class Scalar>
ColVector<Scalar> forward(const GcnInputs<Scalar>& inputs, const BasicGcnModel<Scalar>& model) {
  check_shapes(inputs, model);
  const auto hidden = hidden_activations(inputs, model, false);
  return output_from(inputs, model, hidden.back());
}

template <class Scalar>
LossGradient<Scalar> loss_and_gradient(const GcnInputs<Scalar>& inputs,
                                       const BasicGcnModel<Scalar>& model,
                                       std::span<const Label> labels, LossKind kind,
                                       double weight_decay, double smoothing) {
  check_shapes(inputs, model);
  if (labels.empty()) throw Error("GCN training needs at least one label");
  const std::int64_t n = inputs.num_nodes();
  for (const auto& lab : labels) {
    if (lab.node < 0 || lab.node >= n) {
      throw Error("label node " + std::to_string(lab.node) + " is outside the graph");
    }
  }

  const auto hidden = hidden_activations(inputs, model, true);
  const ColVector<Scalar> y = output_from(inputs, model, hidden.back());

  LossGradient<Scalar> out;
  out.gradient = model.zeros_like();
  auto& grad = out.gradient;

  ColVector<Scalar> g_y = ColVector<Scalar>::Zero(n);
  const double inv = 1.0 / static_cast<double>(labels.size());
  double loss = 0.0;
  for (const auto& lab : labels) {
    const double r = static_cast<double>(y[lab.node]) - lab.value;
    double d = 0.0;
    if (kind == LossKind::L1) {
      loss += std::abs(r);
      d = (r > 0.0) - (r < 0.0);
    } else {
      const double s = std::sqrt(r * r + smoothing * smoothing);
      loss += s - smoothing;
      d = r / s;
    }
    g_y[lab.node] += static_cast<Scalar>(d * inv);
  }
  out.data_loss = loss * inv;

  grad.bias = g_y.sum();
  const ColVector<Scalar> g_u = inputs.a_hat->multiply(g_y);
  grad.head.noalias() = hidden.back().transpose() * g_u;
  RowMatrix<Scalar> g_hidden = g_u * model.head.transpose();

  for (std::size_t l = model.layers.size(); l-- > 1;) {
    // H_{l+1} = relu(A_hat (H_l W_l)); the ReLU mask is read off H_{l+1}.
    g_hidden = (hidden[l].array() > Scalar(0)).select(g_hidden, Scalar(0));
    RowMatrix<Scalar> g_t;
    inputs.a_hat->multiply(g_hidden, g_t);
    grad.layers[l].noalias() = hidden[l - 1].transpose() * g_t;
    g_hidden = g_t * model.layers[l].transpose();
  }
  g_hidden = (hidden[0].array() > Scalar(0)).select(g_hidden, Scalar(0));
  grad.layers[0].noalias() = inputs.propagated_features.transpose() * g_hidden;

  double norm2 = static_cast<double>(model.bias) * static_cast<double>(model.bias) +
                 model.head.template cast<double>().squaredNorm();
  for (const auto& w : model.layers) norm2 += w.template cast<double>().squaredNorm();
  out.total_loss = out.data_loss + 0.5 * weight_decay * norm2;
  if (weight_decay != 0.0) {
    const auto wd = static_cast<Scalar>(weight_decay);
    for (std::size_t l = 0; l < model.layers.size(); ++l) grad.layers[l] += wd * model.layers[l];
    grad.head += wd * model.head;
    grad.bias += wd * model.bias;
  }
  return out;
}

namespace {

void adam_block(float* param, const float* grad, Eigen::ArrayXf& m, Eigen::ArrayXf& v, float lr,
                float bc1, float bc2) {
  constexpr float beta1 = 0.9F, beta2 = 0.999F, eps = 1e-8F;
  Eigen::Map<Eigen::ArrayXf> p(param, m.size());
  const Eigen::Map<const Eigen::ArrayXf> g(grad, m.size());
  m = beta1 * m + (1.0F - beta1) * g;
  v = beta2 * v + (1.0F - beta2) * g.square();
  p -= lr * (m / bc1) / ((v / bc2).sqrt() + eps);
}

}  // namespace

TrainResult train(const ArchGraph& graph, std::span<const Label> labels, const GcnConfig& config) {
  config.validate();
  if (labels.empty()) throw Error("GCN training needs at least one label");
  TrainResult result;
  result.model = init_model(graph.feature_dim(), config);
  GcnModel& model = result.model;
  // Start the head at the best constant fit under L1.
  {
    std::vector<double> values;
    values.reserve(labels.size());
    for (const auto& l : labels) values.push_back(l.value);
    std::nth_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(values.size() / 2),
                     values.end());
    model.bias = static_cast<float>(values[values.size() / 2]);
  }
  const auto inputs = prepare_inputs<float>(graph);

  // Moments stored flat per parameter block.
  std::vector<Eigen::ArrayXf> m_blocks, v_blocks;
  for (const auto& w : model.layers) {
    m_blocks.push_back(Eigen::ArrayXf::Zero(w.size()));
    v_blocks.push_back(Eigen::ArrayXf::Zero(w.size()));
  }
  m_blocks.push_back(Eigen::ArrayXf::Zero(model.head.size()));
  v_blocks.push_back(Eigen::ArrayXf::Zero(model.head.size()));
  m_blocks.push_back(Eigen::ArrayXf::Zero(1));
  v_blocks.push_back(Eigen::ArrayXf::Zero(1));

  result.loss_curve.reserve(static_cast<std::size_t>(config.epochs));
  double beta1_pow = 1.0, beta2_pow = 1.0;
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    const auto lg = loss_and_gradient(inputs, model, labels, LossKind::L1, config.weight_decay);
    if (!std::isfinite(lg.total_loss)) {
      throw Error("GCN loss became non-finite at epoch " + std::to_string(epoch));
    }
    result.loss_curve.push_back(lg.data_loss);

    beta1_pow *= 0.9;
    beta2_pow *= 0.999;
    const auto lr = static_cast<float>(config.learning_rate_at(epoch));
    const auto bc1 = static_cast<float>(1.0 - beta1_pow);
    const auto bc2 = static_cast<float>(1.0 - beta2_pow);
    std::size_t b = 0;
    for (std::size_t l = 0; l < model.layers.size(); ++l, ++b) {
      adam_block(model.layers[l].data(), lg.gradient.layers[l].data(), m_blocks[b], v_blocks[b], lr,
                 bc1, bc2);
    }
    adam_block(model.head.data(), lg.gradient.head.data(), m_blocks[b], v_blocks[b], lr, bc1, bc2);
    ++b;
    adam_block(&model.bias, &lg.gradient.bias, m_blocks[b], v_blocks[b], lr, bc1, bc2);
  }
  return result;
}

namespace {

constexpr char kMagic[8] = {'N', 'A', 'S', 'G', 'C', 'N', 'M', '\0'};
constexpr std::uint32_t kVersion = 1;

void put_u32(std::ostream& os, std::uint32_t v) { os.write(reinterpret_cast<const char*>(&v), sizeof v); }

std::uint32_t get_u32(std::istream& is) {
  std::uint32_t v = 0;
  is.read(reinterpret_cast<char*>(&v), sizeof v);
  if (!is) throw Error("truncated model file");
  return v;
}

void get_floats(std::istream& is, float* data, std::size_t n) {
  is.read(reinterpret_cast<char*>(data), static_cast<std::streamsize>(n * sizeof(float)));
  if (!is) throw Error("truncated model file");
}

}  // namespace

void save_model(const GcnModel& model, const std::filesystem::path& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error("cannot open " + path.string() + " for writing");
  os.write(kMagic, sizeof kMagic);
  put_u32(os, kVersion);
  put_u32(os, static_cast<std::uint32_t>(model.layers.size()));
  for (const auto& w : model.layers) {
    put_u32(os, static_cast<std::uint32_t>(w.rows()));
    put_u32(os, static_cast<std::uint32_t>(w.cols()));
    os.write(reinterpret_cast<const char*>(w.data()), static_cast<std::streamsize>(w.size() * sizeof(float)));
  }
  put_u32(os, static_cast<std::uint32_t>(model.head.size()));
  os.write(reinterpret_cast<const char*>(model.head.data()),
           static_cast<std::streamsize>(model.head.size() * sizeof(float)));
  os.write(reinterpret_cast<const char*>(&model.bias), sizeof(float));
  if (!os) throw Error("failed writing " + path.string());
}

GcnModel load_model(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error("cannot open model file " + path.string());
  char magic[sizeof kMagic];
  is.read(magic, sizeof magic);
  if (!is || std::memcmp(magic, kMagic, sizeof kMagic) != 0) {
    throw Error(path.string() + " is not a GCN model file");
  }
  const std::uint32_t version = get_u32(is);
  if (version != kVersion) throw Error("unsupported model file version " + std::to_string(version));
  GcnModel model;
  const std::uint32_t n_layers = get_u32(is);
  for (std::uint32_t l = 0; l < n_layers; ++l) {
    const std::uint32_t rows = get_u32(is);
    const std::uint32_t cols = get_u32(is);
    RowMatrix<float> w(rows, cols);
    get_floats(is, w.data(), static_cast<std::size_t>(w.size()));
    model.layers.push_back(std::move(w));
  }
  model.head.resize(get_u32(is));
  get_floats(is, model.head.data(), static_cast<std::size_t>(model.head.size()));
  get_floats(is, &model.bias, 1);
  return model;
}

void write_loss_csv(std::span<const double> curve, const std::filesystem::path& path) {
  std::ofstream os(path);
  if (!os) throw Error("cannot open " + path.string() + " for writing");
  os << "epoch,loss\n";
  char buf[64];
  for (std::size_t e = 0; e < curve.size(); ++e) {
    std::snprintf(buf, sizeof buf, "%zu,%.6f\n", e, curve[e]);
    os << buf;
  }
}

template struct BasicGcnModel<float>;
template struct BasicGcnModel<double>;
template GcnInputs<float> prepare_inputs<float>(const ArchGraph&);
template GcnInputs<double> prepare_inputs<double>(const ArchGraph&);
template ColVector<float> forward<float>(const GcnInputs<float>&, const BasicGcnModel<float>&);
template ColVector<double> forward<double>(const GcnInputs<double>&, const BasicGcnModel<double>&);
template LossGradient<float> loss_and_gradient<float>(const GcnInputs<float>&, const BasicGcnModel<float>&,
                                                      std::span<const Label>, LossKind, double, double);
template LossGradient<double> loss_and_gradient<double>(const GcnInputs<double>&,
                                                        const BasicGcnModel<double>&,
                                                        std::span<const Label>, LossKind, double, double);

}  // namespace nasgcn
