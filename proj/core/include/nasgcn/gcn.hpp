#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "nasgcn/arch_graph.hpp"
#include "nasgcn/linalg.hpp"

namespace nasgcn {

struct GcnConfig {
  std::vector<int> hidden_dims{512, 512};
  int epochs = 600;
  double lr = 0.01;
  /// Multiplier applied to the learning rate at epochs E/2 and 3E/4.
  double lr_decay = 0.1;
  double weight_decay = 5e-4;
  std::uint64_t seed = 0;

  void validate() const;
  double learning_rate_at(int epoch) const;

  /// Narrow profile ([32, 32]) for tests and quick runs.
  static GcnConfig reduced();
};

/// f(M; eta): a stack of graph convolutions followed by a linear regression
/// head that is itself propagated once more over the graph.
template <class Scalar>
struct BasicGcnModel {
  std::vector<RowMatrix<Scalar>> layers;  // feat_dim x h1, h1 x h2, ...
  ColVector<Scalar> head;                 // h_last
  Scalar bias = 0;

  int feature_dim() const { return layers.empty() ? 0 : static_cast<int>(layers.front().rows()); }
  std::size_t parameter_count() const;

  template <class Other>
  BasicGcnModel<Other> cast() const {
    BasicGcnModel<Other> out;
    for (const auto& w : layers) out.layers.push_back(w.template cast<Other>());
    out.head = head.template cast<Other>();
    out.bias = static_cast<Other>(bias);
    return out;
  }

  /// Same shapes, all zeros.
  BasicGcnModel zeros_like() const;

  friend bool operator==(const BasicGcnModel& a, const BasicGcnModel& b) {
    if (a.layers.size() != b.layers.size() || a.bias != b.bias || a.head != b.head) return false;
    for (std::size_t i = 0; i < a.layers.size(); ++i) {
      if (a.layers[i] != b.layers[i]) return false;
    }
    return true;
  }
};

using GcnModel = BasicGcnModel<float>;

/// Glorot-uniform weights, zero bias, deterministic in config.seed.
GcnModel init_model(int feat_dim, const GcnConfig& config);

/// Normalized adjacency plus the propagated input features (A_hat X), which
/// stay constant through training.
template <class Scalar>
struct GcnInputs {
  const CsrMatrix* a_hat = nullptr;
  RowMatrix<Scalar> propagated_features;

  std::int64_t num_nodes() const { return a_hat->rows; }
};

template <class Scalar>
GcnInputs<Scalar> prepare_inputs(const ArchGraph& graph);

/// One score per node.
template <class Scalar>
ColVector<Scalar> forward(const GcnInputs<Scalar>& inputs, const BasicGcnModel<Scalar>& model);

template <class Scalar>
ColVector<Scalar> forward(const ArchGraph& graph, const BasicGcnModel<Scalar>& model) {
  return forward(prepare_inputs<Scalar>(graph), model);
}

struct Label {
  std::int64_t node = 0;
  double value = 0.0;
};

enum class LossKind {
  L1,        // mean |r|, subgradient sign(r) with sign(0) = 0
  SmoothL1,  // mean sqrt(r^2 + d^2) - d; differentiable, used for gradient checks
};

template <class Scalar>
struct LossGradient {
  double data_loss = 0.0;   // mean loss over the labels
  double total_loss = 0.0;  // data_loss + weight_decay / 2 * |params|^2
  BasicGcnModel<Scalar> gradient;
};

/// Loss and analytic gradient over the labeled nodes. The weight-decay term
/// covers every parameter.
template <class Scalar>
LossGradient<Scalar> loss_and_gradient(const GcnInputs<Scalar>& inputs,
                                       const BasicGcnModel<Scalar>& model,
                                       std::span<const Label> labels, LossKind kind,
                                       double weight_decay, double smoothing = 1e-3);

struct TrainResult {
  GcnModel model;
  std::vector<double> loss_curve;  // mean L1 over labels, before each epoch's update
};

/// Full-batch Adam on the mean L1 loss. The head bias starts at the label median.
TrainResult train(const ArchGraph& graph, std::span<const Label> labels, const GcnConfig& config);

/// Versioned little-endian binary: magic, version, shapes, float32 weights.
void save_model(const GcnModel& model, const std::filesystem::path& path);
GcnModel load_model(const std::filesystem::path& path);

/// "epoch,loss" CSV.
void write_loss_csv(std::span<const double> curve, const std::filesystem::path& path);

}  // namespace nasgcn
