#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <span>
#include <variant>
#include <vector>

#include "nasgcn/linalg.hpp"
#include "nasgcn/search_space.hpp"

namespace nasgcn {

/// Default edge weight of the assigned similarity, e^{-0.5}.
inline const double kAssignedWeight = std::exp(-0.5);

/// Default cap on graph size: 6^7 nodes.
inline constexpr std::uint64_t kDefaultNodeCap = 279'936;

/// Every Hamming-1 edge carries the same weight.
struct AssignedSimilarity {
  double weight = kAssignedWeight;
};

/// Edge weight depends on which position changed and between which two
/// choices; estimated from evaluated samples.
struct MeasuredSimilarity {
  int min_pairs = 30;
  double floor = 0.01;
  double fallback = kAssignedWeight;
};

using SimilarityMode = std::variant<AssignedSimilarity, MeasuredSimilarity>;

void validate(const SimilarityMode& mode);

/// An evaluated node of a subspace.
struct Sample {
  std::uint64_t node = 0;
  double accuracy = 0.0;
};

/// Edge weights per searchable unit: weights[u][a * radix + b], symmetric in
/// (a, b). The diagonal is unused.
struct SimilarityTable {
  std::vector<int> radix;
  std::vector<std::vector<double>> weights;

  double weight(std::size_t unit, int a, int b) const {
    return weights[unit][static_cast<std::size_t>(a * radix[unit] + b)];
  }
};

SimilarityTable assigned_similarity(const Subspace& subspace, double weight);

/// Pearson correlation of accuracies over sample pairs that differ only at
/// one unit, per (unit, choice pair); clamped to [floor, 1], with the fallback
/// weight where fewer than min_pairs pairs were observed.
SimilarityTable measured_similarity(std::span<const Sample> samples, const Subspace& subspace,
                                    const MeasuredSimilarity& params);

/// The round graph: one node per assignment of a subspace, Hamming-1 edges, Gray-code
/// features of the materialized architectures.
class ArchGraph {
 public:
  const Subspace& subspace() const { return subspace_; }
  std::int64_t num_nodes() const { return num_nodes_; }
  std::int64_t num_edges() const { return adjacency_.nnz() / 2; }
  int feature_dim() const { return feature_dim_; }

  /// Symmetric weighted adjacency without self loops.
  const CsrMatrix& adjacency() const { return adjacency_; }
  /// D^{-1/2} (A + I) D^{-1/2}.
  const CsrMatrix& normalized() const { return normalized_; }
  /// Row-major num_nodes x feature_dim matrix of 0/1 bytes.
  const std::vector<std::uint8_t>& features() const { return features_; }

  template <class Scalar>
  RowMatrix<Scalar> feature_matrix() const {
    RowMatrix<Scalar> out(num_nodes_, feature_dim_);
    for (std::int64_t i = 0; i < out.size(); ++i) out.data()[i] = static_cast<Scalar>(features_[i]);
    return out;
  }

  /// Writes "u v w" per undirected edge (u < v) and a binary feature sidecar
  /// next to it (`<path>.features`).
  void dump(const std::filesystem::path& edge_list_path) const;

 private:
  friend ArchGraph build_graph(const Subspace&, const SimilarityMode&, std::span<const Sample>,
                               std::uint64_t);
  friend ArchGraph graph_from_parts(Subspace, CsrMatrix, std::vector<std::uint8_t>, int);

  explicit ArchGraph(Subspace subspace) : subspace_(std::move(subspace)) {}

  Subspace subspace_;
  std::int64_t num_nodes_ = 0;
  int feature_dim_ = 0;
  CsrMatrix adjacency_;
  CsrMatrix normalized_;
  std::vector<std::uint8_t> features_;
};

/// Builds and normalizes the round graph. Measured mode derives its weights from
/// `samples`; subspaces with more than `node_cap` nodes are rejected.
ArchGraph build_graph(const Subspace& subspace, const SimilarityMode& mode,
                      std::span<const Sample> samples = {},
                      std::uint64_t node_cap = kDefaultNodeCap);

/// Assembles a graph from an explicit adjacency and feature matrix. Used to
/// test propagation on hand-made graphs (e.g. permuted node orders).
ArchGraph graph_from_parts(Subspace subspace, CsrMatrix adjacency,
                           std::vector<std::uint8_t> features, int feature_dim);

/// Symmetric renormalization with self loops.
CsrMatrix normalize_adjacency(const CsrMatrix& adjacency);

inline std::uint64_t node_index(const Subspace& subspace, const Assignment& assignment) {
  return subspace.node_index(assignment);
}
inline Assignment assignment_of(const Subspace& subspace, std::uint64_t index) {
  return subspace.assignment_of(index);
}

/// Largest eigenvalue magnitude of a symmetric matrix by power iteration.
double spectral_radius(const CsrMatrix& m, int iterations = 200, std::uint64_t seed = 1);

}  // namespace nasgcn
