#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "nasgcn/arch_graph.hpp"
#include "nasgcn/error.hpp"
#include "nasgcn/random.hpp"
#include "oracles.hpp"

using namespace nasgcn;

namespace {

SearchSpaceSpec space(int layers, int choices = 6) {
  SearchSpaceSpec s;
  s.num_layers = layers;
  s.choices_per_layer = choices;
  return s;
}

Subspace two_free() { return Subspace(space(3), {0, 1}, {{2, 0}}); }

std::int64_t row_degree(const CsrMatrix& m, std::int64_t r) {
  return m.row_ptr[static_cast<std::size_t>(r) + 1] - m.row_ptr[static_cast<std::size_t>(r)];
}

}  // namespace

TEST(NodeIndex, CornerCases) {
  const Subspace sub = two_free();
  EXPECT_EQ(node_index(sub, {0, 0}), 0U);
  EXPECT_EQ(node_index(sub, {5, 5}), 35U);
  EXPECT_THROW(assignment_of(sub, 36), Error);
}

TEST(NodeIndex, RoundTripsOverSuperCellSpaces) {
  SuperCell cell{{0, 1, 2}, {{0, 0, 0}, {1, 2, 3}, {5, 5, 5}, {2, 2, 1}}};
  const Subspace sub(space(6), {3, 5}, {{4, 2}}, {cell});
  Rng rng(2);
  for (int i = 0; i < 200; ++i) {
    const auto idx = rng.uniform_index(sub.node_count());
    EXPECT_EQ(node_index(sub, assignment_of(sub, idx)), idx);
  }
}

TEST(BuildGraph, TwoFreeCells) {
  const ArchGraph g = build_graph(two_free(), AssignedSimilarity{});
  EXPECT_EQ(g.num_nodes(), 36);
  EXPECT_EQ(g.num_edges(), 180);
  for (std::int64_t r = 0; r < g.num_nodes(); ++r) EXPECT_EQ(row_degree(g.adjacency(), r), 10);
  EXPECT_EQ(oracle::hamming_edges(two_free()).size(), 180U);
}

TEST(BuildGraph, AssignedWeightIsExpMinusHalf) {
  const ArchGraph g = build_graph(two_free(), AssignedSimilarity{});
  for (double w : g.adjacency().values) EXPECT_NEAR(w, 0.60653, 1e-5);
  EXPECT_DOUBLE_EQ(kAssignedWeight, std::exp(-0.5));
}

TEST(BuildGraph, EdgesMatchBruteForceOnThreeCells) {
  const Subspace sub = Subspace::full(space(3));
  const ArchGraph g = build_graph(sub, AssignedSimilarity{1.0});
  const Eigen::MatrixXd a = oracle::dense(g.adjacency());
  Eigen::MatrixXd expected = Eigen::MatrixXd::Zero(216, 216);
  for (auto [i, j] : oracle::hamming_edges(sub)) expected(i, j) = expected(j, i) = 1.0;
  EXPECT_EQ(a, expected);
}

TEST(BuildGraph, EdgesMatchBruteForceWithSuperCell) {
  SuperCell cell{{0, 1}, {{0, 0}, {1, 3}, {4, 2}}};
  const Subspace sub(space(4), {2, 3}, {}, {cell});
  const ArchGraph g = build_graph(sub, AssignedSimilarity{1.0});
  const Eigen::MatrixXd a = oracle::dense(g.adjacency());
  Eigen::MatrixXd expected = Eigen::MatrixXd::Zero(a.rows(), a.cols());
  for (auto [i, j] : oracle::hamming_edges(sub)) expected(i, j) = expected(j, i) = 1.0;
  EXPECT_EQ(a, expected);
  for (std::int64_t r = 0; r < g.num_nodes(); ++r) {
    EXPECT_EQ(row_degree(g.adjacency(), r), 2 * 5 + (3 - 1));
  }
}

TEST(BuildGraph, FeaturesMatchGrayTable) {
  SuperCell cell{{0, 1}, {{0, 0}, {1, 3}, {4, 2}}};
  const Subspace sub(space(4), {2, 3}, {}, {cell});
  const ArchGraph g = build_graph(sub, AssignedSimilarity{});
  EXPECT_EQ(g.feature_dim(), 12);
  EXPECT_EQ(g.feature_matrix<double>(), oracle::features(sub));
}

TEST(BuildGraph, SevenCellsDegreeThirtyFive) {
  const ArchGraph g = build_graph(Subspace::full(space(7)), AssignedSimilarity{});
  EXPECT_EQ(g.num_nodes(), 279'936);
  EXPECT_EQ(g.num_edges(), 279'936LL * 35 / 2);
  EXPECT_EQ(row_degree(g.adjacency(), 0), 35);
  EXPECT_EQ(row_degree(g.adjacency(), 279'935), 35);
  EXPECT_EQ(g.feature_dim(), 21);
}

TEST(BuildGraph, NodeCapRejectsLargeSubspaces) {
  EXPECT_THROW(build_graph(Subspace::full(space(4)), AssignedSimilarity{}, {}, 1000), Error);
}

TEST(Normalize, IsolatedNodeIsOne) {
  CsrMatrix a;
  a.rows = a.cols = 1;
  a.row_ptr = {0, 0};
  const CsrMatrix n = normalize_adjacency(a);
  EXPECT_EQ(oracle::dense(n), Eigen::MatrixXd::Ones(1, 1));
}

TEST(Normalize, TwoNodesOneEdge) {
  CsrMatrix a;
  a.rows = a.cols = 2;
  a.row_ptr = {0, 1, 2};
  a.col_idx = {1, 0};
  a.values = {1.0, 1.0};
  const Eigen::MatrixXd n = oracle::dense(normalize_adjacency(a));
  EXPECT_TRUE(n.isApprox(Eigen::MatrixXd::Constant(2, 2, 0.5), 1e-15));
}

TEST(Normalize, MatchesDenseFormula) {
  SuperCell cell{{0}, {{0}, {3}, {5}}};
  const Subspace sub(space(4), {1, 2, 3}, {}, {cell});
  std::vector<Sample> samples;
  Rng rng(4);
  for (std::uint64_t i = 0; i < sub.node_count(); ++i) samples.push_back({i, rng.uniform()});
  for (const SimilarityMode& mode : {SimilarityMode{AssignedSimilarity{}},
                                     SimilarityMode{MeasuredSimilarity{5, 0.01, kAssignedWeight}}}) {
    const ArchGraph g = build_graph(sub, mode, samples);
    const Eigen::MatrixXd expected = oracle::normalize(oracle::dense(g.adjacency()));
    EXPECT_TRUE(oracle::dense(g.normalized()).isApprox(expected, 1e-12));
  }
}

TEST(Normalize, SymmetricNonNegativeWithPositiveDiagonal) {
  const ArchGraph g = build_graph(Subspace::full(space(4)), AssignedSimilarity{});
  const Eigen::MatrixXd n = oracle::dense(g.normalized());
  EXPECT_TRUE(n.isApprox(n.transpose(), 0.0));
  EXPECT_GE(n.minCoeff(), 0.0);
  EXPECT_GT(n.diagonal().minCoeff(), 0.0);
  EXPECT_TRUE(g.normalized().is_symmetric(0.0));
  EXPECT_TRUE(g.adjacency().is_symmetric(0.0));
}

TEST(Normalize, SpectralRadiusAtMostOne) {
  SuperCell cell{{0, 1}, {{0, 0}, {1, 1}, {2, 2}, {3, 3}, {4, 4}, {5, 5}}};
  const Subspace with_super(space(5), {2, 3, 4}, {}, {cell});
  for (const Subspace& sub : {Subspace::full(space(5)), with_super}) {
    const ArchGraph g = build_graph(sub, AssignedSimilarity{});
    ASSERT_LE(g.num_nodes(), 10'000);
    EXPECT_LE(spectral_radius(g.normalized()), 1.0 + 1e-6);
  }
  // Dense cross-check on a small graph.
  const ArchGraph small = build_graph(Subspace::full(space(3)), AssignedSimilarity{});
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(oracle::dense(small.normalized()));
  EXPECT_LE(eig.eigenvalues().cwiseAbs().maxCoeff(), 1.0 + 1e-9);
}

TEST(MeasuredSimilarity, PerfectlyCorrelatedPairIsOne) {
  // One free layer plus one varying layer; accuracy depends only on the other
  // layer, so nodes differing at layer 0 have identical accuracies.
  const Subspace sub = Subspace::full(space(2));
  std::vector<Sample> samples;
  for (std::uint64_t i = 0; i < sub.node_count(); ++i) {
    const auto a = sub.assignment_of(i);
    samples.push_back({i, 0.1 * a[1] + 0.01 * a[1] * a[1]});
  }
  const auto table = measured_similarity(samples, sub, {2, 0.01, kAssignedWeight});
  EXPECT_DOUBLE_EQ(table.weight(0, 0, 3), 1.0);
  EXPECT_DOUBLE_EQ(table.weight(0, 3, 0), 1.0);
}

TEST(MeasuredSimilarity, TooFewPairsFallsBack) {
  const Subspace sub = Subspace::full(space(2));
  std::vector<Sample> samples;
  for (std::uint64_t i = 0; i < sub.node_count(); ++i) samples.push_back({i, static_cast<double>(i)});
  const auto table = measured_similarity(samples, sub, {30, 0.01, kAssignedWeight});
  // Only 6 pairs exist per choice pair.
  EXPECT_DOUBLE_EQ(table.weight(0, 1, 2), kAssignedWeight);
  EXPECT_DOUBLE_EQ(table.weight(1, 4, 5), kAssignedWeight);
}

TEST(MeasuredSimilarity, AntiCorrelatedPairClampsToFloor) {
  // Changing layer 0 from 0 to 1 flips the sign of the layer-1 effect.
  const Subspace sub = Subspace::full(space(2));
  std::vector<Sample> samples;
  for (std::uint64_t i = 0; i < sub.node_count(); ++i) {
    const auto a = sub.assignment_of(i);
    const double sign = a[0] == 1 ? -1.0 : 1.0;
    samples.push_back({i, sign * a[1]});
  }
  const auto table = measured_similarity(samples, sub, {2, 0.01, kAssignedWeight});
  EXPECT_DOUBLE_EQ(table.weight(0, 0, 1), 0.01);
}

TEST(MeasuredSimilarity, EmptySamplesThrow) {
  EXPECT_THROW(measured_similarity({}, two_free(), MeasuredSimilarity{}), Error);
}

TEST(MeasuredSimilarity, WeightsStayInRangeAndSymmetric) {
  const Subspace sub = Subspace::full(space(3));
  std::vector<Sample> samples;
  Rng rng(8);
  for (std::uint64_t i = 0; i < sub.node_count(); ++i) samples.push_back({i, rng.normal()});
  const auto table = measured_similarity(samples, sub, {3, 0.01, kAssignedWeight});
  for (std::size_t u = 0; u < 3; ++u) {
    for (int a = 0; a < 6; ++a) {
      for (int b = 0; b < 6; ++b) {
        if (a == b) continue;
        EXPECT_GE(table.weight(u, a, b), 0.01);
        EXPECT_LE(table.weight(u, a, b), 1.0);
        EXPECT_EQ(table.weight(u, a, b), table.weight(u, b, a));
      }
    }
  }
}

TEST(Dump, WritesEdgeListAndFeatures) {
  const ArchGraph g = build_graph(two_free(), AssignedSimilarity{});
  const auto path = std::filesystem::temp_directory_path() / "nasgcn_dump_test.edges";
  g.dump(path);
  std::ifstream in(path);
  std::int64_t u = 0, v = 0;
  double w = 0;
  int lines = 0;
  while (in >> u >> v >> w) {
    EXPECT_LT(u, v);
    ++lines;
  }
  EXPECT_EQ(lines, 180);
  EXPECT_TRUE(std::filesystem::exists(path.string() + ".features"));
  std::filesystem::remove(path);
  std::filesystem::remove(path.string() + ".features");
}
