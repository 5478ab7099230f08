#include <gtest/gtest.h>

#include <cmath>

#include "nasgcn/error.hpp"
#include "nasgcn/evaluator.hpp"
#include "nasgcn/metrics.hpp"
#include "nasgcn/random.hpp"
#include "oracles.hpp"

using namespace nasgcn;

namespace {

SearchSpaceSpec space(int layers, int choices = 6) {
  SearchSpaceSpec s;
  s.num_layers = layers;
  s.choices_per_layer = choices;
  s.choice_labels = SearchSpaceSpec::default_labels();
  if (choices != 6) s.choice_labels.clear();
  return s;
}

GroundTruthParams flat(int layers, double base) {
  GroundTruthParams t;
  t.base = base;
  t.cell_utility.assign(static_cast<std::size_t>(layers), std::vector<double>(6, 0.0));
  return t;
}

Architecture random_arch(Rng& rng, int layers) {
  std::vector<int> c;
  for (int l = 0; l < layers; ++l) c.push_back(static_cast<int>(rng.uniform_index(6)));
  return Architecture(c);
}

}  // namespace

TEST(GroundTruth, FlatTableGivesBase) {
  const auto truth = flat(4, 0.8);
  Rng rng(1);
  for (int i = 0; i < 20; ++i) EXPECT_DOUBLE_EQ(ground_truth(random_arch(rng, 4), truth), 0.8);
}

TEST(GroundTruth, RaisingOneUtilityShiftsExactly) {
  auto truth = GroundTruthParams::random(space(4), 3, 0.01, 0.0);
  const double delta = 0.0123;
  Rng rng(2);
  for (int i = 0; i < 50; ++i) {
    auto arch = random_arch(rng, 4);
    arch[0] = 3;
    const double before = ground_truth(arch, truth);
    auto raised = truth;
    raised.cell_utility[0][3] += delta;
    EXPECT_NEAR(ground_truth(arch, raised) - before, delta, 1e-15);
  }
}

TEST(GroundTruth, SeparableArgmaxIsPerCellArgmax) {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const auto truth = GroundTruthParams::random(space(4), seed, 0.01, 0.0);
    const auto all = oracle::enumerate(space(4));
    const auto best = oracle::argmax(all, [&](const Architecture& a) { return ground_truth(a, truth); });
    EXPECT_EQ(best, oracle::per_cell_argmax(truth.cell_utility));
  }
}

TEST(GroundTruth, ClampedToUnitInterval) {
  auto truth = flat(2, 0.99);
  truth.cell_utility[0][0] = 0.5;
  EXPECT_EQ(ground_truth(Architecture({0, 0}), truth), 1.0);
  truth.base = -0.2;
  EXPECT_EQ(ground_truth(Architecture({1, 1}), truth), 0.0);
}

TEST(GroundTruth, InteractionTermMatchesDirectSum) {
  const auto truth = GroundTruthParams::random(space(4), 9, 0.01, 0.002);
  const Architecture a({3, 1, 4, 1});
  double z = truth.base;
  for (int l = 0; l < 4; ++l) z += truth.cell_utility[static_cast<std::size_t>(l)][static_cast<std::size_t>(a[static_cast<std::size_t>(l)])];
  for (int i = 0; i < 4; ++i) {
    for (int j = i + 1; j < 4; ++j) z += 0.002 * truth.interaction(i, a[static_cast<std::size_t>(i)], j, a[static_cast<std::size_t>(j)]);
  }
  EXPECT_NEAR(ground_truth(a, truth), z, 1e-15);
}

TEST(GroundTruth, UtilitiesCenteredPerLayer) {
  const auto truth = GroundTruthParams::random(space(19), 4);
  for (const auto& row : truth.cell_utility) {
    double sum = 0.0;
    for (double u : row) sum += u;
    EXPECT_NEAR(sum, 0.0, 1e-15);
  }
}

TEST(GroundTruth, DefaultsStayInsideClampMargins) {
  // Extremes of the additive part, plus a random sample, on the 19-cell space.
  const auto spec = space(19);
  const Subspace full = Subspace::full(spec);
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto truth = GroundTruthParams::random(spec, seed);
    std::vector<std::vector<double>> flipped = truth.cell_utility;
    for (auto& row : flipped) {
      for (double& u : row) u = -u;
    }
    std::vector<Architecture> probes{oracle::per_cell_argmax(truth.cell_utility), oracle::per_cell_argmax(flipped)};
    for (auto n : sample_node_indices(full, 2000, seed)) probes.push_back(full.materialize(full.assignment_of(n)));
    for (const auto& a : probes) {
      const double z = ground_truth(a, truth);
      EXPECT_GT(z, 0.05) << "seed " << seed;
      EXPECT_LT(z, 0.95) << "seed " << seed;
    }
  }
}

TEST(Supernet, NoiselessIsAffineInTruth) {
  const auto truth = GroundTruthParams::random(space(5), 1);
  const SyntheticSupernet net(truth, 0.95, 0.01, 0.0, 5);
  Rng rng(3);
  std::vector<double> z, zs;
  for (int i = 0; i < 300; ++i) {
    const auto a = random_arch(rng, 5);
    EXPECT_NEAR(net.evaluate(a), 0.95 * ground_truth(a, truth) + 0.01, 1e-15);
    z.push_back(net.evaluate(a));
    zs.push_back(ground_truth(a, truth));
  }
  EXPECT_DOUBLE_EQ(kendall_tau(z, zs), 1.0);
}

TEST(Supernet, RepeatedCallsAgree) {
  const SyntheticSupernet net(GroundTruthParams::random(space(5), 1), 0.95, 0.0, 0.02, 5);
  const Architecture a({0, 1, 2, 3, 4});
  EXPECT_EQ(net.evaluate(a), net.evaluate(a));
}

TEST(Supernet, NoiseHasZeroMean) {
  const double sigma = 0.02;
  const SyntheticSupernet net(GroundTruthParams::random(space(19), 1), 0.95, 0.0, sigma, 77);
  const Subspace full = Subspace::full(space(19));
  const auto nodes = sample_node_indices(full, 100'000, 3);
  double sum = 0.0, sum2 = 0.0;
  for (auto n : nodes) {
    const double e = net.noise(full.materialize(full.assignment_of(n)));
    sum += e;
    sum2 += e * e;
  }
  const double n = static_cast<double>(nodes.size());
  EXPECT_LT(std::abs(sum / n), 3 * sigma / std::sqrt(n));
  EXPECT_NEAR(std::sqrt(sum2 / n), sigma, 0.02 * sigma);
}

TEST(Supernet, AdvancedCheckpointIsIndependent) {
  const SyntheticSupernet first(GroundTruthParams::random(space(19), 1), 0.95, 0.0, 0.02, 77);
  const SyntheticSupernet second = first.advance_checkpoint();
  EXPECT_NE(first.checkpoint_seed(), second.checkpoint_seed());
  EXPECT_EQ(second.sigma(), first.sigma());
  const Subspace full = Subspace::full(space(19));
  std::vector<double> e1, e2;
  for (auto n : sample_node_indices(full, 20'000, 5)) {
    const auto a = full.materialize(full.assignment_of(n));
    e1.push_back(first.noise(a));
    e2.push_back(second.noise(a));
  }
  EXPECT_LT(std::abs(pearson(e1, e2)), 0.05);
  EXPECT_NE(first.evaluate(Architecture::uniform(space(19), 2)),
            second.evaluate(Architecture::uniform(space(19), 2)));
}

TEST(Supernet, AdvancingWithoutNoiseChangesNothing) {
  const SyntheticSupernet first(GroundTruthParams::random(space(6), 1), 0.95, 0.0, 0.0, 77);
  const auto second = first.advance_checkpoint();
  Rng rng(4);
  for (int i = 0; i < 100; ++i) {
    const auto a = random_arch(rng, 6);
    EXPECT_EQ(first.evaluate(a), second.evaluate(a));
  }
}

TEST(Supernet, NegativeSigmaRejected) {
  EXPECT_THROW(SyntheticSupernet(flat(2, 0.5), 1.0, 0.0, -0.1, 0), Error);
}

TEST(Calibration, HitsTargetTau) {
  const auto spec = space(6);
  const auto truth = GroundTruthParams::random(spec, 2);
  const auto cal = calibrate_sigma(spec, truth, 0.95, 0.0025, 11);
  EXPECT_NEAR(cal.tau, 0.547, 0.002);
  EXPECT_GT(cal.sigma, 0.0);

  // Independent check with the simulator's own checkpoints.
  const SyntheticSupernet a(truth, 0.95, 0.0025, cal.sigma, 100);
  const SyntheticSupernet b = a.advance_checkpoint();
  const Subspace full = Subspace::full(spec);
  std::vector<double> z1, z2;
  for (auto n : sample_node_indices(full, 10'000, 3)) {
    const auto arch = full.materialize(full.assignment_of(n));
    z1.push_back(a.evaluate(arch));
    z2.push_back(b.evaluate(arch));
  }
  const double tau = kendall_tau(z1, z2);
  EXPECT_GE(tau, 0.45);
  EXPECT_LE(tau, 0.65);
}

TEST(CostModel, FlopsSumsTable) {
  CostModel cost;
  cost.fixed_cost = 100;
  cost.cell_cost = {{1, 2, 3}, {10, 20, 30}};
  EXPECT_DOUBLE_EQ(flops(Architecture({2, 0}), cost), 113);
  EXPECT_DOUBLE_EQ(flops(Architecture({0, 2}), cost), 131);
  EXPECT_THROW(flops(Architecture({0}), cost), Error);
}

TEST(CostModel, RepresentativeTable) {
  const auto spec = space(19);
  const auto cost = CostModel::representative(spec);
  EXPECT_NO_THROW(cost.validate(spec));
  EXPECT_NEAR(flops(Architecture::uniform(spec, 5), cost), 600e6, 1e3);
  const double smallest = flops(Architecture::uniform(spec, 0), cost);
  EXPECT_LT(smallest, 400e6);
  // Larger expansion and kernel never get cheaper.
  for (const auto& row : cost.cell_cost) {
    EXPECT_LT(row[0], row[1]);  // k3e3 < k3e6
    EXPECT_LT(row[0], row[2]);  // k3e3 < k5e3
    EXPECT_LT(row[2], row[4]);  // k5e3 < k7e3
    EXPECT_LT(row[4], row[5]);  // k7e3 < k7e6
  }
  Rng rng(1);
  double mean = 0.0;
  for (int i = 0; i < 2000; ++i) mean += flops(random_arch(rng, 19), cost) / 2000;
  EXPECT_GT(mean, 380e6);
  EXPECT_LT(mean, 450e6);
}

TEST(CostModel, ValidateRejectsBadTables) {
  CostModel cost;
  cost.cell_cost = {{1, 2, 3}};
  EXPECT_THROW(cost.validate(space(2, 3)), Error);
  cost.cell_cost = {{1, 2, 3}, {1, -2, 3}};
  EXPECT_THROW(cost.validate(space(2, 3)), Error);
}
