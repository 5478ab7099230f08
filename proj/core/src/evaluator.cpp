#include "nasgcn/evaluator.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <string>

#include "nasgcn/error.hpp"
#include "nasgcn/metrics.hpp"
#include "nasgcn/random.hpp"

namespace nasgcn {

GroundTruthParams GroundTruthParams::random(const SearchSpaceSpec& spec, std::uint64_t seed,
                                            double utility_scale, double pair_strength,
                                            double base) {
  spec.validate();
  GroundTruthParams p;
  p.base = base;
  p.pair_strength = pair_strength;
  p.interaction_seed = derive_seed(seed, "interactions");
  Rng rng(derive_seed(seed, "utilities"));
  p.cell_utility.assign(static_cast<std::size_t>(spec.num_layers),
                        std::vector<double>(static_cast<std::size_t>(spec.choices_per_layer)));
  for (auto& layer : p.cell_utility) {
    double mean = 0.0;
    for (auto& u : layer) {
      u = utility_scale * rng.normal();
      mean += u;
    }
    mean /= static_cast<double>(layer.size());
    for (auto& u : layer) u -= mean;
  }
  return p;
}

double GroundTruthParams::interaction(int l1, int o1, int l2, int o2) const {
  std::uint64_t key = interaction_seed;
  key = splitmix64(key ^ static_cast<std::uint64_t>(l1));
  key = splitmix64(key ^ static_cast<std::uint64_t>(o1));
  key = splitmix64(key ^ static_cast<std::uint64_t>(l2));
  key = splitmix64(key ^ static_cast<std::uint64_t>(o2));
  return hashed_normal(key);
}

double ground_truth(const Architecture& arch, const GroundTruthParams& truth) {
  double z = truth.base;
  const std::size_t n = arch.size();
  if (truth.cell_utility.size() != n) {
    throw Error("ground truth has " + std::to_string(truth.cell_utility.size()) +
                " utility rows for an architecture of " + std::to_string(n) + " cells");
  }
  for (std::size_t l = 0; l < n; ++l) z += truth.cell_utility[l][static_cast<std::size_t>(arch[l])];
  if (truth.pair_strength != 0.0) {
    double pairs = 0.0;
    for (std::size_t l1 = 0; l1 < n; ++l1) {
      for (std::size_t l2 = l1 + 1; l2 < n; ++l2) {
        pairs += truth.interaction(static_cast<int>(l1), arch[l1], static_cast<int>(l2), arch[l2]);
      }
    }
    z += truth.pair_strength * pairs;
  }
  return std::clamp(z, 0.0, 1.0);
}

std::uint64_t architecture_hash(const Architecture& arch, std::uint64_t seed) {
  std::uint64_t h = splitmix64(seed ^ 0x6A09E667F3BCC909ULL);
  for (int c : arch.choices()) h = splitmix64(h ^ (static_cast<std::uint64_t>(c) + 1));
  return h;
}

SyntheticSupernet::SyntheticSupernet(GroundTruthParams truth, double a, double b, double sigma,
                                     std::uint64_t checkpoint_seed)
    : truth_(std::move(truth)), a_(a), b_(b), sigma_(sigma), checkpoint_seed_(checkpoint_seed) {
  if (!(sigma_ >= 0.0)) throw Error("noise sigma must be >= 0");
}

double SyntheticSupernet::noise(const Architecture& arch) const {
  if (sigma_ == 0.0) return 0.0;
  return sigma_ * hashed_normal(architecture_hash(arch, checkpoint_seed_));
}

double SyntheticSupernet::evaluate(const Architecture& arch) const {
  return std::clamp(a_ * nasgcn::ground_truth(arch, truth_) + b_ + noise(arch), 0.0, 1.0);
}

SyntheticSupernet SyntheticSupernet::advance_checkpoint() const {
  return SyntheticSupernet(truth_, a_, b_, sigma_, derive_seed(checkpoint_seed_, "next-checkpoint"));
}

SyntheticSupernet SyntheticSupernet::with_sigma(double sigma) const {
  return SyntheticSupernet(truth_, a_, b_, sigma, checkpoint_seed_);
}

void CostModel::validate(const SearchSpaceSpec& spec) const {
  if (fixed_cost < 0.0) throw Error("fixed_cost must be >= 0");
  if (static_cast<int>(cell_cost.size()) != spec.num_layers) {
    throw Error("cost table has " + std::to_string(cell_cost.size()) + " rows, expected " +
                std::to_string(spec.num_layers));
  }
  for (const auto& row : cell_cost) {
    if (static_cast<int>(row.size()) != spec.choices_per_layer) {
      throw Error("cost table row has " + std::to_string(row.size()) + " entries, expected " +
                  std::to_string(spec.choices_per_layer));
    }
    for (double c : row) {
      if (!(c >= 0.0)) throw Error("cost table entries must be >= 0");
    }
  }
}

namespace {

/// Relative cost of a cell choice. Labels of the form "k<kernel>e<expansion>"
/// are interpreted; otherwise cost grows linearly with the choice index.
double choice_factor(const SearchSpaceSpec& spec, int o) {
  if (static_cast<std::size_t>(o) < spec.choice_labels.size()) {
    int kernel = 0, expansion = 0;
    if (std::sscanf(spec.choice_labels[static_cast<std::size_t>(o)].c_str(), "k%de%d", &kernel,
                    &expansion) == 2 &&
        kernel > 0 && expansion > 0) {
      // Pointwise convolutions dominate; the depthwise kernel adds a little.
      const double kernel_factor = 1.0 + 0.175 * (kernel - 3) / 2.0;
      return (expansion / 6.0) * kernel_factor;
    }
  }
  return 0.5 + 0.85 * o / static_cast<double>(spec.choices_per_layer - 1);
}

}  // namespace

CostModel CostModel::representative(const SearchSpaceSpec& spec) {
  spec.validate();
  // Relative weight of the seven MobileNet-v2 stages (2,3,4,3,3,3,1 cells).
  constexpr int kStageCells[7] = {2, 3, 4, 3, 3, 3, 1};
  constexpr double kStageWeight[7] = {1.3, 1.0, 0.8, 0.9, 1.1, 0.9, 1.2};
  std::vector<double> layer_weight(static_cast<std::size_t>(spec.num_layers));
  for (int l = 0; l < spec.num_layers; ++l) {
    int slot = (l * 19) / spec.num_layers, stage = 0;
    while (slot >= kStageCells[stage]) slot -= kStageCells[stage++];
    layer_weight[static_cast<std::size_t>(l)] = kStageWeight[stage];
  }
  double weight_sum = 0.0;
  for (double w : layer_weight) weight_sum += w;

  double max_factor = 0.0;
  for (int o = 0; o < spec.choices_per_layer; ++o) max_factor = std::max(max_factor, choice_factor(spec, o));

  CostModel cost;
  cost.fixed_cost = 80e6;
  const double cell_budget = 600e6 - cost.fixed_cost;  // all-largest architecture
  cost.cell_cost.resize(static_cast<std::size_t>(spec.num_layers));
  for (int l = 0; l < spec.num_layers; ++l) {
    const double layer_base = cell_budget * layer_weight[static_cast<std::size_t>(l)] / weight_sum / max_factor;
    auto& row = cost.cell_cost[static_cast<std::size_t>(l)];
    for (int o = 0; o < spec.choices_per_layer; ++o) {
      row.push_back(std::round(layer_base * choice_factor(spec, o)));
    }
  }
  return cost;
}

double flops(const Architecture& arch, const CostModel& cost) {
  if (arch.size() != cost.cell_cost.size()) throw Error("cost table does not match architecture length");
  double total = cost.fixed_cost;
  for (std::size_t l = 0; l < arch.size(); ++l) total += cost.cell_cost[l][static_cast<std::size_t>(arch[l])];
  return total;
}

SigmaCalibration calibrate_sigma(const SearchSpaceSpec& spec, const GroundTruthParams& truth,
                                 double a, double b, std::uint64_t seed, int num_archs,
                                 double target_tau, double tolerance) {
  if (num_archs < 2) throw Error("calibration needs at least 2 architectures");
  const Subspace space = Subspace::full(spec);
  const auto draw = std::min<std::uint64_t>(static_cast<std::uint64_t>(num_archs), space.node_count());
  const auto nodes = sample_node_indices(space, draw, derive_seed(seed, "calibration-sample"));

  std::vector<double> signal, g1, g2;
  double mean = 0.0;
  for (std::uint64_t idx : nodes) {
    const Architecture arch = space.materialize(space.assignment_of(idx));
    signal.push_back(a * ground_truth(arch, truth) + b);
    mean += signal.back();
    g1.push_back(hashed_normal(architecture_hash(arch, derive_seed(seed, "calibration-ckpt-1"))));
    g2.push_back(hashed_normal(architecture_hash(arch, derive_seed(seed, "calibration-ckpt-2"))));
  }
  mean /= static_cast<double>(signal.size());
  double var = 0.0;
  for (double s : signal) var += (s - mean) * (s - mean);
  const double spread = std::sqrt(var / static_cast<double>(signal.size()));
  if (spread == 0.0) throw Error("ground truth is constant; cannot calibrate sigma");

  std::vector<double> z1(signal.size()), z2(signal.size());
  auto tau_at = [&](double sigma) {
    for (std::size_t i = 0; i < signal.size(); ++i) {
      z1[i] = std::clamp(signal[i] + sigma * g1[i], 0.0, 1.0);
      z2[i] = std::clamp(signal[i] + sigma * g2[i], 0.0, 1.0);
    }
    return kendall_tau(z1, z2);
  };

  double lo = 0.0, hi = spread;
  while (tau_at(hi) > target_tau) hi *= 2.0;
  SigmaCalibration result;
  for (result.iterations = 1; result.iterations <= 60; ++result.iterations) {
    result.sigma = 0.5 * (lo + hi);
    result.tau = tau_at(result.sigma);
    if (std::abs(result.tau - target_tau) <= tolerance) break;
    (result.tau > target_tau ? lo : hi) = result.sigma;
  }
  return result;
}

}  // namespace nasgcn
