#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "nasgcn/search_space.hpp"

namespace nasgcn {

/// Accuracy oracle for architectures. Implementations must return the same
/// value for the same architecture while their state is unchanged, and must be
/// safe to call concurrently.
class Evaluator {
 public:
  virtual ~Evaluator() = default;
  virtual double evaluate(const Architecture& arch) const = 0;
  /// Advisory wall-clock cost of one evaluate() call.
  virtual double cost_seconds() const { return 0.0; }
};

/// Parameters of the synthetic ground-truth accuracy z*: per-cell utilities
/// plus weak pairwise interactions drawn from `interaction_seed`.
struct GroundTruthParams {
  double base = 0.85;
  std::vector<std::vector<double>> cell_utility;  // L x O
  double pair_strength = 0.0;
  std::uint64_t interaction_seed = 0;

  /// Utilities drawn N(0, utility_scale^2) and centered per layer, so `base`
  /// is the mean accuracy of the additive part.
  static GroundTruthParams random(const SearchSpaceSpec& spec, std::uint64_t seed,
                                  double utility_scale = 0.003, double pair_strength = 0.0003,
                                  double base = 0.85);

  /// Interaction term v[l,l'][o,o'] (standard normal, pure in the seed).
  double interaction(int l1, int o1, int l2, int o2) const;
};

/// clamp(base + sum_l u[l][arch_l] + gamma * sum_{l<l'} v[l,l'][arch_l, arch_l'], 0, 1).
double ground_truth(const Architecture& arch, const GroundTruthParams& truth);

/// Simulated weight-sharing evaluation:
/// z = a * z* + b + eps(arch, checkpoint), eps ~ N(0, sigma^2), clamped to [0, 1].
class SyntheticSupernet : public Evaluator {
 public:
  SyntheticSupernet(GroundTruthParams truth, double a, double b, double sigma,
                    std::uint64_t checkpoint_seed);

  double evaluate(const Architecture& arch) const override;
  double cost_seconds() const override { return 0.0; }

  /// The noise field realized for this checkpoint (already scaled by sigma).
  double noise(const Architecture& arch) const;
  double ground_truth(const Architecture& arch) const { return nasgcn::ground_truth(arch, truth_); }

  /// Same truth, a, b and sigma with an independently drawn noise field.
  SyntheticSupernet advance_checkpoint() const;
  SyntheticSupernet with_sigma(double sigma) const;

  const GroundTruthParams& truth() const { return truth_; }
  double a() const { return a_; }
  double b() const { return b_; }
  double sigma() const { return sigma_; }
  std::uint64_t checkpoint_seed() const { return checkpoint_seed_; }

 private:
  GroundTruthParams truth_;
  double a_;
  double b_;
  double sigma_;
  std::uint64_t checkpoint_seed_;
};

/// Hash of an architecture, mixed with a seed.
std::uint64_t architecture_hash(const Architecture& arch, std::uint64_t seed);

/// Multiply-add cost table.
struct CostModel {
  double fixed_cost = 0.0;
  std::vector<std::vector<double>> cell_cost;  // L x O

  void validate(const SearchSpaceSpec& spec) const;

  /// Synthetic MobileNet-v2 style table: the all-largest architecture costs
  /// about 600M multiply-adds and a random one about 400M.
  static CostModel representative(const SearchSpaceSpec& spec);
};

double flops(const Architecture& arch, const CostModel& cost);

struct SigmaCalibration {
  double sigma = 0.0;
  double tau = 0.0;  // two-checkpoint tau achieved at `sigma`
  int iterations = 0;
};

/// Bisects the noise level until the Kendall tau between two checkpoints'
/// evaluations of `num_archs` uniformly drawn architectures reaches
/// `target_tau` (to within `tolerance`).
SigmaCalibration calibrate_sigma(const SearchSpaceSpec& spec, const GroundTruthParams& truth,
                                 double a, double b, std::uint64_t seed, int num_archs = 10'000,
                                 double target_tau = 0.547, double tolerance = 0.002);

}  // namespace nasgcn
