#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "nasgcn/arch_graph.hpp"
#include "nasgcn/evaluator.hpp"
#include "nasgcn/gcn.hpp"
#include "nasgcn/search_space.hpp"

namespace nasgcn {

struct SearchConfig {
  std::uint64_t m_samples = 2000;
  /// Samples used for GCN training; the remainder validates.
  std::uint64_t train_split = 1800;
  /// GCN top-ranked nodes that are re-evaluated.
  std::uint64_t top_pool = 100;
  /// Candidates carried into the next round as a super-cell.
  int k_preserve = 6;
  SegmentPlan plan;
  SimilarityMode similarity = AssignedSimilarity{};
  GcnConfig gcn;
  std::uint64_t seed = 0;
  std::optional<double> constraint_budget;
  /// Starting architecture; defaults to default_initial_architecture().
  std::optional<Architecture> initial_architecture;
  std::uint64_t node_cap = kDefaultNodeCap;

  void validate(const SearchSpaceSpec& spec) const;
};

/// All cells at "k3e6" when that label exists, otherwise choice 0.
Architecture default_initial_architecture(const SearchSpaceSpec& spec);

struct Candidate {
  std::uint64_t node = 0;
  Architecture arch;
  double accuracy = 0.0;   // evaluator output
  double predicted = 0.0;  // GCN score (0 when not applicable)
};

struct RoundReport {
  int round = 0;
  std::vector<int> searched_layers;
  std::uint64_t node_count = 0;
  std::uint64_t samples = 0;
  std::uint64_t train_samples = 0;
  std::uint64_t validation_samples = 0;
  double tau_val = 0.0;        // held-out Kendall tau, NaN with < 2 held-out pairs
  double reg_score_val = 0.0;  // held-out regression score, NaN when undefined
  double final_train_loss = 0.0;
  Candidate best_sampled;   // best raw sample
  Candidate gcn_top1;       // GCN's favourite, with its evaluated accuracy
  Candidate best_selected;  // after re-verification
  std::vector<Candidate> preserved;
  double wall_seconds = 0.0;
};

/// Everything a round produces; the graph and model back the lookup table.
struct RoundOutcome {
  RoundReport report;
  ArchGraph graph;
  GcnModel model;
  std::vector<double> loss_curve;
  std::vector<float> predictions;  // per node
  std::vector<Sample> samples;     // in draw order; the first train_samples train the GCN
};

/// Sample, evaluate, fit the GCN, rank every node, re-evaluate the top pool and
/// keep the best k_preserve.
RoundOutcome run_round(const Subspace& subspace, const Evaluator& evaluator,
                       const SearchConfig& config, int round_index = 0);

/// Evaluates every candidate once and orders them by accuracy (descending),
/// ties by lower node index.
std::vector<Candidate> rank_by_reevaluation(std::span<const Candidate> candidates,
                                            const Evaluator& evaluator);

/// Best candidate after re-evaluation.
Candidate reverify(std::span<const Candidate> candidates, const Evaluator& evaluator);

/// Node indices ordered by prediction (descending), ties by lower index.
std::vector<std::uint64_t> rank_by_prediction(std::span<const float> predictions);

/// Filters the GCN ranking to nodes within `budget` multiply-adds, re-evaluates
/// the first `top_pool` survivors and returns the best.
Candidate constraint_select(const ArchGraph& graph, std::span<const float> predictions,
                            const CostModel& cost, double budget, const Evaluator& evaluator,
                            std::uint64_t top_pool);
Candidate constraint_select(const ArchGraph& graph, const GcnModel& model, const CostModel& cost,
                            double budget, const Evaluator& evaluator, std::uint64_t top_pool);

/// Builds round t's subspace: segment t free, earlier segments collapsed into a
/// super-cell of `preserved` (empty for t = 0), everything else fixed to `current`.
Subspace round_subspace(const SearchSpaceSpec& spec, const SegmentPlan& plan, std::size_t round,
                        const Architecture& current, std::span<const Candidate> preserved);

struct SearchResult {
  Architecture architecture;
  double accuracy = 0.0;
  std::vector<RoundReport> rounds;
  /// Final round's graph, model and predictions, for lookup-table queries.
  std::optional<RoundOutcome> final_round;
};

using EvaluatorForRound = std::function<const Evaluator&(std::size_t round)>;
/// Called once per finished round, before the next one starts.
using RoundObserver = std::function<void(const RoundOutcome&)>;

/// Segmented search over config.plan. With constraint_budget set, the final
/// pick is made by constraint_select over the last round's lookup table.
SearchResult run_search(const SearchSpaceSpec& spec, const EvaluatorForRound& evaluator,
                        const SearchConfig& config, const CostModel* cost = nullptr,
                        const RoundObserver& observer = {});
SearchResult run_search(const SearchSpaceSpec& spec, const Evaluator& evaluator,
                        const SearchConfig& config, const CostModel* cost = nullptr,
                        const RoundObserver& observer = {});

}  // namespace nasgcn
