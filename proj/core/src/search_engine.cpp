#include "nasgcn/search_engine.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <numeric>
#include <string>

#include "nasgcn/error.hpp"
#include "nasgcn/metrics.hpp"
#include "nasgcn/random.hpp"

namespace nasgcn {

void SearchConfig::validate(const SearchSpaceSpec& spec) const {
  if (m_samples < 2) throw Error("m_samples must be >= 2");
  if (train_split < 1 || train_split >= m_samples) {
    throw Error("train_split must be in [1, m_samples), got " + std::to_string(train_split));
  }
  if (k_preserve < 1) throw Error("k_preserve must be >= 1");
  if (top_pool < static_cast<std::uint64_t>(k_preserve)) {
    throw Error("top_pool (" + std::to_string(top_pool) + ") must be >= k_preserve (" +
                std::to_string(k_preserve) + ")");
  }
  if (plan.segments.empty()) throw Error("segment plan is empty");
  std::vector<int> seen(static_cast<std::size_t>(spec.num_layers), 0);
  for (const auto& seg : plan.segments) {
    if (seg.empty()) throw Error("segment plan contains an empty segment");
    for (int l : seg) {
      if (l < 0 || l >= spec.num_layers) throw Error("segment layer " + std::to_string(l) + " out of range");
      if (seen[static_cast<std::size_t>(l)]++) throw Error("segments overlap at layer " + std::to_string(l));
    }
  }
  for (int l = 0; l < spec.num_layers; ++l) {
    if (!seen[static_cast<std::size_t>(l)]) throw Error("layer " + std::to_string(l) + " is in no segment");
  }
  nasgcn::validate(similarity);
  gcn.validate();
  if (initial_architecture) initial_architecture->check(spec);
}

Architecture default_initial_architecture(const SearchSpaceSpec& spec) {
  return Architecture::uniform(spec, std::max(spec.choice_index("k3e6"), 0));
}

std::vector<Candidate> rank_by_reevaluation(std::span<const Candidate> candidates,
                                            const Evaluator& evaluator) {
  if (candidates.empty()) throw Error("re-verification needs at least one candidate");
  std::vector<Candidate> out(candidates.begin(), candidates.end());
  for (auto& c : out) c.accuracy = evaluator.evaluate(c.arch);
  std::stable_sort(out.begin(), out.end(), [](const Candidate& x, const Candidate& y) {
    return x.accuracy > y.accuracy || (x.accuracy == y.accuracy && x.node < y.node);
  });
  return out;
}

Candidate reverify(std::span<const Candidate> candidates, const Evaluator& evaluator) {
  return rank_by_reevaluation(candidates, evaluator).front();
}

std::vector<std::uint64_t> rank_by_prediction(std::span<const float> predictions) {
  std::vector<std::uint64_t> order(predictions.size());
  std::iota(order.begin(), order.end(), std::uint64_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::uint64_t a, std::uint64_t b) {
    return predictions[a] > predictions[b];
  });
  return order;
}

namespace {

std::vector<float> to_vector(const ColVector<float>& v) { return {v.data(), v.data() + v.size()}; }

double nan() { return std::numeric_limits<double>::quiet_NaN(); }

}  // namespace

RoundOutcome run_round(const Subspace& subspace, const Evaluator& evaluator,
                       const SearchConfig& config, int round_index) {
  const auto start = std::chrono::steady_clock::now();
  const std::string ctx = "round " + std::to_string(round_index) + ": ";
  const std::uint64_t nodes = subspace.node_count();
  if (nodes > config.node_cap) {
    throw Error(ctx + "subspace has " + std::to_string(nodes) + " nodes, above the cap of " +
                std::to_string(config.node_cap));
  }

  // Small subspaces are sampled exhaustively, keeping the train/validation ratio.
  const std::uint64_t m = std::min(config.m_samples, nodes);
  std::uint64_t m_train = m == config.m_samples
                              ? config.train_split
                              : (m * config.train_split) / config.m_samples;
  m_train = std::clamp<std::uint64_t>(m_train, 1, m);
  const std::uint64_t pool = std::min(config.top_pool, nodes);
  if (static_cast<std::uint64_t>(config.k_preserve) > pool) {
    throw Error(ctx + "k_preserve (" + std::to_string(config.k_preserve) +
                ") exceeds the re-verification pool (" + std::to_string(pool) + ")");
  }

  const std::string tag = "round-" + std::to_string(round_index);
  std::vector<std::uint64_t> drawn;
  try {
    drawn = sample_node_indices(subspace, m, derive_seed(config.seed, "sampling/" + tag));
  } catch (const Error& e) {
    throw Error(ctx + e.what());
  }

  std::vector<Sample> samples;
  samples.reserve(drawn.size());
  for (std::uint64_t node : drawn) {
    samples.push_back({node, evaluator.evaluate(subspace.materialize(subspace.assignment_of(node)))});
  }

  auto build = [&]() {
    try {
      return build_graph(subspace, config.similarity, samples, config.node_cap);
    } catch (const Error& e) {
      throw Error(ctx + e.what());
    }
  };
  RoundOutcome out{RoundReport{}, build(), GcnModel{}, {}, {}, std::move(samples)};
  auto& report = out.report;

  std::vector<Label> labels;
  for (std::uint64_t i = 0; i < m_train; ++i) {
    labels.push_back({static_cast<std::int64_t>(out.samples[i].node), out.samples[i].accuracy});
  }
  GcnConfig gcn = config.gcn;
  gcn.seed = derive_seed(config.seed, "gcn/" + tag);
  try {
    auto trained = train(out.graph, labels, gcn);
    out.model = std::move(trained.model);
    out.loss_curve = std::move(trained.loss_curve);
  } catch (const Error& e) {
    throw Error(ctx + e.what());
  }
  out.predictions = to_vector(forward(out.graph, out.model));

  std::vector<double> val_pred, val_label;
  for (std::uint64_t i = m_train; i < out.samples.size(); ++i) {
    val_pred.push_back(out.predictions[out.samples[i].node]);
    val_label.push_back(out.samples[i].accuracy);
  }
  report.round = round_index;
  report.node_count = nodes;
  report.samples = m;
  report.train_samples = m_train;
  report.validation_samples = m - m_train;
  report.tau_val = val_pred.size() >= 2 ? kendall_tau(val_pred, val_label) : nan();
  report.reg_score_val = nan();
  if (val_pred.size() >= 2) {
    try {
      report.reg_score_val = regression_score(val_pred, val_label);
    } catch (const Error&) {
      // constant held-out labels: leave undefined
    }
  }
  report.final_train_loss = out.loss_curve.empty() ? nan() : out.loss_curve.back();
  for (const auto& unit : subspace.units()) {
    if (!unit.is_super_cell()) report.searched_layers.push_back(unit.first_layer);
  }

  auto candidate = [&](std::uint64_t node, double accuracy) {
    return Candidate{node, subspace.materialize(subspace.assignment_of(node)), accuracy,
                     static_cast<double>(out.predictions[node])};
  };
  const Sample* best = &out.samples.front();
  for (const auto& s : out.samples) {
    if (s.accuracy > best->accuracy || (s.accuracy == best->accuracy && s.node < best->node)) best = &s;
  }
  report.best_sampled = candidate(best->node, best->accuracy);

  const auto order = rank_by_prediction(out.predictions);
  std::vector<Candidate> top;
  top.reserve(pool);
  for (std::uint64_t i = 0; i < pool; ++i) top.push_back(candidate(order[i], 0.0));
  const auto ranked = rank_by_reevaluation(top, evaluator);
  report.gcn_top1 = *std::find_if(ranked.begin(), ranked.end(),
                                  [&](const Candidate& c) { return c.node == order.front(); });
  report.best_selected = ranked.front();
  report.preserved.assign(ranked.begin(), ranked.begin() + config.k_preserve);
  report.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return out;
}

Candidate constraint_select(const ArchGraph& graph, std::span<const float> predictions,
                            const CostModel& cost, double budget, const Evaluator& evaluator,
                            std::uint64_t top_pool) {
  if (predictions.size() != static_cast<std::size_t>(graph.num_nodes())) {
    throw Error("prediction table does not match the graph");
  }
  if (top_pool < 1) throw Error("top_pool must be >= 1");
  const Subspace& space = graph.subspace();
  std::vector<Candidate> survivors;
  double cheapest = std::numeric_limits<double>::infinity();
  for (std::uint64_t node : rank_by_prediction(predictions)) {
    if (survivors.size() >= top_pool) break;
    Architecture arch = space.materialize(space.assignment_of(node));
    const double f = flops(arch, cost);
    cheapest = std::min(cheapest, f);
    if (f <= budget) survivors.push_back({node, std::move(arch), 0.0, predictions[node]});
  }
  if (survivors.empty()) {
    char msg[160];
    std::snprintf(msg, sizeof msg,
                  "no architecture within the budget of %.0f multiply-adds; the cheapest costs %.0f",
                  budget, cheapest);
    throw Error(msg);
  }
  return reverify(survivors, evaluator);
}

Candidate constraint_select(const ArchGraph& graph, const GcnModel& model, const CostModel& cost,
                            double budget, const Evaluator& evaluator, std::uint64_t top_pool) {
  return constraint_select(graph, to_vector(forward(graph, model)), cost, budget, evaluator, top_pool);
}

Subspace round_subspace(const SearchSpaceSpec& spec, const SegmentPlan& plan, std::size_t round,
                        const Architecture& current, std::span<const Candidate> preserved) {
  if (round >= plan.rounds()) throw Error("round index beyond the segment plan");
  std::vector<int> free = plan.segments[round];
  std::vector<int> earlier;
  for (std::size_t s = 0; s < round; ++s) {
    earlier.insert(earlier.end(), plan.segments[s].begin(), plan.segments[s].end());
  }
  std::sort(earlier.begin(), earlier.end());

  std::vector<SuperCell> super_cells;
  if (!earlier.empty()) {
    if (preserved.empty()) throw Error("rounds after the first need preserved candidates");
    SuperCell cell;
    cell.positions = earlier;
    for (const auto& cand : preserved) {
      std::vector<int> sub;
      for (int p : earlier) sub.push_back(cand.arch[static_cast<std::size_t>(p)]);
      cell.candidates.push_back(std::move(sub));
    }
    super_cells.push_back(std::move(cell));
  }
  std::map<int, int> fixed;
  std::vector<bool> taken(static_cast<std::size_t>(spec.num_layers), false);
  for (int p : free) taken[static_cast<std::size_t>(p)] = true;
  for (int p : earlier) taken[static_cast<std::size_t>(p)] = true;
  for (int l = 0; l < spec.num_layers; ++l) {
    if (!taken[static_cast<std::size_t>(l)]) fixed[l] = current[static_cast<std::size_t>(l)];
  }
  return Subspace(spec, std::move(free), std::move(fixed), std::move(super_cells));
}

SearchResult run_search(const SearchSpaceSpec& spec, const EvaluatorForRound& evaluator,
                        const SearchConfig& config, const CostModel* cost,
                        const RoundObserver& observer) {
  config.validate(spec);
  if (config.constraint_budget && !cost) throw Error("a constraint budget needs a cost model");
  SearchResult result;
  Architecture current = config.initial_architecture.value_or(default_initial_architecture(spec));
  std::vector<Candidate> preserved;
  for (std::size_t t = 0; t < config.plan.rounds(); ++t) {
    const Subspace space = [&] {
      try {
        return round_subspace(spec, config.plan, t, current, preserved);
      } catch (const Error& e) {
        throw Error("round " + std::to_string(t) + ": " + e.what());
      }
    }();
    RoundOutcome outcome = run_round(space, evaluator(t), config, static_cast<int>(t));
    if (observer) observer(outcome);
    preserved = outcome.report.preserved;
    current = outcome.report.best_selected.arch;
    result.rounds.push_back(outcome.report);
    result.final_round = std::move(outcome);
  }
  const RoundOutcome& last = *result.final_round;
  Candidate pick = last.report.best_selected;
  if (config.constraint_budget) {
    pick = constraint_select(last.graph, last.predictions, *cost, *config.constraint_budget,
                             evaluator(config.plan.rounds() - 1),
                             std::min(config.top_pool, last.report.node_count));
  }
  result.architecture = pick.arch;
  result.accuracy = pick.accuracy;
  return result;
}

SearchResult run_search(const SearchSpaceSpec& spec, const Evaluator& evaluator,
                        const SearchConfig& config, const CostModel* cost,
                        const RoundObserver& observer) {
  return run_search(spec, [&evaluator](std::size_t) -> const Evaluator& { return evaluator; }, config,
                    cost, observer);
}

}  // namespace nasgcn
