#include "nasgcn/app/cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <charconv>
#include <map>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <optional>

#include "nasgcn/app/config.hpp"
#include "nasgcn/app/report.hpp"
#include "nasgcn/error.hpp"
#include "nasgcn/metrics.hpp"
#include "nasgcn/random.hpp"

namespace nasgcn::app {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

namespace {

constexpr const char* kCommands[] = {"search",          "round",       "predict",   "tau",
                                     "calibrate-sigma", "consistency", "constraint"};

struct CommonOptions {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out_dir;
};

void add_common(CLI::App* cmd, CommonOptions& o) {
  cmd->add_option("--config,-c", o.config, "JSON run configuration (defaults when omitted)");
  cmd->add_option("--seed", o.seed, "Override the config seed");
  cmd->add_option("--out,-o", o.out_dir, "Override the output directory");
}

RunConfig resolve(const CommonOptions& o) {
  RunConfig cfg = o.config.empty() ? parse_config(nlohmann::json::object()) : load_config(o.config);
  if (o.seed) set_seed(cfg, *o.seed);
  if (!o.out_dir.empty()) cfg.output_dir = o.out_dir;
  return cfg;
}

fs::path prepare_output(const RunConfig& cfg) {
  fs::create_directories(cfg.output_dir);
  return cfg.output_dir;
}

std::string fixed6(double x) {
  if (std::isnan(x)) return "nan";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", x);
  return buf;
}

/// Supernets per round; each round optionally sees a fresh checkpoint.
std::vector<SyntheticSupernet> checkpoints(const RunConfig& cfg) {
  std::vector<SyntheticSupernet> nets{make_supernet(cfg)};
  for (std::size_t t = 1; t < cfg.search.plan.rounds(); ++t) {
    nets.push_back(cfg.advance_checkpoint_per_round ? nets.back().advance_checkpoint() : nets.back());
  }
  return nets;
}

/// One plan segment free, every other layer fixed to `base`.
Subspace segment_subspace(const RunConfig& cfg, std::size_t segment, const Architecture& base) {
  if (segment >= cfg.search.plan.rounds()) {
    throw Error("segment " + std::to_string(segment) + " out of range; the plan has " +
                std::to_string(cfg.search.plan.rounds()));
  }
  base.check(cfg.space);
  const auto& free = cfg.search.plan.segments[segment];
  std::map<int, int> fixed;
  for (int l = 0; l < cfg.space.num_layers; ++l) {
    if (std::find(free.begin(), free.end(), l) == free.end()) fixed[l] = base[static_cast<std::size_t>(l)];
  }
  return Subspace(cfg.space, free, fixed);
}

Architecture base_architecture(const RunConfig& cfg, const std::string& text) {
  if (!text.empty()) return Architecture::parse(text);
  return cfg.search.initial_architecture.value_or(default_initial_architecture(cfg.space));
}

void write_round_files(const fs::path& dir, const Provenance& prov, const RoundOutcome& outcome) {
  const auto t = std::to_string(outcome.report.round);
  ordered_json j;
  j["command"] = prov.command;
  j["config_hash"] = prov.config_hash;
  j["seed"] = prov.seed;
  j.update(round_json(outcome.report));
  write_json(j, dir / ("round_" + t + ".json"));
  write_loss_csv(outcome.loss_curve, dir / ("loss_round_" + t + ".csv"));
}

void write_timings(const fs::path& path, const std::vector<RoundReport>& rounds) {
  std::ofstream os(path);
  os << "round,wall_seconds\n";
  for (const auto& r : rounds) os << r.round << ',' << fixed6(r.wall_seconds) << '\n';
}

struct SearchOptions {
  CommonOptions common;
  bool predictions = false;
  std::size_t top = 0;
};

int do_search(const SearchOptions& o, std::optional<double> budget, const std::string& command,
              std::ostream& out) {
  RunConfig cfg = resolve(o.common);
  if (budget) cfg.search.constraint_budget = *budget;
  const fs::path dir = prepare_output(cfg);
  const Provenance prov{command, config_hash(cfg), cfg.seed};
  const CostModel cost = make_cost_model(cfg);
  const auto nets = checkpoints(cfg);

  const SearchResult result = run_search(
      cfg.space, [&nets](std::size_t t) -> const Evaluator& { return nets[t]; }, cfg.search, &cost,
      [&](const RoundOutcome& outcome) {
        write_round_files(dir, prov, outcome);
        out << "round " << outcome.report.round << ": tau_val " << fixed6(outcome.report.tau_val)
            << ", best " << outcome.report.best_selected.arch.to_string() << " ("
            << fixed6(outcome.report.best_selected.accuracy) << ")\n";
      });

  write_json(result_json(prov, result, cost, cfg.search.constraint_budget), dir / "result.json");
  write_timings(dir / "timings.csv", result.rounds);
  const RoundOutcome& last = *result.final_round;
  save_model(last.model, dir / "model.bin");
  if (o.predictions) {
    write_predictions_csv(last.graph.subspace(), last.predictions, dir / "predictions.csv", o.top);
  }
  out << "architecture " << result.architecture.to_string() << "\naccuracy " << fixed6(result.accuracy)
      << "\nflops " << fixed6(flops(result.architecture, cost)) << '\n';
  return 0;
}

struct RoundOptions {
  CommonOptions common;
  std::size_t segment = 0;
  std::string base;
  bool predictions = false;
  std::size_t top = 0;
};

int do_round(const RoundOptions& o, std::ostream& out) {
  const RunConfig cfg = resolve(o.common);
  const fs::path dir = prepare_output(cfg);
  const Provenance prov{"round", config_hash(cfg), cfg.seed};
  const Subspace space = segment_subspace(cfg, o.segment, base_architecture(cfg, o.base));
  const SyntheticSupernet net = make_supernet(cfg);
  const RoundOutcome outcome = run_round(space, net, cfg.search, static_cast<int>(o.segment));
  write_round_files(dir, prov, outcome);
  write_timings(dir / "timings.csv", {outcome.report});
  save_model(outcome.model, dir / "model.bin");
  if (o.predictions) write_predictions_csv(space, outcome.predictions, dir / "predictions.csv", o.top);
  out << "nodes " << outcome.report.node_count << "\ntau_val " << fixed6(outcome.report.tau_val)
      << "\nreg_score_val " << fixed6(outcome.report.reg_score_val) << "\nbest "
      << outcome.report.best_selected.arch.to_string() << " " << fixed6(outcome.report.best_selected.accuracy)
      << '\n';
  return 0;
}

struct PredictOptions {
  CommonOptions common;
  std::string model;
  std::size_t segment = 0;
  std::string base;
  std::string output;
  std::size_t top = 0;
};

int do_predict(const PredictOptions& o, std::ostream& out) {
  const RunConfig cfg = resolve(o.common);
  const Subspace space = segment_subspace(cfg, o.segment, base_architecture(cfg, o.base));
  const GcnModel model = load_model(o.model);
  const ArchGraph graph = build_graph(space, cfg.search.similarity, {}, cfg.search.node_cap);
  if (model.feature_dim() != graph.feature_dim()) {
    throw Error("model expects " + std::to_string(model.feature_dim()) + " input features, the graph has " +
                std::to_string(graph.feature_dim()));
  }
  const auto scores = forward(graph, model);
  const std::vector<float> preds(scores.data(), scores.data() + scores.size());
  fs::path path = o.output;
  if (path.empty()) path = prepare_output(cfg) / "predictions.csv";
  write_predictions_csv(space, preds, path, o.top);
  out << "wrote " << preds.size() << " predictions to " << path.string() << '\n';
  return 0;
}

int do_tau(const std::string& a, const std::string& b, std::ostream& out) {
  const auto xs = read_csv_column(a);
  const auto ys = read_csv_column(b);
  std::vector<double> pa, pb;
  for (std::size_t i = 0; i < std::min(xs.size(), ys.size()); ++i) {
    if (std::isfinite(xs[i]) && std::isfinite(ys[i])) {
      pa.push_back(xs[i]);
      pb.push_back(ys[i]);
    }
  }
  out << fixed6(kendall_tau(pa, pb)) << '\n';
  return 0;
}

struct CalibrateOptions {
  CommonOptions common;
  int archs = 10'000;
  double target = 0.547;
};

int do_calibrate(const CalibrateOptions& o, std::ostream& out) {
  RunConfig cfg = resolve(o.common);
  cfg.simulator.sigma = 0.0;
  const SyntheticSupernet net = make_supernet(cfg);
  const auto cal = calibrate_sigma(cfg.space, net.truth(), net.a(), net.b(),
                                   derive_seed(cfg.seed, "calibration"), o.archs, o.target);
  ordered_json fragment;
  fragment["simulator"]["sigma"] = cal.sigma;
  write_json(fragment, prepare_output(cfg) / "sigma.json");
  ordered_json j;
  j["sigma"] = cal.sigma;
  j["tau"] = cal.tau;
  j["iterations"] = cal.iterations;
  out << emit_json(j);
  return 0;
}

struct ConsistencyOptions {
  CommonOptions common;
  std::uint64_t archs = 10'000;
};

int do_consistency(const ConsistencyOptions& o, std::ostream& out) {
  const RunConfig cfg = resolve(o.common);
  const fs::path dir = prepare_output(cfg);
  const SyntheticSupernet first = make_supernet(cfg);
  const SyntheticSupernet second = first.advance_checkpoint();
  const Subspace space = Subspace::full(cfg.space);
  const auto draw = std::min(o.archs, space.node_count());
  const auto nodes = sample_node_indices(space, draw, derive_seed(cfg.seed, "consistency"));

  std::vector<double> z1, z2, truth;
  std::ofstream csv(dir / "consistency.csv");
  csv << "architecture,checkpoint_1,checkpoint_2,ground_truth\n";
  for (auto node : nodes) {
    const Architecture arch = space.materialize(space.assignment_of(node));
    z1.push_back(first.evaluate(arch));
    z2.push_back(second.evaluate(arch));
    truth.push_back(first.ground_truth(arch));
    csv << '"' << arch.to_string() << "\"," << fixed6(z1.back()) << ',' << fixed6(z2.back()) << ','
        << fixed6(truth.back()) << '\n';
  }
  ordered_json j;
  j["command"] = "consistency";
  j["config_hash"] = config_hash(cfg);
  j["seed"] = cfg.seed;
  j["architectures"] = draw;
  j["sigma"] = first.sigma();
  j["tau_checkpoints"] = kendall_tau(z1, z2);
  j["tau_same_checkpoint"] = kendall_tau(z1, z1);
  j["tau_checkpoint_vs_truth"] = kendall_tau(z1, truth);
  j["reg_score_checkpoints"] = regression_score(z1, z2);
  write_json(j, dir / "consistency.json");
  out << emit_json(j);
  return 0;
}

/// Splits on commas outside double quotes; quotes are dropped.
std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells(1);
  bool quoted = false;
  for (char ch : line) {
    if (ch == '"') {
      quoted = !quoted;
    } else if (ch == ',' && !quoted) {
      cells.emplace_back();
    } else {
      cells.back() += ch;
    }
  }
  return cells;
}

}  // namespace

std::vector<double> read_csv_column(const std::string& spec) {
  const auto colon = spec.rfind(':');
  if (colon == std::string::npos || colon == 0) {
    throw Error("column spec \"" + spec + "\" must look like file.csv:N");
  }
  const std::string file = spec.substr(0, colon);
  const std::string col_text = spec.substr(colon + 1);
  int col = 0;
  auto [ptr, ec] = std::from_chars(col_text.data(), col_text.data() + col_text.size(), col);
  if (ec != std::errc{} || ptr != col_text.data() + col_text.size() || col < 1) {
    throw Error("column in \"" + spec + "\" must be a positive integer");
  }
  std::ifstream in(file);
  if (!in) throw Error("cannot open " + file);
  std::vector<double> values;
  std::string line;
  bool first_row = true;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const auto cells = split_csv_line(line);
    if (first_row && static_cast<std::size_t>(col) > cells.size()) {
      throw Error(file + " has " + std::to_string(cells.size()) + " columns, asked for column " +
                  std::to_string(col));
    }
    const std::string cell = static_cast<std::size_t>(col) <= cells.size() ? cells[col - 1] : "";
    const auto first = cell.find_first_not_of(" \t");
    const auto last = cell.find_last_not_of(" \t");
    double v = std::numeric_limits<double>::quiet_NaN();
    if (first != std::string::npos) {
      const char* begin = cell.data() + first;
      const char* end = cell.data() + last + 1;
      double parsed = 0.0;
      auto res = std::from_chars(begin, end, parsed);
      if (res.ec == std::errc{} && res.ptr == end) v = parsed;
    }
    const bool header = first_row && std::isnan(v);
    first_row = false;
    if (header) continue;
    values.push_back(v);
  }
  return values;
}

int run_command(std::span<const std::string> args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Architecture search with a graph-convolutional accuracy predictor", "nasgcn"};
  app.require_subcommand(1);

  SearchOptions search_opts;
  auto* search = app.add_subcommand("search", "Run the segmented search and write reports");
  add_common(search, search_opts.common);
  search->add_flag("--predictions", search_opts.predictions, "Write the final round's ranking");
  search->add_option("--top", search_opts.top, "Rows in predictions.csv (0 = all)");

  SearchOptions constraint_opts;
  double budget = 0.0;
  auto* constraint = app.add_subcommand("constraint", "Search, then pick the best architecture within a budget");
  add_common(constraint, constraint_opts.common);
  constraint->add_option("--budget", budget, "Multiply-add budget")->required()->check(CLI::PositiveNumber);
  constraint->add_flag("--predictions", constraint_opts.predictions, "Write the final round's ranking");
  constraint->add_option("--top", constraint_opts.top, "Rows in predictions.csv (0 = all)");

  RoundOptions round_opts;
  auto* round = app.add_subcommand("round", "Run one round over a single plan segment");
  add_common(round, round_opts.common);
  round->add_option("--segment", round_opts.segment, "Plan segment to search");
  round->add_option("--base", round_opts.base, "Architecture supplying the fixed layers");
  round->add_flag("--predictions", round_opts.predictions, "Write the ranking of every node");
  round->add_option("--top", round_opts.top, "Rows in predictions.csv (0 = all)");

  PredictOptions predict_opts;
  auto* predict = app.add_subcommand("predict", "Score every node of a segment with a saved model");
  add_common(predict, predict_opts.common);
  predict->add_option("--model", predict_opts.model, "Model file written by search or round")->required();
  predict->add_option("--segment", predict_opts.segment, "Plan segment the model was trained on");
  predict->add_option("--base", predict_opts.base, "Architecture supplying the fixed layers");
  predict->add_option("--output", predict_opts.output, "CSV path (default <out>/predictions.csv)");
  predict->add_option("--top", predict_opts.top, "Rows to write (0 = all)");

  std::string tau_a, tau_b;
  auto* tau = app.add_subcommand("tau", "Kendall tau between two CSV columns");
  tau->add_option("--a", tau_a, "file.csv:N (1-based column)")->required();
  tau->add_option("--b", tau_b, "file.csv:N (1-based column)")->required();

  CalibrateOptions cal_opts;
  auto* calibrate = app.add_subcommand("calibrate-sigma", "Noise level giving the target two-checkpoint tau");
  add_common(calibrate, cal_opts.common);
  calibrate->add_option("--archs", cal_opts.archs, "Architectures sampled")->check(CLI::Range(2, 10'000'000));
  calibrate->add_option("--target", cal_opts.target, "Target tau")->check(CLI::Range(-1.0, 1.0));

  ConsistencyOptions cons_opts;
  auto* consistency = app.add_subcommand("consistency", "Rank agreement between two checkpoints");
  add_common(consistency, cons_opts.common);
  consistency->add_option("--archs", cons_opts.archs, "Architectures sampled")->check(CLI::PositiveNumber);

  const bool known = !args.empty() && (std::find(std::begin(kCommands), std::end(kCommands), args[0]) !=
                                       std::end(kCommands));
  const bool help = !args.empty() && (args[0] == "-h" || args[0] == "--help");
  if (!known && !help) {
    if (!args.empty()) err << "unknown command: " << args[0] << "\n\n";
    err << app.help();
    return 2;
  }

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*search) return do_search(search_opts, std::nullopt, "search", out);
    if (*constraint) return do_search(constraint_opts, budget, "constraint", out);
    if (*round) return do_round(round_opts, out);
    if (*predict) return do_predict(predict_opts, out);
    if (*tau) return do_tau(tau_a, tau_b, out);
    if (*calibrate) return do_calibrate(cal_opts, out);
    if (*consistency) return do_consistency(cons_opts, out);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
  return 2;
}

}  // namespace nasgcn::app
