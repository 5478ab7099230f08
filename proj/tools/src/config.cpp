#include "nasgcn/app/config.hpp"

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <set>
#include <string_view>
#include <variant>

#include "nasgcn/error.hpp"
#include "nasgcn/random.hpp"

namespace nasgcn::app {

using nlohmann::json;
using nlohmann::ordered_json;

namespace {

/// Walks one JSON object, remembering which keys were consumed so leftovers
/// can be reported.
class ObjectReader {
 public:
  ObjectReader(const json& node, std::string path) : node_(node), path_(std::move(path)) {
    if (!node_.is_object()) fail(path_, "expected an object");
  }

  [[noreturn]] static void fail(const std::string& path, const std::string& what) {
    throw ConfigError(path + ": " + what);
  }

  std::string path_of(std::string_view key) const { return path_ + "." + std::string(key); }

  const json* find(std::string_view key) {
    seen_.insert(std::string(key));
    auto it = node_.find(std::string(key));
    if (it == node_.end() || it->is_null()) return nullptr;
    return &*it;
  }

  std::optional<double> number(std::string_view key) {
    const json* v = find(key);
    if (!v) return std::nullopt;
    if (!v->is_number()) fail(path_of(key), "expected a number");
    return v->get<double>();
  }

  std::optional<std::int64_t> integer(std::string_view key) {
    const json* v = find(key);
    if (!v) return std::nullopt;
    if (!v->is_number_integer()) fail(path_of(key), "expected an integer");
    if (v->is_number_unsigned() && v->get<std::uint64_t>() > static_cast<std::uint64_t>(INT64_MAX)) {
      fail(path_of(key), "integer out of range");
    }
    return v->get<std::int64_t>();
  }

  std::optional<std::uint64_t> unsigned_integer(std::string_view key) {
    const json* v = find(key);
    if (!v) return std::nullopt;
    if (!v->is_number_unsigned()) fail(path_of(key), "expected a non-negative integer");
    return v->get<std::uint64_t>();
  }

  std::optional<bool> boolean(std::string_view key) {
    const json* v = find(key);
    if (!v) return std::nullopt;
    if (!v->is_boolean()) fail(path_of(key), "expected true or false");
    return v->get<bool>();
  }

  std::optional<std::string> string(std::string_view key) {
    const json* v = find(key);
    if (!v) return std::nullopt;
    if (!v->is_string()) fail(path_of(key), "expected a string");
    return v->get<std::string>();
  }

  void finish() const {
    for (const auto& [key, value] : node_.items()) {
      if (!seen_.count(key)) fail(path_of(key), "unknown key");
    }
  }

 private:
  const json& node_;
  std::string path_;
  std::set<std::string> seen_;
};

std::vector<int> int_list(const json& v, const std::string& path, int min_value) {
  if (!v.is_array()) ObjectReader::fail(path, "expected an array of integers");
  std::vector<int> out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    const auto item_path = path + "[" + std::to_string(i) + "]";
    if (!v[i].is_number_integer()) ObjectReader::fail(item_path, "expected an integer");
    const auto x = v[i].get<std::int64_t>();
    if (x < min_value || x > INT32_MAX) {
      ObjectReader::fail(item_path, "must be >= " + std::to_string(min_value));
    }
    out.push_back(static_cast<int>(x));
  }
  return out;
}

std::vector<std::vector<double>> number_table(const json& v, const std::string& path) {
  if (!v.is_array()) ObjectReader::fail(path, "expected an array of rows");
  std::vector<std::vector<double>> out;
  for (std::size_t r = 0; r < v.size(); ++r) {
    const auto row_path = path + "[" + std::to_string(r) + "]";
    if (!v[r].is_array()) ObjectReader::fail(row_path, "expected an array of numbers");
    auto& row = out.emplace_back();
    for (std::size_t c = 0; c < v[r].size(); ++c) {
      if (!v[r][c].is_number()) {
        ObjectReader::fail(row_path + "[" + std::to_string(c) + "]", "expected a number");
      }
      row.push_back(v[r][c].get<double>());
    }
  }
  return out;
}

int bounded_int(std::int64_t x, const std::string& path, std::int64_t lo) {
  if (x < lo || x > INT32_MAX) ObjectReader::fail(path, "must be >= " + std::to_string(lo));
  return static_cast<int>(x);
}

void read_space(ObjectReader& root, RunConfig& cfg) {
  const json* node = root.find("search_space");
  if (!node) {
    cfg.space.choice_labels = SearchSpaceSpec::default_labels();
    return;
  }
  ObjectReader r(*node, root.path_of("search_space"));
  if (auto v = r.integer("num_layers")) cfg.space.num_layers = bounded_int(*v, r.path_of("num_layers"), 1);
  if (auto v = r.integer("choices_per_layer")) {
    cfg.space.choices_per_layer = bounded_int(*v, r.path_of("choices_per_layer"), 2);
  }
  if (const json* labels = r.find("choice_labels")) {
    if (!labels->is_array()) ObjectReader::fail(r.path_of("choice_labels"), "expected an array of strings");
    for (std::size_t i = 0; i < labels->size(); ++i) {
      if (!(*labels)[i].is_string()) {
        ObjectReader::fail(r.path_of("choice_labels") + "[" + std::to_string(i) + "]", "expected a string");
      }
      cfg.space.choice_labels.push_back((*labels)[i].get<std::string>());
    }
  } else if (cfg.space.choices_per_layer == 6) {
    cfg.space.choice_labels = SearchSpaceSpec::default_labels();
  }
  r.finish();
  try {
    cfg.space.validate();
  } catch (const Error& e) {
    ObjectReader::fail(root.path_of("search_space"), e.what());
  }
}

void read_similarity(const json& node, const std::string& path, SimilarityMode& out) {
  ObjectReader r(node, path);
  const std::string mode = r.string("mode").value_or("assigned");
  if (mode == "assigned") {
    AssignedSimilarity s;
    if (auto v = r.number("weight")) s.weight = *v;
    out = s;
  } else if (mode == "measured") {
    MeasuredSimilarity s;
    if (auto v = r.integer("min_pairs")) s.min_pairs = bounded_int(*v, r.path_of("min_pairs"), 2);
    if (auto v = r.number("floor")) s.floor = *v;
    if (auto v = r.number("fallback")) s.fallback = *v;
    out = s;
  } else {
    ObjectReader::fail(r.path_of("mode"), "expected \"assigned\" or \"measured\", got \"" + mode + "\"");
  }
  r.finish();
  try {
    validate(out);
  } catch (const Error& e) {
    ObjectReader::fail(path, e.what());
  }
}

void read_gcn(const json& node, const std::string& path, GcnConfig& gcn) {
  ObjectReader r(node, path);
  if (const json* dims = r.find("hidden_dims")) {
    gcn.hidden_dims = int_list(*dims, r.path_of("hidden_dims"), 1);
    if (gcn.hidden_dims.empty()) ObjectReader::fail(r.path_of("hidden_dims"), "needs at least one layer");
  }
  if (auto v = r.integer("epochs")) gcn.epochs = bounded_int(*v, r.path_of("epochs"), 1);
  if (auto v = r.number("lr")) gcn.lr = *v;
  if (auto v = r.number("lr_decay")) gcn.lr_decay = *v;
  if (auto v = r.number("weight_decay")) gcn.weight_decay = *v;
  r.finish();
  try {
    gcn.validate();
  } catch (const Error& e) {
    ObjectReader::fail(path, e.what());
  }
}

void read_search(ObjectReader& root, RunConfig& cfg) {
  const json* node = root.find("search");
  if (!node) return;
  ObjectReader r(*node, root.path_of("search"));
  auto& s = cfg.search;
  if (auto v = r.unsigned_integer("m_samples")) s.m_samples = *v;
  if (auto v = r.unsigned_integer("train_split")) s.train_split = *v;
  if (auto v = r.unsigned_integer("top_pool")) s.top_pool = *v;
  if (auto v = r.integer("k_preserve")) s.k_preserve = bounded_int(*v, r.path_of("k_preserve"), 1);
  if (const json* sim = r.find("similarity")) read_similarity(*sim, r.path_of("similarity"), s.similarity);
  if (const json* gcn = r.find("gcn")) read_gcn(*gcn, r.path_of("gcn"), s.gcn);
  if (auto v = r.number("constraint_budget")) {
    if (!(*v > 0.0)) ObjectReader::fail(r.path_of("constraint_budget"), "must be > 0");
    s.constraint_budget = *v;
  }
  if (auto v = r.boolean("advance_checkpoint_per_round")) cfg.advance_checkpoint_per_round = *v;
  if (auto v = r.unsigned_integer("node_cap")) s.node_cap = *v;
  if (auto v = r.string("initial_architecture")) {
    try {
      Architecture arch = Architecture::parse(*v);
      s.initial_architecture = arch;
    } catch (const Error& e) {
      ObjectReader::fail(r.path_of("initial_architecture"), e.what());
    }
  }
  r.finish();
}

void read_simulator(ObjectReader& root, RunConfig& cfg) {
  const json* node = root.find("simulator");
  if (!node) return;
  ObjectReader r(*node, root.path_of("simulator"));
  auto& s = cfg.simulator;
  if (auto v = r.number("a")) {
    if (!(*v > 0.0)) ObjectReader::fail(r.path_of("a"), "must be > 0");
    s.a = *v;
  }
  if (auto v = r.number("b")) s.b = *v;
  if (auto v = r.number("sigma")) {
    if (!(*v >= 0.0)) ObjectReader::fail(r.path_of("sigma"), "must be >= 0");
    s.sigma = *v;
  }
  if (auto v = r.number("base")) s.base = *v;
  if (auto v = r.number("utility_scale")) {
    if (!(*v >= 0.0)) ObjectReader::fail(r.path_of("utility_scale"), "must be >= 0");
    s.utility_scale = *v;
  }
  if (auto v = r.number("pair_strength")) s.pair_strength = *v;
  if (auto v = r.unsigned_integer("truth_seed")) s.truth_seed = *v;
  if (auto v = r.unsigned_integer("checkpoint_seed")) s.checkpoint_seed = *v;
  if (const json* table = r.find("cell_utility")) {
    s.cell_utility = number_table(*table, r.path_of("cell_utility"));
  }
  r.finish();
}

void read_cost_model(ObjectReader& root, RunConfig& cfg) {
  const json* node = root.find("cost_model");
  if (!node) return;
  const auto path = root.path_of("cost_model");
  if (node->is_string()) {
    if (node->get<std::string>() != "representative") {
      ObjectReader::fail(path, "the only bundled table is \"representative\"");
    }
    return;
  }
  ObjectReader r(*node, path);
  cfg.representative_cost = false;
  cfg.cost_model.fixed_cost = r.number("fixed_cost").value_or(0.0);
  const json* table = r.find("cell_cost");
  if (!table) ObjectReader::fail(r.path_of("cell_cost"), "required");
  cfg.cost_model.cell_cost = number_table(*table, r.path_of("cell_cost"));
  r.finish();
}

}  // namespace

void set_seed(RunConfig& config, std::uint64_t seed) {
  config.seed = seed;
  config.search.seed = seed;
}

RunConfig parse_config(const json& doc) {
  RunConfig cfg;
  ObjectReader root(doc, "$");
  if (auto v = root.unsigned_integer("seed")) cfg.seed = *v;
  if (auto v = root.string("output_dir")) cfg.output_dir = *v;
  read_space(root, cfg);
  if (const json* plan = root.find("plan")) {
    cfg.plan_sizes = int_list(*plan, root.path_of("plan"), 1);
  } else if (cfg.space.num_layers == 19) {
    cfg.plan_sizes = {7, 6, 6};
  } else {
    cfg.plan_sizes = {cfg.space.num_layers};
  }
  read_search(root, cfg);
  read_simulator(root, cfg);
  read_cost_model(root, cfg);
  root.finish();

  set_seed(cfg, cfg.seed);
  try {
    cfg.search.plan = make_segment_plan(cfg.space, cfg.plan_sizes);
  } catch (const Error& e) {
    ObjectReader::fail("$.plan", e.what());
  }
  try {
    cfg.search.validate(cfg.space);
  } catch (const Error& e) {
    ObjectReader::fail("$.search", e.what());
  }
  const auto& util = cfg.simulator.cell_utility;
  if (util) {
    bool ok = static_cast<int>(util->size()) == cfg.space.num_layers;
    for (const auto& row : *util) ok = ok && static_cast<int>(row.size()) == cfg.space.choices_per_layer;
    if (!ok) {
      ObjectReader::fail("$.simulator.cell_utility",
                         "expected " + std::to_string(cfg.space.num_layers) + " rows of " +
                             std::to_string(cfg.space.choices_per_layer) + " numbers");
    }
  }
  if (!cfg.representative_cost) {
    try {
      cfg.cost_model.validate(cfg.space);
    } catch (const Error& e) {
      ObjectReader::fail("$.cost_model", e.what());
    }
  }
  return cfg;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
  return parse_config(doc);
}

ordered_json resolved_json(const RunConfig& cfg) {
  ordered_json j;
  j["seed"] = cfg.seed;
  j["output_dir"] = cfg.output_dir.string();
  j["search_space"] = {{"num_layers", cfg.space.num_layers},
                       {"choices_per_layer", cfg.space.choices_per_layer},
                       {"choice_labels", cfg.space.choice_labels}};
  j["plan"] = cfg.plan_sizes;

  const auto& s = cfg.search;
  ordered_json sim;
  if (const auto* a = std::get_if<AssignedSimilarity>(&s.similarity)) {
    sim = {{"mode", "assigned"}, {"weight", a->weight}};
  } else {
    const auto& m = std::get<MeasuredSimilarity>(s.similarity);
    sim = {{"mode", "measured"}, {"min_pairs", m.min_pairs}, {"floor", m.floor}, {"fallback", m.fallback}};
  }
  ordered_json search;
  search["m_samples"] = s.m_samples;
  search["train_split"] = s.train_split;
  search["top_pool"] = s.top_pool;
  search["k_preserve"] = s.k_preserve;
  search["similarity"] = sim;
  search["gcn"] = {{"hidden_dims", s.gcn.hidden_dims},
                   {"epochs", s.gcn.epochs},
                   {"lr", s.gcn.lr},
                   {"lr_decay", s.gcn.lr_decay},
                   {"weight_decay", s.gcn.weight_decay}};
  search["constraint_budget"] = s.constraint_budget ? ordered_json(*s.constraint_budget) : ordered_json();
  search["advance_checkpoint_per_round"] = cfg.advance_checkpoint_per_round;
  search["node_cap"] = s.node_cap;
  search["initial_architecture"] =
      s.initial_architecture ? ordered_json(s.initial_architecture->to_string()) : ordered_json();
  j["search"] = search;

  const auto& m = cfg.simulator;
  ordered_json simulator;
  simulator["a"] = m.a;
  simulator["b"] = m.b;
  simulator["sigma"] = m.sigma ? ordered_json(*m.sigma) : ordered_json();
  simulator["base"] = m.base;
  simulator["utility_scale"] = m.utility_scale;
  simulator["pair_strength"] = m.pair_strength;
  simulator["truth_seed"] = m.truth_seed ? ordered_json(*m.truth_seed) : ordered_json();
  simulator["checkpoint_seed"] = m.checkpoint_seed ? ordered_json(*m.checkpoint_seed) : ordered_json();
  simulator["cell_utility"] = m.cell_utility ? ordered_json(*m.cell_utility) : ordered_json();
  j["simulator"] = simulator;

  if (cfg.representative_cost) {
    j["cost_model"] = "representative";
  } else {
    j["cost_model"] = {{"fixed_cost", cfg.cost_model.fixed_cost}, {"cell_cost", cfg.cost_model.cell_cost}};
  }
  return j;
}

std::string config_hash(const RunConfig& config) {
  auto doc = resolved_json(config);
  doc.erase("output_dir");
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a(doc.dump())));
  return buf;
}

SyntheticSupernet make_supernet(const RunConfig& cfg) {
  const auto& m = cfg.simulator;
  const std::uint64_t truth_seed = m.truth_seed.value_or(derive_seed(cfg.seed, "truth"));
  GroundTruthParams truth =
      GroundTruthParams::random(cfg.space, truth_seed, m.utility_scale, m.pair_strength, m.base);
  if (m.cell_utility) truth.cell_utility = *m.cell_utility;
  const double sigma =
      m.sigma ? *m.sigma
              : calibrate_sigma(cfg.space, truth, m.a, m.b, derive_seed(cfg.seed, "calibration")).sigma;
  return SyntheticSupernet(std::move(truth), m.a, m.b, sigma,
                           m.checkpoint_seed.value_or(derive_seed(cfg.seed, "checkpoint")));
}

CostModel make_cost_model(const RunConfig& cfg) {
  return cfg.representative_cost ? CostModel::representative(cfg.space) : cfg.cost_model;
}

}  // namespace nasgcn::app
