#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "nasgcn/evaluator.hpp"
#include "nasgcn/search_engine.hpp"
#include "nasgcn/search_space.hpp"

namespace nasgcn::app {

struct SimulatorConfig {
  double a = 0.95;
  double b = 0.0025;
  /// Unset means: calibrate so two checkpoints agree at tau 0.547.
  std::optional<double> sigma;
  double base = 0.85;
  double utility_scale = 0.003;
  double pair_strength = 0.0003;
  std::optional<std::uint64_t> truth_seed;
  std::optional<std::uint64_t> checkpoint_seed;
  /// Explicit L x O utility table; replaces the random draw.
  std::optional<std::vector<std::vector<double>>> cell_utility;
};

struct RunConfig {
  std::uint64_t seed = 0;
  std::filesystem::path output_dir = "out";
  SearchSpaceSpec space;
  std::vector<int> plan_sizes;
  SearchConfig search;
  bool advance_checkpoint_per_round = false;
  SimulatorConfig simulator;
  /// Empty `cell_cost` means the bundled representative table.
  CostModel cost_model;
  bool representative_cost = true;
};

/// Parses, fills defaults and validates. Errors are ConfigError naming the
/// offending JSON path ("$.search.m_samples").
RunConfig parse_config(const nlohmann::json& doc);
RunConfig load_config(const std::filesystem::path& path);

/// Fully resolved configuration, every default spelled out.
nlohmann::ordered_json resolved_json(const RunConfig& config);

/// FNV-1a over the compact resolved JSON without output_dir, as 16 hex digits.
std::string config_hash(const RunConfig& config);

/// Re-derives the seeds that hang off `config.seed` after it changes.
void set_seed(RunConfig& config, std::uint64_t seed);

/// The simulator the config describes. Calibrates sigma when it is unset.
SyntheticSupernet make_supernet(const RunConfig& config);

CostModel make_cost_model(const RunConfig& config);

}  // namespace nasgcn::app
