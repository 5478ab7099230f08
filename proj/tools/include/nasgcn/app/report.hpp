#pragma once

#include <filesystem>
#include <span>
#include <string>

#include <json.hpp>

#include "nasgcn/search_engine.hpp"

namespace nasgcn::app {

/// Two-space indented JSON with every float written to 6 decimals and
/// non-finite floats written as null. Parsing the output and emitting it again
/// reproduces it byte for byte.
std::string emit_json(const nlohmann::ordered_json& doc);

nlohmann::ordered_json read_json(const std::filesystem::path& path);
void write_json(const nlohmann::ordered_json& doc, const std::filesystem::path& path);

nlohmann::ordered_json candidate_json(const Candidate& c);
nlohmann::ordered_json round_json(const RoundReport& report);

struct Provenance {
  std::string command;
  std::string config_hash;
  std::uint64_t seed = 0;
};

nlohmann::ordered_json result_json(const Provenance& prov, const SearchResult& result,
                                   const CostModel& cost, std::optional<double> budget);

/// rank,node,architecture,prediction ordered by prediction; `limit` 0 keeps all.
void write_predictions_csv(const Subspace& subspace, std::span<const float> predictions,
                           const std::filesystem::path& path, std::size_t limit = 0);

}  // namespace nasgcn::app
