#include "nasgcn/app/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <string>

#include "nasgcn/error.hpp"

namespace nasgcn::app {

using nlohmann::ordered_json;

namespace {

std::string format_float(double x) {
  if (!std::isfinite(x)) return "null";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", x);
  std::string s = buf;
  if (s == "-0.000000") s = "0.000000";
  return s;
}

bool is_scalar_array(const ordered_json& v) {
  for (const auto& item : v) {
    if (item.is_structured()) return false;
  }
  return true;
}

void emit(const ordered_json& v, int depth, std::string& out) {
  const std::string pad(static_cast<std::size_t>(2 * (depth + 1)), ' ');
  const std::string close_pad(static_cast<std::size_t>(2 * depth), ' ');
  switch (v.type()) {
    case ordered_json::value_t::number_float:
      out += format_float(v.get<double>());
      break;
    case ordered_json::value_t::object: {
      if (v.empty()) {
        out += "{}";
        break;
      }
      out += "{\n";
      bool first = true;
      for (const auto& [key, value] : v.items()) {
        if (!first) out += ",\n";
        first = false;
        out += pad + ordered_json(key).dump() + ": ";
        emit(value, depth + 1, out);
      }
      out += "\n" + close_pad + "}";
      break;
    }
    case ordered_json::value_t::array: {
      if (v.empty()) {
        out += "[]";
        break;
      }
      if (is_scalar_array(v)) {
        out += "[";
        for (std::size_t i = 0; i < v.size(); ++i) {
          if (i) out += ", ";
          emit(v[i], depth + 1, out);
        }
        out += "]";
        break;
      }
      out += "[\n";
      for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) out += ",\n";
        out += pad;
        emit(v[i], depth + 1, out);
      }
      out += "\n" + close_pad + "]";
      break;
    }
    default:
      out += v.dump();
  }
}

}  // namespace

std::string emit_json(const ordered_json& doc) {
  std::string out;
  emit(doc, 0, out);
  out += "\n";
  return out;
}

ordered_json read_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path.string());
  try {
    return ordered_json::parse(in);
  } catch (const ordered_json::parse_error& e) {
    throw Error(path.string() + ": " + e.what());
  }
}

void write_json(const ordered_json& doc, const std::filesystem::path& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error("cannot write " + path.string());
  os << emit_json(doc);
  if (!os) throw Error("failed writing " + path.string());
}

ordered_json candidate_json(const Candidate& c) {
  ordered_json j;
  j["node"] = c.node;
  j["architecture"] = c.arch.to_string();
  j["accuracy"] = c.accuracy;
  j["predicted"] = c.predicted;
  return j;
}

ordered_json round_json(const RoundReport& r) {
  ordered_json j;
  j["round"] = r.round;
  j["searched_layers"] = r.searched_layers;
  j["node_count"] = r.node_count;
  j["samples"] = r.samples;
  j["train_samples"] = r.train_samples;
  j["validation_samples"] = r.validation_samples;
  j["tau_val"] = r.tau_val;
  j["reg_score_val"] = r.reg_score_val;
  j["final_train_loss"] = r.final_train_loss;
  j["best_sampled"] = candidate_json(r.best_sampled);
  j["gcn_top1"] = candidate_json(r.gcn_top1);
  j["best_selected"] = candidate_json(r.best_selected);
  ordered_json preserved = ordered_json::array();
  for (const auto& c : r.preserved) preserved.push_back(candidate_json(c));
  j["preserved"] = preserved;
  return j;
}

ordered_json result_json(const Provenance& prov, const SearchResult& result, const CostModel& cost,
                         std::optional<double> budget) {
  ordered_json j;
  j["command"] = prov.command;
  j["config_hash"] = prov.config_hash;
  j["seed"] = prov.seed;
  j["architecture"] = result.architecture.to_string();
  j["accuracy"] = result.accuracy;
  j["flops"] = flops(result.architecture, cost);
  j["constraint_budget"] = budget ? ordered_json(*budget) : ordered_json();
  ordered_json taus = ordered_json::array();
  ordered_json rounds = ordered_json::array();
  for (const auto& r : result.rounds) {
    taus.push_back(r.tau_val);
    rounds.push_back(round_json(r));
  }
  j["tau_val"] = taus;
  j["rounds"] = rounds;
  return j;
}

void write_predictions_csv(const Subspace& subspace, std::span<const float> predictions,
                           const std::filesystem::path& path, std::size_t limit) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error("cannot write " + path.string());
  const auto order = rank_by_prediction(predictions);
  const std::size_t n = limit == 0 ? order.size() : std::min(limit, order.size());
  os << "rank,node,architecture,prediction\n";
  char buf[32];
  for (std::size_t i = 0; i < n; ++i) {
    const auto node = order[i];
    std::snprintf(buf, sizeof buf, "%.6f", static_cast<double>(predictions[node]));
    os << i + 1 << ',' << node << ",\"" << subspace.materialize(subspace.assignment_of(node)).to_string()
       << "\"," << buf << '\n';
  }
  if (!os) throw Error("failed writing " + path.string());
}

}  // namespace nasgcn::app
