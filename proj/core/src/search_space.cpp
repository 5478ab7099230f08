#include "nasgcn/search_space.hpp"

#include <algorithm>
#include <charconv>
#include <limits>
#include <numeric>
#include <unordered_set>

#include "nasgcn/error.hpp"
#include "nasgcn/random.hpp"

namespace nasgcn {

int SearchSpaceSpec::bits_per_cell() const {
  int bits = 0;
  while ((1 << bits) < choices_per_layer) ++bits;
  return bits;
}

int SearchSpaceSpec::choice_index(std::string_view label) const {
  for (std::size_t i = 0; i < choice_labels.size(); ++i) {
    if (choice_labels[i] == label) return static_cast<int>(i);
  }
  return -1;
}

void SearchSpaceSpec::validate() const {
  if (num_layers < 1) throw Error("num_layers must be >= 1, got " + std::to_string(num_layers));
  if (choices_per_layer < 2) {
    throw Error("choices_per_layer must be >= 2, got " + std::to_string(choices_per_layer));
  }
  if (choices_per_layer > (1 << 16)) throw Error("choices_per_layer is unreasonably large");
  if (!choice_labels.empty() && static_cast<int>(choice_labels.size()) != choices_per_layer) {
    throw Error("choice_labels has " + std::to_string(choice_labels.size()) +
                " entries but choices_per_layer is " + std::to_string(choices_per_layer));
  }
}

std::vector<std::string> SearchSpaceSpec::default_labels() {
  return {"k3e3", "k3e6", "k5e3", "k5e6", "k7e3", "k7e6"};
}

void Architecture::check(const SearchSpaceSpec& spec) const {
  if (static_cast<int>(choices_.size()) != spec.num_layers) {
    throw Error("architecture has " + std::to_string(choices_.size()) + " cells, expected " +
                std::to_string(spec.num_layers));
  }
  for (std::size_t l = 0; l < choices_.size(); ++l) {
    if (choices_[l] < 0 || choices_[l] >= spec.choices_per_layer) {
      throw Error("choice " + std::to_string(choices_[l]) + " at layer " + std::to_string(l) +
                  " is outside [0, " + std::to_string(spec.choices_per_layer) + ")");
    }
  }
}

std::string Architecture::to_string() const {
  std::string out;
  for (std::size_t i = 0; i < choices_.size(); ++i) {
    if (i) out += ',';
    out += std::to_string(choices_[i]);
  }
  return out;
}

Architecture Architecture::parse(std::string_view text) {
  std::vector<int> choices;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const std::size_t comma = std::min(text.find(',', pos), text.size());
    std::string_view token = text.substr(pos, comma - pos);
    while (!token.empty() && token.front() == ' ') token.remove_prefix(1);
    while (!token.empty() && token.back() == ' ') token.remove_suffix(1);
    int value = 0;
    const auto [end, ec] = std::from_chars(token.data(), token.data() + token.size(), value);
    if (token.empty() || ec != std::errc{} || end != token.data() + token.size()) {
      throw Error("malformed architecture string '" + std::string(text) + "'");
    }
    choices.push_back(value);
    pos = comma + 1;
  }
  return Architecture(std::move(choices));
}

Architecture Architecture::uniform(const SearchSpaceSpec& spec, int choice) {
  return Architecture(std::vector<int>(static_cast<std::size_t>(spec.num_layers), choice));
}

std::vector<std::uint8_t> gray_encode(const Architecture& arch, const SearchSpaceSpec& spec) {
  const int bits = spec.bits_per_cell();
  std::vector<std::uint8_t> out(arch.size() * static_cast<std::size_t>(bits));
  std::size_t k = 0;
  for (int choice : arch.choices()) {
    const unsigned code = gray_code(static_cast<unsigned>(choice));
    for (int b = bits - 1; b >= 0; --b) out[k++] = static_cast<std::uint8_t>((code >> b) & 1U);
  }
  return out;
}

int cell_hamming(const Architecture& a, const Architecture& b) {
  if (a.size() != b.size()) {
    throw Error("cell_hamming: length mismatch (" + std::to_string(a.size()) + " vs " +
                std::to_string(b.size()) + ")");
  }
  int d = 0;
  for (std::size_t i = 0; i < a.size(); ++i) d += a[i] != b[i];
  return d;
}

Subspace::Subspace(SearchSpaceSpec spec, std::vector<int> free_positions, std::map<int, int> fixed,
                   std::vector<SuperCell> super_cells)
    : spec_(std::move(spec)),
      free_(std::move(free_positions)),
      fixed_(std::move(fixed)),
      super_cells_(std::move(super_cells)) {
  spec_.validate();
  const int L = spec_.num_layers;
  std::vector<int> owner(static_cast<std::size_t>(L), 0);
  auto claim = [&](int layer, const char* what) {
    if (layer < 0 || layer >= L) {
      throw Error(std::string(what) + " layer " + std::to_string(layer) + " is outside [0, " +
                  std::to_string(L) + ")");
    }
    if (owner[static_cast<std::size_t>(layer)]++) {
      throw Error("layer " + std::to_string(layer) + " is claimed more than once");
    }
  };

  std::sort(free_.begin(), free_.end());
  for (int p : free_) {
    claim(p, "free");
    units_.push_back({p, spec_.choices_per_layer, -1});
  }
  for (const auto& [layer, choice] : fixed_) {
    claim(layer, "fixed");
    if (choice < 0 || choice >= spec_.choices_per_layer) {
      throw Error("fixed choice " + std::to_string(choice) + " at layer " + std::to_string(layer) +
                  " is out of range");
    }
  }
  for (std::size_t s = 0; s < super_cells_.size(); ++s) {
    auto& cell = super_cells_[s];
    if (cell.positions.empty()) throw Error("super-cell has no positions");
    if (cell.candidates.empty()) throw Error("super-cell has no candidates");
    std::sort(cell.positions.begin(), cell.positions.end());
    for (int p : cell.positions) claim(p, "super-cell");
    for (const auto& cand : cell.candidates) {
      if (cand.size() != cell.positions.size()) {
        throw Error("super-cell candidate length does not match its positions");
      }
      for (int c : cand) {
        if (c < 0 || c >= spec_.choices_per_layer) throw Error("super-cell candidate choice out of range");
      }
    }
    auto sorted = cell.candidates;
    std::sort(sorted.begin(), sorted.end());
    if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) {
      throw Error("super-cell candidates must be distinct");
    }
    units_.push_back({cell.positions.front(), cell.size(), static_cast<int>(s)});
  }
  for (int l = 0; l < L; ++l) {
    if (!owner[static_cast<std::size_t>(l)]) {
      throw Error("layer " + std::to_string(l) + " is neither free, fixed nor in a super-cell");
    }
  }
  std::sort(units_.begin(), units_.end(),
            [](const SearchUnit& a, const SearchUnit& b) { return a.first_layer < b.first_layer; });

  node_count_ = 1;
  for (const auto& u : units_) {
    const auto r = static_cast<std::uint64_t>(u.radix);
    if (node_count_ > std::numeric_limits<std::uint64_t>::max() / r) {
      node_count_ = std::numeric_limits<std::uint64_t>::max();
      break;
    }
    node_count_ *= r;
  }
}

Subspace Subspace::full(const SearchSpaceSpec& spec) {
  std::vector<int> all(static_cast<std::size_t>(spec.num_layers));
  std::iota(all.begin(), all.end(), 0);
  return Subspace(spec, std::move(all), {});
}

std::uint64_t Subspace::node_index(const Assignment& assignment) const {
  if (assignment.size() != units_.size()) {
    throw Error("assignment has " + std::to_string(assignment.size()) + " entries, subspace has " +
                std::to_string(units_.size()) + " searchable positions");
  }
  std::uint64_t index = 0;
  for (std::size_t u = 0; u < units_.size(); ++u) {
    const int c = assignment[u];
    if (c < 0 || c >= units_[u].radix) {
      throw Error("assignment entry " + std::to_string(c) + " for position " +
                  std::to_string(units_[u].first_layer) + " is outside [0, " +
                  std::to_string(units_[u].radix) + ")");
    }
    index = index * static_cast<std::uint64_t>(units_[u].radix) + static_cast<std::uint64_t>(c);
  }
  return index;
}

Assignment Subspace::assignment_of(std::uint64_t index) const {
  if (index >= node_count_) {
    throw Error("node index " + std::to_string(index) + " is outside [0, " +
                std::to_string(node_count_) + ")");
  }
  Assignment out(units_.size());
  for (std::size_t u = units_.size(); u-- > 0;) {
    const auto r = static_cast<std::uint64_t>(units_[u].radix);
    out[u] = static_cast<int>(index % r);
    index /= r;
  }
  return out;
}

Architecture Subspace::materialize(const Assignment& assignment) const {
  if (assignment.size() != units_.size()) {
    throw Error("assignment has " + std::to_string(assignment.size()) + " entries, subspace has " +
                std::to_string(units_.size()) + " searchable positions");
  }
  std::vector<int> choices(static_cast<std::size_t>(spec_.num_layers), 0);
  for (const auto& [layer, choice] : fixed_) choices[static_cast<std::size_t>(layer)] = choice;
  for (std::size_t u = 0; u < units_.size(); ++u) {
    const auto& unit = units_[u];
    const int c = assignment[u];
    if (c < 0 || c >= unit.radix) {
      throw Error("assignment entry " + std::to_string(c) + " for position " +
                  std::to_string(unit.first_layer) + " is outside [0, " +
                  std::to_string(unit.radix) + ")");
    }
    if (!unit.is_super_cell()) {
      choices[static_cast<std::size_t>(unit.first_layer)] = c;
      continue;
    }
    const auto& cell = super_cells_[static_cast<std::size_t>(unit.super_cell)];
    const auto& cand = cell.candidates[static_cast<std::size_t>(c)];
    for (std::size_t i = 0; i < cell.positions.size(); ++i) {
      choices[static_cast<std::size_t>(cell.positions[i])] = cand[i];
    }
  }
  return Architecture(std::move(choices));
}

Assignment Subspace::extract(const Architecture& arch) const {
  arch.check(spec_);
  for (const auto& [layer, choice] : fixed_) {
    if (arch[static_cast<std::size_t>(layer)] != choice) {
      throw Error("architecture differs from the subspace at fixed layer " + std::to_string(layer));
    }
  }
  Assignment out(units_.size());
  for (std::size_t u = 0; u < units_.size(); ++u) {
    const auto& unit = units_[u];
    if (!unit.is_super_cell()) {
      out[u] = arch[static_cast<std::size_t>(unit.first_layer)];
      continue;
    }
    const auto& cell = super_cells_[static_cast<std::size_t>(unit.super_cell)];
    std::vector<int> sub;
    sub.reserve(cell.positions.size());
    for (int p : cell.positions) sub.push_back(arch[static_cast<std::size_t>(p)]);
    const auto it = std::find(cell.candidates.begin(), cell.candidates.end(), sub);
    if (it == cell.candidates.end()) {
      throw Error("architecture matches no candidate of the super-cell at layer " +
                  std::to_string(unit.first_layer));
    }
    out[u] = static_cast<int>(it - cell.candidates.begin());
  }
  return out;
}

std::vector<std::uint64_t> sample_node_indices(const Subspace& subspace, std::uint64_t m,
                                               std::uint64_t seed) {
  const std::uint64_t n = subspace.node_count();
  if (m > n) {
    throw Error("cannot sample " + std::to_string(m) + " distinct architectures from a subspace of " +
                std::to_string(n) + " nodes");
  }
  Rng rng(seed);
  std::vector<std::uint64_t> out;
  out.reserve(m);
  constexpr std::uint64_t kDenseLimit = std::uint64_t{1} << 24;
  if (n <= kDenseLimit) {
    // Partial Fisher-Yates.
    std::vector<std::uint64_t> pool(n);
    std::iota(pool.begin(), pool.end(), std::uint64_t{0});
    for (std::uint64_t i = 0; i < m; ++i) {
      const std::uint64_t j = i + rng.uniform_index(n - i);
      std::swap(pool[i], pool[j]);
      out.push_back(pool[i]);
    }
    return out;
  }
  if (m > n / 2) throw Error("sampling more than half of a very large subspace is not supported");
  std::unordered_set<std::uint64_t> seen;
  while (out.size() < m) {
    const std::uint64_t x = rng.uniform_index(n);
    if (seen.insert(x).second) out.push_back(x);
  }
  return out;
}

std::vector<Assignment> sample_uniform(const Subspace& subspace, std::uint64_t m,
                                       std::uint64_t seed) {
  std::vector<Assignment> out;
  for (std::uint64_t idx : sample_node_indices(subspace, m, seed)) {
    out.push_back(subspace.assignment_of(idx));
  }
  return out;
}

SegmentPlan make_segment_plan(const SearchSpaceSpec& spec, std::span<const int> sizes) {
  long total = 0;
  for (int s : sizes) {
    if (s < 1) throw Error("segment sizes must be positive, got " + std::to_string(s));
    total += s;
  }
  if (total != spec.num_layers) {
    throw Error("segment sizes sum to " + std::to_string(total) + " but the space has " +
                std::to_string(spec.num_layers) + " layers");
  }
  SegmentPlan plan;
  int next = 0;
  for (int s : sizes) {
    std::vector<int> seg(static_cast<std::size_t>(s));
    std::iota(seg.begin(), seg.end(), next);
    next += s;
    plan.segments.push_back(std::move(seg));
  }
  return plan;
}

}  // namespace nasgcn
