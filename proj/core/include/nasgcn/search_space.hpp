#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace nasgcn {

/// A chain-styled search space: `num_layers` cells, each picking one of
/// `choices_per_layer` operators.
struct SearchSpaceSpec {
  int num_layers = 19;
  int choices_per_layer = 6;
  std::vector<std::string> choice_labels;  // empty, or one label per choice

  /// Bits needed to Gray-encode one cell, ceil(log2 O).
  int bits_per_cell() const;
  int feature_dim() const { return num_layers * bits_per_cell(); }
  /// Index of `label` in choice_labels, or -1.
  int choice_index(std::string_view label) const;

  void validate() const;

  /// MobileNet-v2 style cell menu: kernel {3,5,7} x expansion {3,6}.
  static std::vector<std::string> default_labels();
};

/// One candidate network: a choice index per layer.
class Architecture {
 public:
  Architecture() = default;
  explicit Architecture(std::vector<int> choices) : choices_(std::move(choices)) {}

  std::span<const int> choices() const { return choices_; }
  std::size_t size() const { return choices_.size(); }
  int operator[](std::size_t layer) const { return choices_[layer]; }
  int& operator[](std::size_t layer) { return choices_[layer]; }

  /// Throws unless the length is L and every entry is in [0, O).
  void check(const SearchSpaceSpec& spec) const;

  /// Comma-joined decimal choice indices, e.g. "1,3,0,5".
  std::string to_string() const;
  static Architecture parse(std::string_view text);
  static Architecture uniform(const SearchSpaceSpec& spec, int choice);

  friend bool operator==(const Architecture&, const Architecture&) = default;
  friend auto operator<=>(const Architecture&, const Architecture&) = default;

 private:
  std::vector<int> choices_;
};

/// Gray-code features of a full architecture: L * bits_per_cell bits, one
/// byte (0 or 1) per bit, most significant bit of each cell first.
std::vector<std::uint8_t> gray_encode(const Architecture& arch, const SearchSpaceSpec& spec);

/// Binary-reflected Gray code of `index`.
constexpr unsigned gray_code(unsigned index) noexcept { return index ^ (index >> 1); }

/// Number of layers at which the two architectures choose different cells.
int cell_hamming(const Architecture& a, const Architecture& b);

/// A block of already-searched layers collapsed into one searchable position
/// whose options are the preserved sub-architectures.
struct SuperCell {
  std::vector<int> positions;                // ascending layer indices
  std::vector<std::vector<int>> candidates;  // K choice vectors over `positions`

  int size() const { return static_cast<int>(candidates.size()); }
};

/// One searchable position of a subspace: either a free layer (radix O) or a
/// super-cell (radix K).
struct SearchUnit {
  int first_layer = 0;
  int radix = 0;
  int super_cell = -1;  // index into Subspace::super_cells(), or -1 for a free layer

  bool is_super_cell() const { return super_cell >= 0; }
};

/// Per-unit choices, indexed in the subspace's canonical unit order.
using Assignment = std::vector<int>;

/// The region searched in one round: free layers, fixed layers and
/// super-cells partitioning [0, L).
class Subspace {
 public:
  Subspace(SearchSpaceSpec spec, std::vector<int> free_positions, std::map<int, int> fixed,
           std::vector<SuperCell> super_cells = {});

  /// Every layer free.
  static Subspace full(const SearchSpaceSpec& spec);

  const SearchSpaceSpec& spec() const { return spec_; }
  const std::vector<int>& free_positions() const { return free_; }
  const std::map<int, int>& fixed() const { return fixed_; }
  const std::vector<SuperCell>& super_cells() const { return super_cells_; }

  /// Searchable units sorted by their first layer index.
  const std::vector<SearchUnit>& units() const { return units_; }
  /// O^|free| * prod K_i. Saturates at UINT64_MAX.
  std::uint64_t node_count() const { return node_count_; }

  /// Mixed-radix index of an assignment; the last unit is least significant.
  std::uint64_t node_index(const Assignment& assignment) const;
  Assignment assignment_of(std::uint64_t index) const;

  Architecture materialize(const Assignment& assignment) const;
  /// Inverse of materialize for architectures consistent with this subspace.
  Assignment extract(const Architecture& arch) const;

 private:
  SearchSpaceSpec spec_;
  std::vector<int> free_;
  std::map<int, int> fixed_;
  std::vector<SuperCell> super_cells_;
  std::vector<SearchUnit> units_;
  std::uint64_t node_count_ = 0;
};

/// Draws `m` distinct node indices of the subspace, uniformly without
/// replacement, in draw order.
std::vector<std::uint64_t> sample_node_indices(const Subspace& subspace, std::uint64_t m,
                                               std::uint64_t seed);

/// Same draw as sample_node_indices, returned as assignments.
std::vector<Assignment> sample_uniform(const Subspace& subspace, std::uint64_t m,
                                       std::uint64_t seed);

/// Partition of the layers into disjoint segments searched in successive rounds.
struct SegmentPlan {
  std::vector<std::vector<int>> segments;

  std::size_t rounds() const { return segments.size(); }
};

/// Contiguous segments of the given sizes, in layer order.
SegmentPlan make_segment_plan(const SearchSpaceSpec& spec, std::span<const int> sizes);

}  // namespace nasgcn
