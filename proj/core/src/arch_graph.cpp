#include "nasgcn/arch_graph.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <numeric>

#include "nasgcn/error.hpp"
#include "nasgcn/random.hpp"

namespace nasgcn {

double CsrMatrix::at(std::int64_t r, std::int64_t c) const {
  const auto first = col_idx.begin() + row_ptr[r];
  const auto last = col_idx.begin() + row_ptr[r + 1];
  const auto it = std::lower_bound(first, last, static_cast<std::int32_t>(c));
  if (it == last || *it != c) return 0.0;
  return values[static_cast<std::size_t>(it - col_idx.begin())];
}

bool CsrMatrix::is_symmetric(double tol) const {
  if (rows != cols) return false;
  for (std::int64_t r = 0; r < rows; ++r) {
    for (std::int64_t k = row_ptr[r]; k < row_ptr[r + 1]; ++k) {
      if (std::abs(at(col_idx[k], r) - values[k]) > tol) return false;
      if (at(col_idx[k], r) == 0.0 && values[k] != 0.0) return false;
    }
  }
  return true;
}

void validate(const SimilarityMode& mode) {
  if (const auto* a = std::get_if<AssignedSimilarity>(&mode)) {
    if (!(a->weight > 0.0)) throw Error("assigned similarity weight must be > 0");
    return;
  }
  const auto& m = std::get<MeasuredSimilarity>(mode);
  if (m.min_pairs < 2) throw Error("measured similarity min_pairs must be >= 2");
  if (!(m.floor > 0.0 && m.floor <= 1.0)) throw Error("measured similarity floor must be in (0, 1]");
  if (!(m.fallback > 0.0)) throw Error("measured similarity fallback weight must be > 0");
}

SimilarityTable assigned_similarity(const Subspace& subspace, double weight) {
  SimilarityTable table;
  for (const auto& unit : subspace.units()) {
    table.radix.push_back(unit.radix);
    table.weights.emplace_back(static_cast<std::size_t>(unit.radix * unit.radix), weight);
  }
  return table;
}

namespace {

double pearson(const std::vector<std::pair<double, double>>& xy) {
  const double n = static_cast<double>(xy.size());
  double mx = 0, my = 0;
  for (const auto& [x, y] : xy) {
    mx += x;
    my += y;
  }
  mx /= n;
  my /= n;
  double sxx = 0, syy = 0, sxy = 0;
  for (const auto& [x, y] : xy) {
    sxx += (x - mx) * (x - mx);
    syy += (y - my) * (y - my);
    sxy += (x - mx) * (y - my);
  }
  if (sxx <= 0.0 || syy <= 0.0) return std::numeric_limits<double>::quiet_NaN();
  return sxy / std::sqrt(sxx * syy);
}

std::vector<std::uint64_t> unit_strides(const Subspace& subspace) {
  const auto& units = subspace.units();
  std::vector<std::uint64_t> stride(units.size(), 1);
  for (std::size_t u = units.size(); u-- > 1;) {
    stride[u - 1] = stride[u] * static_cast<std::uint64_t>(units[u].radix);
  }
  return stride;
}

}  // namespace

SimilarityTable measured_similarity(std::span<const Sample> samples, const Subspace& subspace,
                                    const MeasuredSimilarity& params) {
  if (samples.empty()) throw Error("measured similarity needs at least one evaluated sample");
  validate(SimilarityMode{params});
  SimilarityTable table = assigned_similarity(subspace, params.fallback);
  const auto& units = subspace.units();
  const auto stride = unit_strides(subspace);

  for (std::size_t u = 0; u < units.size(); ++u) {
    const int radix = units[u].radix;
    const std::uint64_t s = stride[u];
    // Samples identical everywhere except at unit u share a key.
    std::map<std::uint64_t, std::vector<std::pair<int, double>>> groups;
    for (const auto& smp : samples) {
      const int digit = static_cast<int>((smp.node / s) % static_cast<std::uint64_t>(radix));
      groups[smp.node - static_cast<std::uint64_t>(digit) * s].emplace_back(digit, smp.accuracy);
    }
    std::vector<std::vector<std::pair<double, double>>> obs(static_cast<std::size_t>(radix * radix));
    for (auto& [key, members] : groups) {
      std::sort(members.begin(), members.end());
      for (std::size_t i = 0; i < members.size(); ++i) {
        for (std::size_t j = i + 1; j < members.size(); ++j) {
          const auto [a, acc_a] = members[i];
          const auto [b, acc_b] = members[j];
          obs[static_cast<std::size_t>(a * radix + b)].emplace_back(acc_a, acc_b);
        }
      }
    }
    for (int a = 0; a < radix; ++a) {
      for (int b = a + 1; b < radix; ++b) {
        const auto& xy = obs[static_cast<std::size_t>(a * radix + b)];
        double w = params.fallback;
        if (static_cast<int>(xy.size()) >= params.min_pairs) {
          const double r = pearson(xy);
          if (!std::isnan(r)) w = std::clamp(r, params.floor, 1.0);
        }
        table.weights[u][static_cast<std::size_t>(a * radix + b)] = w;
        table.weights[u][static_cast<std::size_t>(b * radix + a)] = w;
      }
    }
  }
  return table;
}

CsrMatrix normalize_adjacency(const CsrMatrix& adjacency) {
  const std::int64_t n = adjacency.rows;
  std::vector<double> inv_sqrt(static_cast<std::size_t>(n));
  for (std::int64_t r = 0; r < n; ++r) {
    double deg = 1.0;
    for (std::int64_t k = adjacency.row_ptr[r]; k < adjacency.row_ptr[r + 1]; ++k) {
      deg += adjacency.values[k];
    }
    inv_sqrt[r] = 1.0 / std::sqrt(deg);
  }
  CsrMatrix out;
  out.rows = n;
  out.cols = n;
  out.row_ptr.reserve(static_cast<std::size_t>(n + 1));
  out.col_idx.reserve(static_cast<std::size_t>(adjacency.nnz() + n));
  out.values.reserve(static_cast<std::size_t>(adjacency.nnz() + n));
  for (std::int64_t r = 0; r < n; ++r) {
    bool diag_done = false;
    auto emit_diag = [&] {
      out.col_idx.push_back(static_cast<std::int32_t>(r));
      out.values.push_back(inv_sqrt[r] * inv_sqrt[r]);
      diag_done = true;
    };
    for (std::int64_t k = adjacency.row_ptr[r]; k < adjacency.row_ptr[r + 1]; ++k) {
      const std::int32_t c = adjacency.col_idx[k];
      if (c == r) throw Error("adjacency must not contain self loops");
      if (!diag_done && c > r) emit_diag();
      out.col_idx.push_back(c);
      out.values.push_back(adjacency.values[k] * inv_sqrt[r] * inv_sqrt[c]);
    }
    if (!diag_done) emit_diag();
    out.row_ptr.push_back(out.nnz());
  }
  return out;
}

ArchGraph build_graph(const Subspace& subspace, const SimilarityMode& mode,
                      std::span<const Sample> samples, std::uint64_t node_cap) {
  validate(mode);
  const std::uint64_t n = subspace.node_count();
  if (n > node_cap) {
    throw Error("subspace has " + std::to_string(n) + " nodes, above the graph cap of " +
                std::to_string(node_cap));
  }
  if (n > static_cast<std::uint64_t>(std::numeric_limits<std::int32_t>::max())) {
    throw Error("subspace too large for 32-bit node ids");
  }

  SimilarityTable table;
  if (const auto* a = std::get_if<AssignedSimilarity>(&mode)) {
    table = assigned_similarity(subspace, a->weight);
  } else {
    if (samples.empty()) throw Error("measured similarity requires evaluated samples");
    table = measured_similarity(samples, subspace, std::get<MeasuredSimilarity>(mode));
  }

  ArchGraph g(subspace);
  const auto& units = subspace.units();
  const auto stride = unit_strides(subspace);
  g.num_nodes_ = static_cast<std::int64_t>(n);
  g.feature_dim_ = subspace.spec().feature_dim();

  std::int64_t degree = 0;
  for (const auto& unit : units) degree += unit.radix - 1;

  CsrMatrix& adj = g.adjacency_;
  adj.rows = adj.cols = g.num_nodes_;
  adj.row_ptr.reserve(static_cast<std::size_t>(n + 1));
  adj.col_idx.reserve(static_cast<std::size_t>(g.num_nodes_ * degree));
  adj.values.reserve(static_cast<std::size_t>(g.num_nodes_ * degree));
  g.features_.resize(static_cast<std::size_t>(g.num_nodes_) * static_cast<std::size_t>(g.feature_dim_));

  std::vector<std::pair<std::int32_t, double>> row;
  row.reserve(static_cast<std::size_t>(degree));
  for (std::uint64_t v = 0; v < n; ++v) {
    const Assignment digits = subspace.assignment_of(v);
    row.clear();
    for (std::size_t u = 0; u < units.size(); ++u) {
      const int d = digits[u];
      for (int c = 0; c < units[u].radix; ++c) {
        if (c == d) continue;
        const auto other = static_cast<std::int64_t>(v) +
                           static_cast<std::int64_t>(c - d) * static_cast<std::int64_t>(stride[u]);
        row.emplace_back(static_cast<std::int32_t>(other), table.weight(u, d, c));
      }
    }
    std::sort(row.begin(), row.end());
    for (const auto& [c, w] : row) {
      adj.col_idx.push_back(c);
      adj.values.push_back(w);
    }
    adj.row_ptr.push_back(adj.nnz());

    const auto bits = gray_encode(subspace.materialize(digits), subspace.spec());
    std::copy(bits.begin(), bits.end(),
              g.features_.begin() + static_cast<std::ptrdiff_t>(v * static_cast<std::uint64_t>(g.feature_dim_)));
  }
  g.normalized_ = normalize_adjacency(adj);
  return g;
}

ArchGraph graph_from_parts(Subspace subspace, CsrMatrix adjacency,
                           std::vector<std::uint8_t> features, int feature_dim) {
  if (adjacency.rows != adjacency.cols) throw Error("adjacency must be square");
  if (features.size() != static_cast<std::size_t>(adjacency.rows) * static_cast<std::size_t>(feature_dim)) {
    throw Error("feature matrix size does not match node count");
  }
  ArchGraph g(std::move(subspace));
  g.num_nodes_ = adjacency.rows;
  g.feature_dim_ = feature_dim;
  g.normalized_ = normalize_adjacency(adjacency);
  g.adjacency_ = std::move(adjacency);
  g.features_ = std::move(features);
  return g;
}

void ArchGraph::dump(const std::filesystem::path& edge_list_path) const {
  std::ofstream edges(edge_list_path);
  if (!edges) throw Error("cannot open " + edge_list_path.string() + " for writing");
  edges.precision(17);
  for (std::int64_t r = 0; r < adjacency_.rows; ++r) {
    for (std::int64_t k = adjacency_.row_ptr[r]; k < adjacency_.row_ptr[r + 1]; ++k) {
      if (adjacency_.col_idx[k] > r) edges << r << ' ' << adjacency_.col_idx[k] << ' ' << adjacency_.values[k] << '\n';
    }
  }
  // Sidecar: int64 rows, int64 cols (little endian), then row-major uint8 bits.
  auto sidecar = edge_list_path;
  sidecar += ".features";
  std::ofstream feat(sidecar, std::ios::binary);
  if (!feat) throw Error("cannot open " + sidecar.string() + " for writing");
  const std::int64_t dims[2] = {num_nodes_, feature_dim_};
  feat.write(reinterpret_cast<const char*>(dims), sizeof dims);
  feat.write(reinterpret_cast<const char*>(features_.data()), static_cast<std::streamsize>(features_.size()));
}

double spectral_radius(const CsrMatrix& m, int iterations, std::uint64_t seed) {
  Rng rng(seed);
  ColVector<double> v(m.rows);
  for (std::int64_t i = 0; i < m.rows; ++i) v[i] = rng.uniform(-1.0, 1.0);
  v.normalize();
  double lambda = 0.0;
  for (int it = 0; it < iterations; ++it) {
    ColVector<double> w = m.multiply(v);
    lambda = v.dot(w);
    const double norm = w.norm();
    if (norm == 0.0) return 0.0;
    v = w / norm;
  }
  return std::abs(lambda);
}

}  // namespace nasgcn
