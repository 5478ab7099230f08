#include "nasgcn/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <string>
#include <vector>

#include "nasgcn/error.hpp"

namespace nasgcn {

namespace {

void check_pair(std::size_t na, std::size_t nb, const char* what) {
  if (na != nb) {
    throw Error(std::string(what) + ": length mismatch (" + std::to_string(na) + " vs " +
                std::to_string(nb) + ")");
  }
  if (na < 2) throw Error(std::string(what) + ": need at least 2 items");
}

/// Pairs tied within runs of equal keys, sum t(t-1)/2.
template <class Eq>
std::int64_t tied_pairs(std::size_t n, Eq equal) {
  std::int64_t total = 0, run = 1;
  for (std::size_t i = 1; i < n; ++i) {
    if (equal(i - 1, i)) {
      ++run;
    } else {
      total += run * (run - 1) / 2;
      run = 1;
    }
  }
  return total + run * (run - 1) / 2;
}

/// Stable merge sort of `v` counting inversions (strictly greater before).
std::int64_t count_swaps(std::vector<double>& v) {
  std::vector<double> buf(v.size());
  std::int64_t swaps = 0;
  for (std::size_t width = 1; width < v.size(); width *= 2) {
    for (std::size_t lo = 0; lo < v.size(); lo += 2 * width) {
      const std::size_t mid = std::min(lo + width, v.size());
      const std::size_t hi = std::min(lo + 2 * width, v.size());
      std::size_t i = lo, j = mid, k = lo;
      while (i < mid && j < hi) {
        if (v[j] < v[i]) {
          swaps += static_cast<std::int64_t>(mid - i);
          buf[k++] = v[j++];
        } else {
          buf[k++] = v[i++];
        }
      }
      while (i < mid) buf[k++] = v[i++];
      while (j < hi) buf[k++] = v[j++];
    }
    std::swap(v, buf);
  }
  return swaps;
}

}  // namespace

double kendall_tau(std::span<const double> a, std::span<const double> b) {
  check_pair(a.size(), b.size(), "kendall_tau");
  const std::size_t n = a.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) {
    return a[i] < a[j] || (a[i] == a[j] && b[i] < b[j]);
  });

  const std::int64_t tie_a =
      tied_pairs(n, [&](std::size_t i, std::size_t j) { return a[order[i]] == a[order[j]]; });
  const std::int64_t tie_ab = tied_pairs(n, [&](std::size_t i, std::size_t j) {
    return a[order[i]] == a[order[j]] && b[order[i]] == b[order[j]];
  });

  std::vector<double> sorted_b(n);
  for (std::size_t i = 0; i < n; ++i) sorted_b[i] = b[order[i]];
  const std::int64_t swaps = count_swaps(sorted_b);
  const std::int64_t tie_b =
      tied_pairs(n, [&](std::size_t i, std::size_t j) { return sorted_b[i] == sorted_b[j]; });

  const auto total = static_cast<std::int64_t>(n) * static_cast<std::int64_t>(n - 1) / 2;
  const double denom = std::sqrt(static_cast<double>(total - tie_a)) *
                       std::sqrt(static_cast<double>(total - tie_b));
  if (denom == 0.0) return std::numeric_limits<double>::quiet_NaN();
  const std::int64_t s = total - tie_a - tie_b + tie_ab - 2 * swaps;
  return static_cast<double>(s) / denom;
}

double pearson(std::span<const double> a, std::span<const double> b) {
  check_pair(a.size(), b.size(), "pearson");
  const double n = static_cast<double>(a.size());
  const double ma = std::accumulate(a.begin(), a.end(), 0.0) / n;
  const double mb = std::accumulate(b.begin(), b.end(), 0.0) / n;
  double saa = 0, sbb = 0, sab = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
    sab += (a[i] - ma) * (b[i] - mb);
  }
  if (saa <= 0.0 || sbb <= 0.0) return std::numeric_limits<double>::quiet_NaN();
  return sab / std::sqrt(saa * sbb);
}

double regression_score(std::span<const double> pred, std::span<const double> target) {
  check_pair(pred.size(), target.size(), "regression_score");
  const double n = static_cast<double>(pred.size());
  const double mp = std::accumulate(pred.begin(), pred.end(), 0.0) / n;
  const double mt = std::accumulate(target.begin(), target.end(), 0.0) / n;
  double spp = 0, stt = 0, spt = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    spp += (pred[i] - mp) * (pred[i] - mp);
    stt += (target[i] - mt) * (target[i] - mt);
    spt += (pred[i] - mp) * (target[i] - mt);
  }
  if (stt <= 0.0) throw Error("regression_score: target has zero variance");
  if (spp <= 0.0) return 0.0;
  const double slope = spt / spp;
  const double intercept = mt - slope * mp;
  double ss_res = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const double r = target[i] - (intercept + slope * pred[i]);
    ss_res += r * r;
  }
  return 1.0 - ss_res / stt;
}

}  // namespace nasgcn
