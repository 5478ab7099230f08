#pragma once

#include <span>

namespace nasgcn {

/// Kendall tau-b between two paired score vectors, O(n log n) (Knight's
/// merge-sort count). Returns NaN when either vector is constant. Throws when
/// the lengths differ or are below 2.
double kendall_tau(std::span<const double> a, std::span<const double> b);

/// Coefficient of determination of the least-squares line target ~ pred.
/// Equals 0 for constant predictions. Throws when target has zero variance.
double regression_score(std::span<const double> pred, std::span<const double> target);

/// Pearson correlation; NaN when either side is constant.
double pearson(std::span<const double> a, std::span<const double> b);

}  // namespace nasgcn
