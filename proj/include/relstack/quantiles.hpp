#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "relstack/common.hpp"

namespace relstack {

// Slack applied before ceiling a rank so that mathematically integral
// products (5 * (1 - 0.2) = 4) are not pushed up by floating-point noise.
inline constexpr double kRankSlack = 1e-9;

// k-th smallest element, 1-indexed. Takes the sample by value on purpose.
inline double kth_smallest(std::vector<double> values, std::size_t k) {
  require(k >= 1 && k <= values.size(), "kth_smallest: rank out of range");
  std::nth_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(k - 1), values.end());
  return values[k - 1];
}

// Nearest-rank percentile with the (n+1) convention: the
// ceil(p/100 * (n+1))-th smallest value, rank clamped to [1, n].
inline double nearest_rank_percentile(std::span<const double> values, double pct) {
  if (values.empty()) throw config_error("nearest_rank_percentile: empty sample");
  if (!(pct > 0.0 && pct < 100.0)) throw config_error("percentile level must lie in (0, 100)");
  const auto n = values.size();
  const double target = pct / 100.0 * static_cast<double>(n + 1);
  auto k = static_cast<std::size_t>(std::ceil(target - kRankSlack));
  k = std::clamp<std::size_t>(k, 1, n);
  return kth_smallest(std::vector<double>(values.begin(), values.end()), k);
}

// Split-conformal rank ceil((n+1)(1-alpha)). nullopt means the rank exceeds
// n: the finite-sample rule is unsatisfiable and the quantile is +infinity.
inline std::optional<std::size_t> conformal_rank(std::size_t n, double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw config_error("alpha must lie in (0, 1)");
  const double target = static_cast<double>(n + 1) * (1.0 - alpha);
  const auto k = static_cast<std::size_t>(std::ceil(target - kRankSlack));
  if (k > n) return std::nullopt;
  return k;
}

}  // namespace relstack
