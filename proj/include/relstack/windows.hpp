#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "relstack/common.hpp"

namespace relstack {

// Fixed-length sliding windows with stride. gamma is the positive-fraction
// cutoff for labeling a window; the comparison is strict.
struct WindowSpec {
  std::size_t length = 256;
  std::size_t stride = 64;
  double gamma = 0.5;

  void validate() const {
    if (length < 1) throw config_error("WindowSpec: length must be at least 1");
    if (stride < 1 || stride > length)
      throw config_error("WindowSpec: stride must lie in [1, length]");
    if (!(gamma > 0.0 && gamma < 1.0)) throw config_error("WindowSpec: gamma must lie in (0, 1)");
  }
};

struct Window {
  std::size_t start = 0;            // inclusive; covers [start, start + length)
  double positive_fraction = 0.0;
  bool label = false;               // positive_fraction > gamma, strictly
};

// Streams shorter than one window produce no output; callers surface the
// warning. Window count is floor((n - length) / stride) + 1.
inline std::vector<Window> segment_windows(std::span<const int> annotations,
                                           const WindowSpec& spec) {
  spec.validate();
  for (int a : annotations)
    if (a != 0 && a != 1) throw input_error("segment_windows: annotations must be 0/1");
  std::vector<Window> out;
  const std::size_t n = annotations.size();
  if (n < spec.length) return out;
  out.reserve((n - spec.length) / spec.stride + 1);
  for (std::size_t start = 0; start + spec.length <= n; start += spec.stride) {
    std::size_t positives = 0;
    for (std::size_t i = start; i < start + spec.length; ++i)
      positives += static_cast<std::size_t>(annotations[i]);
    const double fraction =
        static_cast<double>(positives) / static_cast<double>(spec.length);
    out.push_back({start, fraction, fraction > spec.gamma});
  }
  return out;
}

}  // namespace relstack
