#pragma once

#include "hifba/core.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace hifba::harness {

/// Linear-interpolation quantile (R type 7). NaN for empty input.
inline double quantile(std::vector<double> v, double prob) {
  if (v.empty()) return kNaN;
  std::sort(v.begin(), v.end());
  const double h = prob * static_cast<double>(v.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const auto hi = std::min(lo + 1, v.size() - 1);
  const double w = h - static_cast<double>(lo);
  if (w == 0.0) return v[lo];
  return v[lo] + w * (v[hi] - v[lo]);
}

inline double median(const std::vector<double>& v) { return quantile(v, 0.5); }

inline double iqr(const std::vector<double>& v) { return quantile(v, 0.75) - quantile(v, 0.25); }

/// Row index of the smallest finite value (first on ties); 0 if none is finite.
inline std::size_t argmin_finite(const std::vector<double>& v) {
  std::size_t best = 0;
  double best_value = kInf;
  for (std::size_t i = 0; i < v.size(); ++i)
    if (std::isfinite(v[i]) && v[i] < best_value) {
      best_value = v[i];
      best = i;
    }
  return best;
}

}  // namespace hifba::harness
