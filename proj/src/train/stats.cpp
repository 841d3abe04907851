#include "fastrl/train/stats.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

namespace fastrl::train {

MeanStd mean_std(std::span<const double> values) {
  if (values.empty()) throw std::invalid_argument("mean_std: empty input");
  double mean = 0;
  for (double v : values) mean += v;
  mean /= static_cast<double>(values.size());
  double var = 0;
  for (double v : values) var += (v - mean) * (v - mean);
  var /= static_cast<double>(values.size());
  return {mean, std::sqrt(var)};
}

IqmResult iqm(std::span<const double> values, double lower, double upper) {
  if (values.empty()) throw std::invalid_argument("iqm: empty input");
  if (!(lower >= 0 && lower < upper && upper <= 1)) throw std::invalid_argument("iqm: need 0 <= lower < upper <= 1");
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  const std::size_t n = sorted.size();
  // Guard against products like 0.05 * 20 landing just above an integer.
  constexpr double kSlack = 1e-9;
  const auto lo_rank = static_cast<std::size_t>(std::ceil(lower * static_cast<double>(n) - kSlack));
  const auto hi_rank = static_cast<std::size_t>(std::floor(upper * static_cast<double>(n) + kSlack)) + 1;
  std::size_t first = lo_rank;   // 0-based index of rank lo_rank + 1
  std::size_t last = hi_rank - 1;  // one past the last kept 0-based index
  if (last <= first) {
    first = (n - 1) / 2;
    last = n / 2 + 1;
  }
  const auto kept = std::span<const double>(sorted).subspan(first, last - first);
  const auto ms = mean_std(kept);
  return {ms.mean, ms.stddev, kept.size()};
}

}  // namespace fastrl::train
