#pragma once

#include <cstddef>
#include <span>

namespace fastrl::train {

struct IqmResult {
  double mean = 0;
  double stddev = 0;  // population standard deviation of the kept set
  std::size_t kept = 0;
};

/// Inter-quantile mean. After sorting, keeps 1-based ranks r with
/// ceil(lower * n) < r < floor(upper * n) + 1. When that band is empty the
/// median element (odd n) or the two middle elements (even n) are kept.
/// Throws std::invalid_argument on empty input.
IqmResult iqm(std::span<const double> values, double lower = 0.05, double upper = 0.95);

struct MeanStd {
  double mean = 0;
  double stddev = 0;  // population
};
MeanStd mean_std(std::span<const double> values);

}  // namespace fastrl::train
