#pragma once

#include <span>
#include <stdexcept>

namespace fastrl::rl {

/// target <- beta * target + (1 - beta) * online, elementwise.
template <typename T>
void polyak_update(std::span<T> target, std::span<const T> online, T beta) {
  if (target.size() != online.size()) throw std::invalid_argument("polyak_update: parameter counts differ");
  const T keep = beta;
  const T take = T(1) - beta;
  for (std::size_t i = 0; i < target.size(); ++i) target[i] = keep * target[i] + take * online[i];
}

}  // namespace fastrl::rl
