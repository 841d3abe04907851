#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <string_view>

namespace fastrl {

enum class Activation : std::uint8_t { Identity = 0, ReLU = 1, Tanh = 2 };

constexpr std::string_view to_string(Activation a) {
  switch (a) {
    case Activation::Identity: return "identity";
    case Activation::ReLU: return "relu";
    case Activation::Tanh: return "tanh";
  }
  return "unknown";
}

inline std::optional<Activation> parse_activation(std::string_view s) {
  if (s == "identity") return Activation::Identity;
  if (s == "relu") return Activation::ReLU;
  if (s == "tanh") return Activation::Tanh;
  return std::nullopt;
}

constexpr bool is_valid_activation(std::uint8_t raw) { return raw <= static_cast<std::uint8_t>(Activation::Tanh); }

template <typename T>
inline T activate(T x, Activation a) {
  switch (a) {
    case Activation::ReLU: return x > T(0) ? x : T(0);
    case Activation::Tanh: return std::tanh(x);
    case Activation::Identity: break;
  }
  return x;
}

/// Derivative at the pre-activation value. ReLU'(0) is 0.
template <typename T>
inline T activate_grad(T pre, Activation a) {
  switch (a) {
    case Activation::ReLU: return pre > T(0) ? T(1) : T(0);
    case Activation::Tanh: {
      const T t = std::tanh(pre);
      return T(1) - t * t;
    }
    case Activation::Identity: break;
  }
  return T(1);
}

}  // namespace fastrl
