#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

namespace fastrl::nn {

template <typename T>
struct AdamConfig {
  T learning_rate = T(1e-3);
  T beta1 = T(0.9);
  T beta2 = T(0.999);
  T epsilon = T(1e-7);
};

/// First/second moments for one parameter vector plus the step counter.
template <typename T>
struct AdamState {
  AdamState() = default;
  explicit AdamState(std::size_t parameter_count, AdamConfig<T> cfg = {})
      : config(cfg), m(parameter_count, T(0)), v(parameter_count, T(0)) {}

  AdamConfig<T> config;
  std::uint64_t step = 0;
  std::vector<T> m;
  std::vector<T> v;
};

/// One bias-corrected Adam update:
///   m <- b1 m + (1-b1) g,  v <- b2 v + (1-b2) g^2,
///   theta <- theta - lr * (m / (1-b1^t)) / (sqrt(v / (1-b2^t)) + eps)
template <typename T>
void adam_step(std::span<T> params, std::span<const T> grads, AdamState<T>& st) {
  if (params.size() != grads.size() || params.size() != st.m.size())
    throw std::invalid_argument("adam_step: parameter, gradient and moment sizes differ");
  ++st.step;
  const auto& c = st.config;
  const double t = static_cast<double>(st.step);
  const T correction1 = static_cast<T>(1.0 - std::pow(static_cast<double>(c.beta1), t));
  const T correction2 = static_cast<T>(1.0 - std::pow(static_cast<double>(c.beta2), t));
  const T one_minus_b1 = T(1) - c.beta1;
  const T one_minus_b2 = T(1) - c.beta2;
  T* m = st.m.data();
  T* v = st.v.data();
  for (std::size_t i = 0; i < params.size(); ++i) {
    const T g = grads[i];
    m[i] = c.beta1 * m[i] + one_minus_b1 * g;
    v[i] = c.beta2 * v[i] + one_minus_b2 * g * g;
    const T m_hat = m[i] / correction1;
    const T v_hat = v[i] / correction2;
    params[i] -= c.learning_rate * m_hat / (std::sqrt(v_hat) + c.epsilon);
  }
}

}  // namespace fastrl::nn
