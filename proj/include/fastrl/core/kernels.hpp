#pragma once

// Dense linear-algebra kernels used by the network stack and the inference
// runtime.
//
// Two backends implement the same contracts:
//   Generic  plain nested loops, one pass per operation. Serial reference.
//   Fused    row-streamed i-k-j loops with bias and activation applied in the
//            same pass, and common output widths dispatched to kernels whose
//            trip counts are compile-time constants.
//
// Both backends accumulate every output element in the same order (reduction
// index ascending, starting from zero, bias added last), so with FP
// contraction disabled they produce bitwise identical results.

#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <optional>
#include <vector>

#include "fastrl/core/activation.hpp"
#include "fastrl/core/matrix.hpp"

namespace fastrl {

enum class Backend : std::uint8_t { Generic = 0, Fused = 1 };

constexpr std::string_view to_string(Backend b) { return b == Backend::Generic ? "generic" : "fused"; }

inline std::optional<Backend> parse_backend(std::string_view s) {
  if (s == "generic") return Backend::Generic;
  if (s == "fused") return Backend::Fused;
  return std::nullopt;
}

constexpr std::string_view backend_description(Backend b) {
  return b == Backend::Generic ? "generic: serial nested loops, separate bias/activation passes"
                               : "fused: i-k-j streaming, fused bias+activation, static-width dispatch";
}

namespace kernels {

inline void require(bool ok, const char* what) {
  if (!ok) throw std::invalid_argument(what);
}

// ---------------------------------------------------------------------------
// Generic backend
// ---------------------------------------------------------------------------
namespace generic {

// out[m x n] = a[m x k] * b[k x n]
template <typename T>
void matmul(const T* a, const T* b, T* out, std::size_t m, std::size_t k, std::size_t n) {
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      T acc = T(0);
      for (std::size_t p = 0; p < k; ++p) acc += a[i * k + p] * b[p * n + j];
      out[i * n + j] = acc;
    }
  }
}

// out[m x n] = a[r x m]^T * b[r x n]
template <typename T>
void matmul_at_b(const T* a, const T* b, T* out, std::size_t r, std::size_t m, std::size_t n) {
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      T acc = T(0);
      for (std::size_t p = 0; p < r; ++p) acc += a[p * m + i] * b[p * n + j];
      out[i * n + j] = acc;
    }
  }
}

// out[m x n] = a[m x k] * b[n x k]^T
template <typename T>
void matmul_a_bt(const T* a, const T* b, T* out, std::size_t m, std::size_t k, std::size_t n) {
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      T acc = T(0);
      for (std::size_t p = 0; p < k; ++p) acc += a[i * k + p] * b[j * k + p];
      out[i * n + j] = acc;
    }
  }
}

template <typename T>
void add_row_bias(T* x, const T* bias, std::size_t m, std::size_t n) {
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) x[i * n + j] += bias[j];
}

template <typename T>
void activate(const T* x, T* out, std::size_t count, Activation act) {
  for (std::size_t i = 0; i < count; ++i) out[i] = fastrl::activate(x[i], act);
}

// dpre = dpost * act'(pre)
template <typename T>
void activation_backward(const T* dpost, const T* pre, T* dpre, std::size_t count, Activation act) {
  for (std::size_t i = 0; i < count; ++i) dpre[i] = dpost[i] * activate_grad(pre[i], act);
}

template <typename T>
void column_sum(const T* x, T* out, std::size_t m, std::size_t n) {
  for (std::size_t j = 0; j < n; ++j) {
    T acc = T(0);
    for (std::size_t i = 0; i < m; ++i) acc += x[i * n + j];
    out[j] = acc;
  }
}

// out = act(x * w + bias); pre (optional) receives x * w + bias.
template <typename T>
void dense(const T* x, const T* w, const T* bias, T* out, T* pre, std::size_t m, std::size_t k, std::size_t n,
           Activation act) {
  matmul(x, w, out, m, k, n);
  add_row_bias(out, bias, m, n);
  if (pre != nullptr)
    for (std::size_t i = 0; i < m * n; ++i) pre[i] = out[i];
  activate(out, out, m * n, act);
}

}  // namespace generic

// ---------------------------------------------------------------------------
// Fused backend
// ---------------------------------------------------------------------------
namespace fused {

// Runs `f.template operator()<W>()` with W = n for common layer widths and
// W = kDynamic otherwise.
template <typename F>
decltype(auto) with_static_width(std::size_t n, F&& f) {
  switch (n) {
    case 1: return f.template operator()<1>();
    case 2: return f.template operator()<2>();
    case 4: return f.template operator()<4>();
    case 64: return f.template operator()<64>();
    case 128: return f.template operator()<128>();
    case 256: return f.template operator()<256>();
    default: return f.template operator()<kDynamic>();
  }
}

namespace detail {

template <std::size_t N>
constexpr std::size_t width(std::size_t n) {
  if constexpr (N == kDynamic) return n;
  else return N;
}

// acc[0..n) = a_row[0..k) * b[k x n], accumulated in reduction order.
template <std::size_t N, typename T>
inline void row_times_matrix(const T* a_row, const T* b, T* acc, std::size_t k, std::size_t n_rt) {
  const std::size_t n = width<N>(n_rt);
#pragma omp simd
  for (std::size_t j = 0; j < n; ++j) acc[j] = T(0);
  for (std::size_t p = 0; p < k; ++p) {
    const T s = a_row[p];
    const T* b_row = b + p * n;
#pragma omp simd
    for (std::size_t j = 0; j < n; ++j) acc[j] += s * b_row[j];
  }
}

template <std::size_t N, typename T>
void matmul(const T* a, const T* b, T* out, std::size_t m, std::size_t k, std::size_t n_rt) {
  const std::size_t n = width<N>(n_rt);
  for (std::size_t i = 0; i < m; ++i) row_times_matrix<N>(a + i * k, b, out + i * n, k, n);
}

template <std::size_t N, typename T>
void dense(const T* x, const T* w, const T* bias, T* out, T* pre, std::size_t m, std::size_t k, std::size_t n_rt,
           Activation act) {
  const std::size_t n = width<N>(n_rt);
  for (std::size_t i = 0; i < m; ++i) {
    T* o = out + i * n;
    row_times_matrix<N>(x + i * k, w, o, k, n);
    if (pre != nullptr) {
      T* pr = pre + i * n;
#pragma omp simd
      for (std::size_t j = 0; j < n; ++j) pr[j] = o[j] + bias[j];
    }
    switch (act) {
      case Activation::ReLU:
#pragma omp simd
        for (std::size_t j = 0; j < n; ++j) {
          const T v = o[j] + bias[j];
          o[j] = v > T(0) ? v : T(0);
        }
        break;
      case Activation::Tanh:
        for (std::size_t j = 0; j < n; ++j) o[j] = std::tanh(o[j] + bias[j]);
        break;
      case Activation::Identity:
#pragma omp simd
        for (std::size_t j = 0; j < n; ++j) o[j] += bias[j];
        break;
    }
  }
}

template <std::size_t N, typename T>
void matmul_at_b(const T* a, const T* b, T* out, std::size_t r, std::size_t m, std::size_t n_rt) {
  const std::size_t n = width<N>(n_rt);
  for (std::size_t i = 0; i < m * n; ++i) out[i] = T(0);
  for (std::size_t p = 0; p < r; ++p) {
    const T* a_row = a + p * m;
    const T* b_row = b + p * n;
    for (std::size_t i = 0; i < m; ++i) {
      const T s = a_row[i];
      T* o = out + i * n;
#pragma omp simd
      for (std::size_t j = 0; j < n; ++j) o[j] += s * b_row[j];
    }
  }
}

template <typename T>
std::vector<T>& transpose_scratch() {
  thread_local std::vector<T> scratch;
  return scratch;
}

}  // namespace detail

template <typename T>
void matmul(const T* a, const T* b, T* out, std::size_t m, std::size_t k, std::size_t n) {
  with_static_width(n, [&]<std::size_t N>() { detail::matmul<N>(a, b, out, m, k, n); });
}

template <typename T>
void dense(const T* x, const T* w, const T* bias, T* out, T* pre, std::size_t m, std::size_t k, std::size_t n,
           Activation act) {
  with_static_width(n, [&]<std::size_t N>() { detail::dense<N>(x, w, bias, out, pre, m, k, n, act); });
}

template <typename T>
void matmul_at_b(const T* a, const T* b, T* out, std::size_t r, std::size_t m, std::size_t n) {
  with_static_width(n, [&]<std::size_t N>() { detail::matmul_at_b<N>(a, b, out, r, m, n); });
}

// a * b^T: b is transposed into thread-local scratch so the product streams
// rows like `matmul`. The scratch grows once per thread and is then reused.
template <typename T>
void matmul_a_bt(const T* a, const T* b, T* out, std::size_t m, std::size_t k, std::size_t n) {
  auto& bt = detail::transpose_scratch<T>();
  if (bt.size() < k * n) bt.resize(k * n);
  for (std::size_t j = 0; j < n; ++j)
    for (std::size_t p = 0; p < k; ++p) bt[p * n + j] = b[j * k + p];
  matmul(a, bt.data(), out, m, k, n);
}

template <typename T>
void activate(const T* x, T* out, std::size_t count, Activation act) {
  switch (act) {
    case Activation::ReLU:
#pragma omp simd
      for (std::size_t i = 0; i < count; ++i) out[i] = x[i] > T(0) ? x[i] : T(0);
      break;
    case Activation::Tanh:
      for (std::size_t i = 0; i < count; ++i) out[i] = std::tanh(x[i]);
      break;
    case Activation::Identity:
      if (out != x)
        for (std::size_t i = 0; i < count; ++i) out[i] = x[i];
      break;
  }
}

template <typename T>
void activation_backward(const T* dpost, const T* pre, T* dpre, std::size_t count, Activation act) {
  switch (act) {
    case Activation::ReLU:
#pragma omp simd
      for (std::size_t i = 0; i < count; ++i) dpre[i] = dpost[i] * (pre[i] > T(0) ? T(1) : T(0));
      break;
    case Activation::Tanh:
      for (std::size_t i = 0; i < count; ++i) {
        const T t = std::tanh(pre[i]);
        dpre[i] = dpost[i] * (T(1) - t * t);
      }
      break;
    case Activation::Identity:
#pragma omp simd
      for (std::size_t i = 0; i < count; ++i) dpre[i] = dpost[i] * T(1);
      break;
  }
}

template <typename T>
void column_sum(const T* x, T* out, std::size_t m, std::size_t n) {
  for (std::size_t j = 0; j < n; ++j) out[j] = T(0);
  for (std::size_t i = 0; i < m; ++i) {
    const T* row = x + i * n;
#pragma omp simd
    for (std::size_t j = 0; j < n; ++j) out[j] += row[j];
  }
}

}  // namespace fused

// ---------------------------------------------------------------------------
// Shape-checked entry points
// ---------------------------------------------------------------------------

template <typename A, typename B>
concept SameScalar = std::is_same_v<scalar_of_t<A>, scalar_of_t<B>>;

/// out = a * b
template <MatrixLike A, MatrixLike B, MatrixLike Out>
  requires SameScalar<A, B> && SameScalar<A, Out> &&
           kCompatibleExtent<view_of_t<A>::static_cols, view_of_t<B>::static_rows> &&
           kCompatibleExtent<view_of_t<A>::static_rows, view_of_t<Out>::static_rows> &&
           kCompatibleExtent<view_of_t<B>::static_cols, view_of_t<Out>::static_cols>
void matmul(Backend backend, const A& a_in, const B& b_in, Out&& out_in) {
  const auto a = as_view(a_in);
  const auto b = as_view(b_in);
  const auto out = as_view(out_in);
  require(a.cols() == b.rows(), "matmul: inner dimensions differ");
  require(out.rows() == a.rows() && out.cols() == b.cols(), "matmul: output shape mismatch");
  if (backend == Backend::Generic)
    generic::matmul(a.data(), b.data(), out.data(), a.rows(), a.cols(), b.cols());
  else
    fused::matmul(a.data(), b.data(), out.data(), a.rows(), a.cols(), b.cols());
}

template <MatrixLike A, MatrixLike B>
  requires SameScalar<A, B> && kCompatibleExtent<view_of_t<A>::static_cols, view_of_t<B>::static_rows>
Matrix<scalar_of_t<A>> matmul(Backend backend, const A& a, const B& b) {
  const auto av = as_view(a);
  const auto bv = as_view(b);
  require(av.cols() == bv.rows(), "matmul: inner dimensions differ");
  Matrix<scalar_of_t<A>> out(av.rows(), bv.cols());
  matmul(backend, av, bv, out);
  return out;
}

/// out = a^T * b
template <MatrixLike A, MatrixLike B, MatrixLike Out>
  requires SameScalar<A, B> && SameScalar<A, Out>
void matmul_at_b(Backend backend, const A& a_in, const B& b_in, Out&& out_in) {
  const auto a = as_view(a_in);
  const auto b = as_view(b_in);
  const auto out = as_view(out_in);
  require(a.rows() == b.rows(), "matmul_at_b: row counts differ");
  require(out.rows() == a.cols() && out.cols() == b.cols(), "matmul_at_b: output shape mismatch");
  if (backend == Backend::Generic)
    generic::matmul_at_b(a.data(), b.data(), out.data(), a.rows(), a.cols(), b.cols());
  else
    fused::matmul_at_b(a.data(), b.data(), out.data(), a.rows(), a.cols(), b.cols());
}

/// out = a * b^T
template <MatrixLike A, MatrixLike B, MatrixLike Out>
  requires SameScalar<A, B> && SameScalar<A, Out>
void matmul_a_bt(Backend backend, const A& a_in, const B& b_in, Out&& out_in) {
  const auto a = as_view(a_in);
  const auto b = as_view(b_in);
  const auto out = as_view(out_in);
  require(a.cols() == b.cols(), "matmul_a_bt: inner dimensions differ");
  require(out.rows() == a.rows() && out.cols() == b.rows(), "matmul_a_bt: output shape mismatch");
  if (backend == Backend::Generic)
    generic::matmul_a_bt(a.data(), b.data(), out.data(), a.rows(), a.cols(), b.rows());
  else
    fused::matmul_a_bt(a.data(), b.data(), out.data(), a.rows(), a.cols(), b.rows());
}

/// out = act(x * w + bias). When `pre` is non-empty it receives x * w + bias.
template <MatrixLike X, MatrixLike W, MatrixLike Out>
  requires SameScalar<X, W> && SameScalar<X, Out> &&
           kCompatibleExtent<view_of_t<X>::static_cols, view_of_t<W>::static_rows> &&
           kCompatibleExtent<view_of_t<X>::static_rows, view_of_t<Out>::static_rows> &&
           kCompatibleExtent<view_of_t<W>::static_cols, view_of_t<Out>::static_cols>
void dense(Backend backend, const X& x_in, const W& w_in, std::span<const scalar_of_t<X>> bias, Activation act,
           Out&& out_in, MatrixView<scalar_of_t<X>> pre = {}) {
  const auto x = as_view(x_in);
  const auto w = as_view(w_in);
  const auto out = as_view(out_in);
  require(x.cols() == w.rows(), "dense: input width does not match weight rows");
  require(bias.size() == w.cols(), "dense: bias length does not match weight columns");
  require(out.rows() == x.rows() && out.cols() == w.cols(), "dense: output shape mismatch");
  require(pre.data() == nullptr || (pre.rows() == out.rows() && pre.cols() == out.cols()),
          "dense: pre-activation buffer shape mismatch");
  if (backend == Backend::Generic)
    generic::dense(x.data(), w.data(), bias.data(), out.data(), pre.data(), x.rows(), x.cols(), w.cols(), act);
  else
    fused::dense(x.data(), w.data(), bias.data(), out.data(), pre.data(), x.rows(), x.cols(), w.cols(), act);
}

template <MatrixLike X, MatrixLike Out>
  requires SameScalar<X, Out>
void activate(Backend backend, const X& x_in, Activation act, Out&& out_in) {
  const auto x = as_view(x_in);
  const auto out = as_view(out_in);
  require(x.rows() == out.rows() && x.cols() == out.cols(), "activate: shape mismatch");
  if (backend == Backend::Generic)
    generic::activate(x.data(), out.data(), x.size(), act);
  else
    fused::activate(x.data(), out.data(), x.size(), act);
}

template <MatrixLike X>
Matrix<scalar_of_t<X>> activate(Backend backend, const X& x, Activation act) {
  const auto xv = as_view(x);
  Matrix<scalar_of_t<X>> out(xv.rows(), xv.cols());
  activate(backend, xv, act, out);
  return out;
}

/// Elementwise derivative of `act` at the pre-activation values.
template <MatrixLike X>
Matrix<scalar_of_t<X>> activate_grad(const X& pre, Activation act) {
  const auto pv = as_view(pre);
  Matrix<scalar_of_t<X>> out(pv.rows(), pv.cols());
  for (std::size_t i = 0; i < pv.size(); ++i) out.data()[i] = fastrl::activate_grad(pv.data()[i], act);
  return out;
}

template <MatrixLike D, MatrixLike P, MatrixLike Out>
  requires SameScalar<D, P> && SameScalar<D, Out>
void activation_backward(Backend backend, const D& dpost_in, const P& pre_in, Activation act, Out&& dpre_in) {
  const auto dpost = as_view(dpost_in);
  const auto pre = as_view(pre_in);
  const auto dpre = as_view(dpre_in);
  require(dpost.rows() == pre.rows() && dpost.cols() == pre.cols() && dpre.rows() == pre.rows() &&
              dpre.cols() == pre.cols(),
          "activation_backward: shape mismatch");
  if (backend == Backend::Generic)
    generic::activation_backward(dpost.data(), pre.data(), dpre.data(), pre.size(), act);
  else
    fused::activation_backward(dpost.data(), pre.data(), dpre.data(), pre.size(), act);
}

template <MatrixLike X>
void column_sum(Backend backend, const X& x_in, std::span<scalar_of_t<X>> out) {
  const auto x = as_view(x_in);
  require(out.size() == x.cols(), "column_sum: output length mismatch");
  if (backend == Backend::Generic)
    generic::column_sum(x.data(), out.data(), x.rows(), x.cols());
  else
    fused::column_sum(x.data(), out.data(), x.rows(), x.cols());
}

}  // namespace kernels
}  // namespace fastrl
