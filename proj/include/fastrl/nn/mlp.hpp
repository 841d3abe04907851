#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "fastrl/core/activation.hpp"
#include "fastrl/core/kernels.hpp"
#include "fastrl/core/matrix.hpp"
#include "fastrl/core/prng.hpp"

namespace fastrl::nn {

/// Dimensions and activations of a fully-connected network.
struct MlpShape {
  std::size_t input_dim = 0;
  std::vector<std::size_t> hidden_dims;
  std::size_t output_dim = 0;
  Activation hidden_activation = Activation::ReLU;
  Activation output_activation = Activation::Identity;

  std::size_t num_layers() const { return hidden_dims.size() + 1; }
  std::size_t parameter_count() const;
  /// Throws std::invalid_argument on zero dimensions.
  void validate() const;
};

struct LayerInfo {
  std::size_t in = 0;
  std::size_t out = 0;
  Activation activation = Activation::Identity;
  std::size_t weight_offset = 0;  // into the flat parameter vector, in x out row-major
  std::size_t bias_offset = 0;
};

/// Fully-connected network with all parameters and gradients in two flat
/// contiguous vectors (layer order, weights then bias per layer), so the
/// optimizer, target-network averaging and serialization work on spans.
///
/// `forward(x, true)` stores per-layer inputs and pre-activations inside the
/// network; `backward` consumes them. The const `forward(x, workspace)` never
/// touches network state and may run concurrently on a frozen network.
template <typename T>
class Mlp {
 public:
  struct Workspace {
    std::vector<T> ping;
    std::vector<T> pong;
  };

  Mlp() = default;
  /// Zero-initialized parameters.
  explicit Mlp(const MlpShape& shape, Backend backend = Backend::Fused);
  /// Explicit per-layer widths and activations (used by checkpoint loading).
  Mlp(std::size_t input_dim, std::span<const std::size_t> layer_widths, std::span<const Activation> activations,
      Backend backend = Backend::Fused);

  /// Weights ~ U(-sqrt(1/fan_in), sqrt(1/fan_in)) drawn layer by layer in
  /// row-major order; biases zero.
  static Mlp init(const MlpShape& shape, Prng& rng, Backend backend = Backend::Fused);

  std::size_t input_dim() const { return layers_.empty() ? 0 : layers_.front().in; }
  std::size_t output_dim() const { return layers_.empty() ? 0 : layers_.back().out; }
  std::size_t num_layers() const { return layers_.size(); }
  std::size_t max_width() const;
  const LayerInfo& layer(std::size_t i) const { return layers_.at(i); }
  const std::vector<LayerInfo>& layers() const { return layers_; }

  Backend backend() const { return backend_; }
  void set_backend(Backend b) { backend_ = b; }

  std::span<T> parameters() { return params_; }
  std::span<const T> parameters() const { return params_; }
  std::span<T> gradients() { return grads_; }
  std::span<const T> gradients() const { return grads_; }
  std::size_t parameter_count() const { return params_.size(); }

  MatrixView<T> weights(std::size_t i);
  ConstMatrixView<T> weights(std::size_t i) const;
  std::span<T> bias(std::size_t i);
  std::span<const T> bias(std::size_t i) const;
  MatrixView<T> weight_grad(std::size_t i);
  ConstMatrixView<T> weight_grad(std::size_t i) const;
  std::span<T> bias_grad(std::size_t i);
  std::span<const T> bias_grad(std::size_t i) const;

  /// Returns a view into network-owned storage, valid until the next call
  /// that runs the network. Caches for `backward` are written iff training.
  ConstMatrixView<T> forward(ConstMatrixView<T> x, bool training);
  ConstMatrixView<T> forward(ConstMatrixView<T> x, Workspace& ws) const;

  /// Reverse-mode pass for the batch of the last training forward. Overwrites
  /// gradients() and returns dLoss/dInput (network-owned storage).
  ConstMatrixView<T> backward(ConstMatrixView<T> d_out);

  bool has_cache() const { return cache_valid_; }

  /// Parameters only; caches and gradients are not compared.
  bool same_parameters(const Mlp& other) const { return layers_shape_equal(other) && params_ == other.params_; }

 private:
  struct LayerCache {
    std::vector<T> pre;
    std::vector<T> post;
  };

  void layout(std::size_t input_dim, std::span<const std::size_t> widths, std::span<const Activation> acts);
  bool layers_shape_equal(const Mlp& other) const;

  std::vector<LayerInfo> layers_;
  std::vector<T> params_;
  std::vector<T> grads_;
  Backend backend_ = Backend::Fused;

  // Training caches.
  std::vector<T> cached_input_;
  std::vector<LayerCache> caches_;
  std::size_t cached_batch_ = 0;
  bool cache_valid_ = false;

  Workspace scratch_;
  std::vector<T> grad_ping_;
  std::vector<T> grad_pong_;
  std::vector<T> grad_pre_;
};

extern template class Mlp<float>;
extern template class Mlp<double>;

}  // namespace fastrl::nn
