#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <vector>

#include "fastrl/core/kernels.hpp"
#include "fastrl/deploy/checkpoint.hpp"

#ifndef FASTRL_MAX_LAYER_WIDTH
#define FASTRL_MAX_LAYER_WIDTH 256
#endif

namespace fastrl::deploy {

inline constexpr std::size_t kMaxLayerWidth = FASTRL_MAX_LAYER_WIDTH;
inline constexpr std::size_t kMaxLayers = 16;

/// Single-observation policy evaluation with all storage fixed at
/// construction. forward() performs no heap allocation and its control flow
/// depends only on the loaded shapes.
template <typename T = float>
class InferenceRuntime {
 public:
  /// Throws CheckpointError(Oversize) if any width exceeds kMaxLayerWidth or
  /// the depth exceeds kMaxLayers.
  explicit InferenceRuntime(const PolicyCheckpoint& ckpt, Backend backend = Backend::Fused) : backend_(backend) {
    ckpt.validate();
    if (ckpt.max_width() > kMaxLayerWidth)
      throw CheckpointError(CheckpointError::Kind::Oversize,
                            "policy layer width exceeds the runtime maximum of " + std::to_string(kMaxLayerWidth));
    if (ckpt.num_layers() > kMaxLayers)
      throw CheckpointError(CheckpointError::Kind::Oversize,
                            "policy depth exceeds the runtime maximum of " + std::to_string(kMaxLayers));
    params_.assign(ckpt.parameters.begin(), ckpt.parameters.end());
    input_dim_ = ckpt.input_dim;
    num_layers_ = ckpt.num_layers();
    std::size_t in = input_dim_, off = 0;
    for (std::size_t l = 0; l < num_layers_; ++l) {
      layers_[l] = {in, ckpt.widths[l], ckpt.activations[l], off};
      off += in * ckpt.widths[l] + ckpt.widths[l];
      in = ckpt.widths[l];
    }
    scale_.fill(T(1));
    has_scale_ = !ckpt.action_scale.empty();
    for (std::size_t i = 0; i < ckpt.action_scale.size(); ++i) scale_[i] = static_cast<T>(ckpt.action_scale[i]);
  }

  std::size_t input_dim() const { return input_dim_; }
  std::size_t output_dim() const { return layers_[num_layers_ - 1].out; }
  Backend backend() const { return backend_; }

  /// Raw network output; the span points into the runtime's buffers and is
  /// valid until the next call.
  std::span<const T> forward(std::span<const T> obs) {
    kernels::require(obs.size() == input_dim_, "InferenceRuntime::forward: observation width");
    const T* in = obs.data();
    T* bufs[2] = {ping_.data(), pong_.data()};
    for (std::size_t l = 0; l < num_layers_; ++l) {
      const Layer& L = layers_[l];
      const T* w = params_.data() + L.offset;
      const T* b = w + L.in * L.out;
      T* out = bufs[l & 1];
      if (backend_ == Backend::Generic)
        kernels::generic::dense(in, w, b, out, static_cast<T*>(nullptr), 1, L.in, L.out, L.act);
      else
        kernels::fused::dense(in, w, b, out, static_cast<T*>(nullptr), 1, L.in, L.out, L.act);
      in = out;
    }
    return {in, output_dim()};
  }

  /// Network output multiplied by the checkpoint's action scale, if any.
  void act(std::span<const T> obs, std::span<T> action) {
    const auto out = forward(obs);
    for (std::size_t i = 0; i < out.size(); ++i) action[i] = has_scale_ ? scale_[i] * out[i] : out[i];
  }

 private:
  struct Layer {
    std::size_t in = 0;
    std::size_t out = 0;
    Activation act = Activation::Identity;
    std::size_t offset = 0;
  };

  Backend backend_;
  std::vector<T> params_;
  std::size_t input_dim_ = 0;
  std::size_t num_layers_ = 0;
  std::array<Layer, kMaxLayers> layers_{};
  alignas(64) std::array<T, kMaxLayerWidth> ping_{};
  alignas(64) std::array<T, kMaxLayerWidth> pong_{};
  std::array<T, kMaxLayerWidth> scale_{};
  bool has_scale_ = false;
};

}  // namespace fastrl::deploy
