#include "fastrl/nn/mlp.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace fastrl::nn {

std::size_t MlpShape::parameter_count() const {
  std::size_t count = 0;
  std::size_t in = input_dim;
  for (const std::size_t h : hidden_dims) {
    count += in * h + h;
    in = h;
  }
  return count + in * output_dim + output_dim;
}

void MlpShape::validate() const {
  if (input_dim == 0) throw std::invalid_argument("MlpShape: input_dim must be positive");
  if (output_dim == 0) throw std::invalid_argument("MlpShape: output_dim must be positive");
  for (const std::size_t h : hidden_dims)
    if (h == 0) throw std::invalid_argument("MlpShape: hidden widths must be positive");
}

namespace {

void widths_of(const MlpShape& shape, std::vector<std::size_t>& widths, std::vector<Activation>& acts) {
  widths = shape.hidden_dims;
  widths.push_back(shape.output_dim);
  acts.assign(shape.hidden_dims.size(), shape.hidden_activation);
  acts.push_back(shape.output_activation);
}

}  // namespace

template <typename T>
Mlp<T>::Mlp(const MlpShape& shape, Backend backend) : backend_(backend) {
  shape.validate();
  std::vector<std::size_t> widths;
  std::vector<Activation> acts;
  widths_of(shape, widths, acts);
  layout(shape.input_dim, widths, acts);
}

template <typename T>
Mlp<T>::Mlp(std::size_t input_dim, std::span<const std::size_t> layer_widths, std::span<const Activation> activations,
            Backend backend)
    : backend_(backend) {
  if (input_dim == 0) throw std::invalid_argument("Mlp: input_dim must be positive");
  if (layer_widths.empty()) throw std::invalid_argument("Mlp: at least one layer required");
  if (layer_widths.size() != activations.size()) throw std::invalid_argument("Mlp: one activation per layer");
  for (const std::size_t w : layer_widths)
    if (w == 0) throw std::invalid_argument("Mlp: layer widths must be positive");
  layout(input_dim, layer_widths, activations);
}

template <typename T>
void Mlp<T>::layout(std::size_t input_dim, std::span<const std::size_t> widths, std::span<const Activation> acts) {
  layers_.clear();
  std::size_t offset = 0;
  std::size_t in = input_dim;
  for (std::size_t i = 0; i < widths.size(); ++i) {
    LayerInfo info;
    info.in = in;
    info.out = widths[i];
    info.activation = acts[i];
    info.weight_offset = offset;
    offset += info.in * info.out;
    info.bias_offset = offset;
    offset += info.out;
    layers_.push_back(info);
    in = widths[i];
  }
  params_.assign(offset, T(0));
  grads_.assign(offset, T(0));
  caches_.assign(layers_.size(), {});
  cache_valid_ = false;
}

template <typename T>
Mlp<T> Mlp<T>::init(const MlpShape& shape, Prng& rng, Backend backend) {
  Mlp net(shape, backend);
  for (const LayerInfo& info : net.layers_) {
    const T bound = static_cast<T>(std::sqrt(1.0 / static_cast<double>(info.in)));
    T* w = net.params_.data() + info.weight_offset;
    for (std::size_t i = 0; i < info.in * info.out; ++i) w[i] = rng.uniform<T>(-bound, bound);
  }
  return net;
}

template <typename T>
std::size_t Mlp<T>::max_width() const {
  std::size_t width = input_dim();
  for (const LayerInfo& info : layers_) width = std::max(width, info.out);
  return width;
}

template <typename T>
MatrixView<T> Mlp<T>::weights(std::size_t i) {
  const LayerInfo& info = layers_.at(i);
  return {params_.data() + info.weight_offset, info.in, info.out};
}
template <typename T>
ConstMatrixView<T> Mlp<T>::weights(std::size_t i) const {
  const LayerInfo& info = layers_.at(i);
  return {params_.data() + info.weight_offset, info.in, info.out};
}
template <typename T>
std::span<T> Mlp<T>::bias(std::size_t i) {
  const LayerInfo& info = layers_.at(i);
  return {params_.data() + info.bias_offset, info.out};
}
template <typename T>
std::span<const T> Mlp<T>::bias(std::size_t i) const {
  const LayerInfo& info = layers_.at(i);
  return {params_.data() + info.bias_offset, info.out};
}
template <typename T>
MatrixView<T> Mlp<T>::weight_grad(std::size_t i) {
  const LayerInfo& info = layers_.at(i);
  return {grads_.data() + info.weight_offset, info.in, info.out};
}
template <typename T>
ConstMatrixView<T> Mlp<T>::weight_grad(std::size_t i) const {
  const LayerInfo& info = layers_.at(i);
  return {grads_.data() + info.weight_offset, info.in, info.out};
}
template <typename T>
std::span<T> Mlp<T>::bias_grad(std::size_t i) {
  const LayerInfo& info = layers_.at(i);
  return {grads_.data() + info.bias_offset, info.out};
}
template <typename T>
std::span<const T> Mlp<T>::bias_grad(std::size_t i) const {
  const LayerInfo& info = layers_.at(i);
  return {grads_.data() + info.bias_offset, info.out};
}

template <typename T>
ConstMatrixView<T> Mlp<T>::forward(ConstMatrixView<T> x, bool training) {
  if (layers_.empty()) throw std::logic_error("Mlp::forward: empty network");
  kernels::require(x.cols() == input_dim(), "Mlp::forward: input width does not match input_dim");
  if (!training) return static_cast<const Mlp&>(*this).forward(x, scratch_);

  const std::size_t batch = x.rows();
  cached_input_.assign(x.data(), x.data() + x.size());
  ConstMatrixView<T> in(cached_input_.data(), batch, x.cols());
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    const LayerInfo& info = layers_[l];
    LayerCache& cache = caches_[l];
    cache.pre.resize(batch * info.out);
    cache.post.resize(batch * info.out);
    MatrixView<T> out(cache.post.data(), batch, info.out);
    kernels::dense(backend_, in, weights(l), bias(l), info.activation, out,
                   MatrixView<T>(cache.pre.data(), batch, info.out));
    in = out;
  }
  cached_batch_ = batch;
  cache_valid_ = true;
  return in;
}

template <typename T>
ConstMatrixView<T> Mlp<T>::forward(ConstMatrixView<T> x, Workspace& ws) const {
  if (layers_.empty()) throw std::logic_error("Mlp::forward: empty network");
  kernels::require(x.cols() == input_dim(), "Mlp::forward: input width does not match input_dim");
  const std::size_t batch = x.rows();
  std::size_t need = 0;
  for (const LayerInfo& info : layers_) need = std::max(need, info.out);
  need *= batch;
  if (ws.ping.size() < need) ws.ping.resize(need);
  if (ws.pong.size() < need) ws.pong.resize(need);

  ConstMatrixView<T> in = x;
  std::vector<T>* target = &ws.ping;
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    const LayerInfo& info = layers_[l];
    MatrixView<T> out(target->data(), batch, info.out);
    kernels::dense(backend_, in, weights(l), bias(l), info.activation, out);
    in = out;
    target = target == &ws.ping ? &ws.pong : &ws.ping;
  }
  return in;
}

template <typename T>
ConstMatrixView<T> Mlp<T>::backward(ConstMatrixView<T> d_out) {
  if (!cache_valid_) throw std::logic_error("Mlp::backward: no cached training forward pass");
  kernels::require(d_out.rows() == cached_batch_ && d_out.cols() == output_dim(),
                   "Mlp::backward: gradient shape does not match cached output");
  const std::size_t batch = cached_batch_;
  const std::size_t need = batch * max_width();
  if (grad_ping_.size() < need) grad_ping_.resize(need);
  if (grad_pong_.size() < need) grad_pong_.resize(need);
  if (grad_pre_.size() < need) grad_pre_.resize(need);

  ConstMatrixView<T> d_post = d_out;
  std::vector<T>* target = &grad_ping_;
  for (std::size_t l = layers_.size(); l-- > 0;) {
    const LayerInfo& info = layers_[l];
    const LayerCache& cache = caches_[l];
    ConstMatrixView<T> pre(cache.pre.data(), batch, info.out);
    ConstMatrixView<T> input = l == 0 ? ConstMatrixView<T>(cached_input_.data(), batch, info.in)
                                      : ConstMatrixView<T>(caches_[l - 1].post.data(), batch, info.in);
    MatrixView<T> d_pre(grad_pre_.data(), batch, info.out);
    kernels::activation_backward(backend_, d_post, pre, info.activation, d_pre);
    kernels::matmul_at_b(backend_, input, d_pre, weight_grad(l));
    kernels::column_sum(backend_, d_pre, bias_grad(l));
    MatrixView<T> d_in(target->data(), batch, info.in);
    kernels::matmul_a_bt(backend_, d_pre, weights(l), d_in);
    d_post = d_in;
    target = target == &grad_ping_ ? &grad_pong_ : &grad_ping_;
  }
  return d_post;
}

template <typename T>
bool Mlp<T>::layers_shape_equal(const Mlp& other) const {
  if (layers_.size() != other.layers_.size()) return false;
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    const LayerInfo& a = layers_[i];
    const LayerInfo& b = other.layers_[i];
    if (a.in != b.in || a.out != b.out || a.activation != b.activation) return false;
  }
  return true;
}

template class Mlp<float>;
template class Mlp<double>;

}  // namespace fastrl::nn
