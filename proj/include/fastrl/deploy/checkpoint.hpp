#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "fastrl/core/activation.hpp"
#include "fastrl/core/kernels.hpp"
#include "fastrl/nn/mlp.hpp"

namespace fastrl::deploy {

/// Binary policy file, all integers and floats little-endian:
///
///   "TRLC"              4 bytes magic
///   version             u32 (currently 1)
///   float width         u8, 4 or 8 (bytes per stored float)
///   input_dim           u32
///   num_layers          u32
///   widths              u32 x num_layers (output width of each layer)
///   activations         u8  x num_layers (0 Identity, 1 ReLU, 2 Tanh)
///   action scale count  u32 (0 or output_dim)
///   action scale        float x count
///   payload count       u64, must equal the parameter count implied above
///   payload             float x count; per layer the in x out row-major
///                       weights, then the bias
struct PolicyCheckpoint {
  static constexpr std::uint32_t kVersion = 1;
  static constexpr char kMagic[4] = {'T', 'R', 'L', 'C'};

  std::uint8_t float_width = 4;
  std::uint32_t input_dim = 0;
  std::vector<std::uint32_t> widths;
  std::vector<Activation> activations;
  std::vector<double> action_scale;
  std::vector<double> parameters;  // widened from the stored float width, so round trips are exact

  std::size_t num_layers() const { return widths.size(); }
  std::size_t output_dim() const { return widths.empty() ? 0 : widths.back(); }
  std::vector<std::size_t> hidden_dims() const;
  std::size_t max_width() const;
  /// Parameter count implied by the dimensions.
  std::size_t expected_parameter_count() const;
  /// Throws CheckpointError(Shape) if dimensions and arrays disagree.
  void validate() const;

  template <typename T>
  static PolicyCheckpoint from_mlp(const nn::Mlp<T>& net, std::span<const double> action_scale = {});
  template <typename T>
  nn::Mlp<T> to_mlp(Backend backend = Backend::Fused) const;

  friend bool operator==(const PolicyCheckpoint&, const PolicyCheckpoint&) = default;
};

class CheckpointError : public std::runtime_error {
 public:
  enum class Kind { Io, BadMagic, Version, Shape, Truncated, Oversize, Activation };
  CheckpointError(Kind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  Kind kind() const { return kind_; }

 private:
  Kind kind_;
};

std::vector<std::uint8_t> encode_checkpoint(const PolicyCheckpoint& ckpt);
/// Rejects the whole input on any error; never returns a partial value.
PolicyCheckpoint decode_checkpoint(std::span<const std::uint8_t> bytes);

void save_checkpoint(const PolicyCheckpoint& ckpt, const std::filesystem::path& path);
PolicyCheckpoint load_checkpoint(const std::filesystem::path& path);

/// Same content as the binary file, for inspection.
std::string checkpoint_to_json(const PolicyCheckpoint& ckpt);
void save_checkpoint_json(const PolicyCheckpoint& ckpt, const std::filesystem::path& path);

}  // namespace fastrl::deploy
