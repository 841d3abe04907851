#include "fastrl/deploy/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <limits>

#include "json.hpp"

namespace fastrl::deploy {

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes a little-endian host");

namespace {

using Kind = CheckpointError::Kind;

class Writer {
 public:
  template <typename U>
  void put(U v) {
    const auto* p = reinterpret_cast<const std::uint8_t*>(&v);
    bytes.insert(bytes.end(), p, p + sizeof(U));
  }
  void put_float(double v, std::uint8_t width) {
    if (width == 4) put(static_cast<float>(v));
    else put(v);
  }
  std::vector<std::uint8_t> bytes;
};

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> b) : bytes_(b) {}
  template <typename U>
  U get(const char* field) {
    if (bytes_.size() - pos_ < sizeof(U))
      throw CheckpointError(Kind::Truncated, std::string("checkpoint truncated while reading ") + field);
    U v;
    std::memcpy(&v, bytes_.data() + pos_, sizeof(U));
    pos_ += sizeof(U);
    return v;
  }
  double get_float(std::uint8_t width, const char* field) {
    return width == 4 ? static_cast<double>(get<float>(field)) : get<double>(field);
  }
  std::size_t remaining() const { return bytes_.size() - pos_; }

 private:
  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};

// Counts above this are treated as corrupt rather than attempted.
constexpr std::size_t kMaxParameters = std::size_t{1} << 32;

}  // namespace

std::vector<std::size_t> PolicyCheckpoint::hidden_dims() const {
  std::vector<std::size_t> h;
  for (std::size_t i = 0; i + 1 < widths.size(); ++i) h.push_back(widths[i]);
  return h;
}

std::size_t PolicyCheckpoint::max_width() const {
  std::size_t w = input_dim;
  for (auto x : widths) w = std::max<std::size_t>(w, x);
  return w;
}

std::size_t PolicyCheckpoint::expected_parameter_count() const {
  std::size_t total = 0;
  std::size_t in = input_dim;
  for (auto out : widths) {
    total += in * out + out;
    if (total > kMaxParameters) return std::numeric_limits<std::size_t>::max();
    in = out;
  }
  return total;
}

void PolicyCheckpoint::validate() const {
  if (float_width != 4 && float_width != 8) throw CheckpointError(Kind::Shape, "checkpoint float width must be 4 or 8");
  if (input_dim == 0 || widths.empty()) throw CheckpointError(Kind::Shape, "checkpoint has no layers or zero input");
  for (auto w : widths)
    if (w == 0) throw CheckpointError(Kind::Shape, "checkpoint layer width is zero");
  if (activations.size() != widths.size())
    throw CheckpointError(Kind::Shape, "checkpoint activation count differs from layer count");
  for (auto a : activations)
    if (!is_valid_activation(static_cast<std::uint8_t>(a)))
      throw CheckpointError(Kind::Activation, "checkpoint contains an unknown activation tag");
  if (!action_scale.empty() && action_scale.size() != output_dim())
    throw CheckpointError(Kind::Shape, "checkpoint action scale length differs from output width");
  if (parameters.size() != expected_parameter_count())
    throw CheckpointError(Kind::Shape, "checkpoint payload length does not match its declared shape");
}

template <typename T>
PolicyCheckpoint PolicyCheckpoint::from_mlp(const nn::Mlp<T>& net, std::span<const double> action_scale) {
  PolicyCheckpoint c;
  c.float_width = sizeof(T);
  c.input_dim = static_cast<std::uint32_t>(net.input_dim());
  for (const auto& l : net.layers()) {
    c.widths.push_back(static_cast<std::uint32_t>(l.out));
    c.activations.push_back(l.activation);
  }
  c.action_scale.assign(action_scale.begin(), action_scale.end());
  c.parameters.assign(net.parameters().begin(), net.parameters().end());
  c.validate();
  return c;
}

template <typename T>
nn::Mlp<T> PolicyCheckpoint::to_mlp(Backend backend) const {
  validate();
  std::vector<std::size_t> w(widths.begin(), widths.end());
  nn::Mlp<T> net(input_dim, w, activations, backend);
  auto p = net.parameters();
  for (std::size_t i = 0; i < p.size(); ++i) p[i] = static_cast<T>(parameters[i]);
  return net;
}

template PolicyCheckpoint PolicyCheckpoint::from_mlp(const nn::Mlp<float>&, std::span<const double>);
template PolicyCheckpoint PolicyCheckpoint::from_mlp(const nn::Mlp<double>&, std::span<const double>);
template nn::Mlp<float> PolicyCheckpoint::to_mlp(Backend) const;
template nn::Mlp<double> PolicyCheckpoint::to_mlp(Backend) const;

std::vector<std::uint8_t> encode_checkpoint(const PolicyCheckpoint& ckpt) {
  ckpt.validate();
  Writer w;
  for (char c : PolicyCheckpoint::kMagic) w.put(static_cast<std::uint8_t>(c));
  w.put(PolicyCheckpoint::kVersion);
  w.put(ckpt.float_width);
  w.put(ckpt.input_dim);
  w.put(static_cast<std::uint32_t>(ckpt.widths.size()));
  for (auto x : ckpt.widths) w.put(x);
  for (auto a : ckpt.activations) w.put(static_cast<std::uint8_t>(a));
  w.put(static_cast<std::uint32_t>(ckpt.action_scale.size()));
  for (double s : ckpt.action_scale) w.put_float(s, ckpt.float_width);
  w.put(static_cast<std::uint64_t>(ckpt.parameters.size()));
  for (double p : ckpt.parameters) w.put_float(p, ckpt.float_width);
  return std::move(w.bytes);
}

PolicyCheckpoint decode_checkpoint(std::span<const std::uint8_t> bytes) {
  Reader r(bytes);
  for (char c : PolicyCheckpoint::kMagic)
    if (r.get<std::uint8_t>("magic") != static_cast<std::uint8_t>(c))
      throw CheckpointError(Kind::BadMagic, "not a policy checkpoint (bad magic)");
  const auto version = r.get<std::uint32_t>("version");
  if (version != PolicyCheckpoint::kVersion)
    throw CheckpointError(Kind::Version, "unsupported checkpoint version " + std::to_string(version) + " (expected " +
                                             std::to_string(PolicyCheckpoint::kVersion) + ")");
  PolicyCheckpoint c;
  c.float_width = r.get<std::uint8_t>("float width");
  if (c.float_width != 4 && c.float_width != 8) throw CheckpointError(Kind::Shape, "checkpoint float width must be 4 or 8");
  c.input_dim = r.get<std::uint32_t>("input_dim");
  const auto layers = r.get<std::uint32_t>("num_layers");
  if (layers == 0 || layers > r.remaining() / 5)
    throw CheckpointError(Kind::Shape, "checkpoint layer count is inconsistent with the file");
  for (std::uint32_t i = 0; i < layers; ++i) c.widths.push_back(r.get<std::uint32_t>("widths"));
  for (std::uint32_t i = 0; i < layers; ++i) {
    const auto a = r.get<std::uint8_t>("activations");
    if (!is_valid_activation(a)) throw CheckpointError(Kind::Activation, "checkpoint contains an unknown activation tag");
    c.activations.push_back(static_cast<Activation>(a));
  }
  const auto scale_count = r.get<std::uint32_t>("action scale count");
  if (scale_count != 0 && scale_count != c.output_dim())
    throw CheckpointError(Kind::Shape, "checkpoint action scale length differs from output width");
  for (std::uint32_t i = 0; i < scale_count; ++i) c.action_scale.push_back(r.get_float(c.float_width, "action scale"));
  const auto count = r.get<std::uint64_t>("payload count");
  if (count != c.expected_parameter_count())
    throw CheckpointError(Kind::Shape, "checkpoint payload length does not match its declared shape");
  if (r.remaining() < count * c.float_width)
    throw CheckpointError(Kind::Truncated, "checkpoint truncated inside the parameter payload");
  c.parameters.resize(count);
  for (auto& p : c.parameters) p = r.get_float(c.float_width, "payload");
  if (r.remaining() != 0) throw CheckpointError(Kind::Shape, "checkpoint has trailing bytes after the payload");
  c.validate();
  return c;
}

void save_checkpoint(const PolicyCheckpoint& ckpt, const std::filesystem::path& path) {
  const auto bytes = encode_checkpoint(ckpt);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw CheckpointError(Kind::Io, "cannot open " + path.string() + " for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw CheckpointError(Kind::Io, "failed writing " + path.string());
}

PolicyCheckpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointError(Kind::Io, "cannot open " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return decode_checkpoint(bytes);
}

std::string checkpoint_to_json(const PolicyCheckpoint& ckpt) {
  nlohmann::ordered_json j;
  j["format"] = "TRLC";
  j["version"] = PolicyCheckpoint::kVersion;
  j["float_width"] = ckpt.float_width;
  j["input_dim"] = ckpt.input_dim;
  j["widths"] = ckpt.widths;
  std::vector<std::string> acts;
  for (auto a : ckpt.activations) acts.emplace_back(to_string(a));
  j["activations"] = acts;
  j["action_scale"] = ckpt.action_scale;
  nlohmann::ordered_json layers = nlohmann::ordered_json::array();
  std::size_t off = 0, in = ckpt.input_dim;
  for (auto out : ckpt.widths) {
    nlohmann::ordered_json layer;
    layer["weights"] = std::vector<double>(ckpt.parameters.begin() + off, ckpt.parameters.begin() + off + in * out);
    off += in * out;
    layer["bias"] = std::vector<double>(ckpt.parameters.begin() + off, ckpt.parameters.begin() + off + out);
    off += out;
    layers.push_back(std::move(layer));
    in = out;
  }
  j["layers"] = std::move(layers);
  return j.dump(1);
}

void save_checkpoint_json(const PolicyCheckpoint& ckpt, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw CheckpointError(Kind::Io, "cannot open " + path.string() + " for writing");
  out << checkpoint_to_json(ckpt) << '\n';
}

}  // namespace fastrl::deploy
