#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <vector>

#include "doctest.h"
#include "fastrl/deploy/checkpoint.hpp"
#include "fastrl/deploy/inference.hpp"
#include "json.hpp"
#include "support/alloc_counter.hpp"

using namespace fastrl;
using namespace fastrl::deploy;


namespace {

nn::Mlp<float> table5_policy(std::uint64_t seed) {
  Prng rng(seed);
  return nn::Mlp<float>::init({13, {64, 64}, 4, Activation::ReLU, Activation::Identity}, rng);
}

std::filesystem::path temp_path(const std::string& name) {
  return std::filesystem::temp_directory_path() / ("fastrl_test_" + name);
}

std::vector<std::uint8_t> bytes_of(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

CheckpointError::Kind decode_error(const std::vector<std::uint8_t>& bytes) {
  try {
    decode_checkpoint(bytes);
  } catch (const CheckpointError& e) {
    return e.kind();
  }
  FAIL("decode unexpectedly succeeded");
  return CheckpointError::Kind::Io;
}

// Offsets in the 13-[64,64]-4 file without action scale.
constexpr std::size_t kVersionOffset = 4;
constexpr std::size_t kWidthsOffset = 4 + 4 + 1 + 4 + 4;
constexpr std::size_t kActivationsOffset = kWidthsOffset + 3 * 4;
constexpr std::size_t kCountOffset = kActivationsOffset + 3 + 4;

}  // namespace

TEST_CASE("checkpoint for the 13-[64,64]-4 policy stores 5316 parameters") {
  const auto ckpt = PolicyCheckpoint::from_mlp(table5_policy(1));
  CHECK(ckpt.parameters.size() == 5316);
  CHECK(ckpt.expected_parameter_count() == 5316);
  const auto bytes = encode_checkpoint(ckpt);
  CHECK(bytes.size() == kCountOffset + 8 + 5316 * 4);
  std::uint64_t count = 0;
  std::memcpy(&count, bytes.data() + kCountOffset, 8);
  CHECK(count == 5316);
}

TEST_CASE("checkpoint round trip is bit exact") {
  const auto net = table5_policy(2);
  const auto ckpt = PolicyCheckpoint::from_mlp(net, std::vector<double>{1.0, 2.0, 0.5, 3.0});
  const auto p1 = temp_path("a.trlc"), p2 = temp_path("b.trlc");
  save_checkpoint(ckpt, p1);
  const auto loaded = load_checkpoint(p1);
  CHECK(loaded == ckpt);
  save_checkpoint(loaded, p2);
  CHECK(bytes_of(p1) == bytes_of(p2));
  const auto back = loaded.to_mlp<float>();
  CHECK(back.same_parameters(net));

  Prng rng(3);
  auto dnet = nn::Mlp<double>::init({5, {7}, 2, Activation::Tanh, Activation::Identity}, rng);
  const auto dckpt = PolicyCheckpoint::from_mlp(dnet);
  CHECK(dckpt.float_width == 8);
  const auto dback = decode_checkpoint(encode_checkpoint(dckpt));
  CHECK(dback == dckpt);
  CHECK(dback.to_mlp<double>().same_parameters(dnet));
  std::filesystem::remove(p1);
  std::filesystem::remove(p2);
}

TEST_CASE("checkpoint JSON dump carries the same content") {
  const auto net = table5_policy(4);
  const auto ckpt = PolicyCheckpoint::from_mlp(net, std::vector<double>{2, 2, 2, 2});
  const auto j = nlohmann::json::parse(checkpoint_to_json(ckpt));
  CHECK(j["version"] == 1);
  CHECK(j["input_dim"] == 13);
  CHECK(j["widths"] == std::vector<int>{64, 64, 4});
  CHECK(j["activations"][2] == "identity");
  CHECK(j["layers"][1]["bias"].size() == 64);
  CHECK(j["layers"][2]["weights"].size() == 256);
  std::vector<double> flat;
  for (const auto& l : j["layers"]) {
    for (double w : l["weights"]) flat.push_back(w);
    for (double b : l["bias"]) flat.push_back(b);
  }
  CHECK(flat == ckpt.parameters);
}

TEST_CASE("checkpoint decoding reports distinct errors") {
  const auto good = encode_checkpoint(PolicyCheckpoint::from_mlp(table5_policy(5)));
  using K = CheckpointError::Kind;

  auto bad_magic = good;
  bad_magic[0] = 'X';
  CHECK(decode_error(bad_magic) == K::BadMagic);

  auto bad_version = good;
  bad_version[kVersionOffset] = 2;
  CHECK(decode_error(bad_version) == K::Version);

  auto bad_count = good;
  bad_count[kCountOffset] ^= 1;
  CHECK(decode_error(bad_count) == K::Shape);

  auto bad_width = good;
  bad_width[kWidthsOffset] = 65;
  CHECK(decode_error(bad_width) == K::Shape);

  auto huge_layers = good;
  huge_layers[kWidthsOffset - 4 + 3] = 0x7f;
  CHECK(decode_error(huge_layers) == K::Shape);

  auto bad_act = good;
  bad_act[kActivationsOffset] = 9;
  CHECK(decode_error(bad_act) == K::Activation);

  auto truncated = good;
  truncated.resize(truncated.size() - 3);
  CHECK(decode_error(truncated) == K::Truncated);
  CHECK(decode_error(std::vector<std::uint8_t>(good.begin(), good.begin() + 10)) == K::Truncated);

  auto trailing = good;
  trailing.push_back(0);
  CHECK(decode_error(trailing) == K::Shape);

  CHECK_THROWS_AS(load_checkpoint(temp_path("missing.trlc")), CheckpointError);
}

TEST_CASE("inference runtime rejects oversize networks") {
  Prng rng(6);
  const auto wide = nn::Mlp<float>::init({3, {kMaxLayerWidth + 1}, 1}, rng);
  try {
    InferenceRuntime<float> rt(PolicyCheckpoint::from_mlp(wide));
    FAIL("oversize network accepted");
  } catch (const CheckpointError& e) {
    CHECK(e.kind() == CheckpointError::Kind::Oversize);
  }
  const auto at_limit = nn::Mlp<float>::init({3, {kMaxLayerWidth}, 1}, rng);
  CHECK_NOTHROW(InferenceRuntime<float>(PolicyCheckpoint::from_mlp(at_limit)));
}

TEST_CASE("zero weights give a zero action") {
  nn::Mlp<float> zero({13, {64, 64}, 4});
  InferenceRuntime<float> rt(PolicyCheckpoint::from_mlp(zero));
  std::vector<float> obs(13, 0.7f);
  for (float a : rt.forward(obs)) CHECK(a == 0.f);
}

TEST_CASE("inference runtime matches the training stack") {
  const auto net = table5_policy(7);
  const auto ckpt = PolicyCheckpoint::from_mlp(net);
  Prng rng(8);
  for (auto backend : {Backend::Generic, Backend::Fused}) {
    auto mlp = ckpt.to_mlp<float>(backend);
    InferenceRuntime<float> rt(ckpt, backend);
    Matrix<float> x(1, 13);
    for (int i = 0; i < 2000; ++i) {
      for (auto& v : x.flat()) v = rng.uniform<float>(-3.f, 3.f);
      const auto ref = mlp.forward(x, false);
      const auto out = rt.forward(x.flat());
      for (std::size_t j = 0; j < 4; ++j) REQUIRE(out[j] == ref(0, j));
    }
  }
  InferenceRuntime<float> g(ckpt, Backend::Generic), f(ckpt, Backend::Fused);
  std::vector<float> obs(13);
  for (int i = 0; i < 2000; ++i) {
    for (auto& v : obs) v = rng.uniform<float>(-3.f, 3.f);
    const std::vector<float> a(g.forward(obs).begin(), g.forward(obs).end());
    const auto b = f.forward(obs);
    for (std::size_t j = 0; j < 4; ++j) REQUIRE(std::abs(a[j] - b[j]) <= 1e-5f * std::abs(a[j]) + 1e-7f);
  }
}

TEST_CASE("action scale is applied by act but not by forward") {
  Prng rng(9);
  const auto net = nn::Mlp<float>::init({3, {8}, 2, Activation::ReLU, Activation::Tanh}, rng);
  InferenceRuntime<float> rt(PolicyCheckpoint::from_mlp(net, std::vector<double>{2.0, 0.5}));
  const std::vector<float> obs{0.1f, -0.4f, 0.9f};
  const std::vector<float> raw(rt.forward(obs).begin(), rt.forward(obs).end());
  std::vector<float> act(2);
  rt.act(obs, act);
  CHECK(act[0] == 2.f * raw[0]);
  CHECK(act[1] == 0.5f * raw[1]);
}

TEST_CASE("forward performs no heap allocation after construction") {
  const auto ckpt = PolicyCheckpoint::from_mlp(table5_policy(10));
  for (auto backend : {Backend::Generic, Backend::Fused}) {
    InferenceRuntime<float> rt(ckpt, backend);
    std::vector<float> obs(13, 0.25f);
    std::vector<float> act(4);
    float sink = 0;
    const std::size_t before = test::allocation_count();
    for (int i = 0; i < 100000; ++i) {
      obs[i % 13] = static_cast<float>(i % 7) * 0.1f;
      sink += rt.forward(obs)[0];
      rt.act(obs, act);
    }
    const std::size_t after = test::allocation_count();
    CHECK(after == before);
    CHECK(std::isfinite(sink));
  }
}
