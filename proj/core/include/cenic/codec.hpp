#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "cenic/archspec.hpp"
#include "cenic/autodiff.hpp"
#include "cenic/entropy.hpp"
#include "cenic/gdn.hpp"
#include "cenic/tensor.hpp"

namespace cenic {

template <typename T>
struct BasicCodecLayer {
  BasicConvWeights<T> weights;
  std::optional<BasicGdnParams<T>> gdn;  // present for gdn / igdn activations

  template <typename U>
  BasicCodecLayer<U> cast() const {
    BasicCodecLayer<U> out{weights.template cast<U>(), std::nullopt};
    if (gdn) out.gdn = gdn->template cast<U>();
    return out;
  }
};

template <typename TensorT>
struct Named {
  std::string name;
  TensorT* tensor;
};

template <typename T>
using NamedParam = Named<BasicTensor<T>>;
template <typename T>
using ConstNamedParam = Named<const BasicTensor<T>>;

// Weights of a Mean-Scale hyperprior model laid out by `spec`. Each tower
// ends in a 1x1 projection to latent_channels; the scale projection predicts
// log sigma.
template <typename T>
struct BasicCodecModel {
  NetworkSpec spec;
  std::array<std::vector<BasicCodecLayer<T>>, 5> sections;
  BasicConvWeights<T> mean_proj;
  BasicConvWeights<T> scale_proj;
  BasicTensor<T> prior_location;   // (hyper_latent_channels, 1, 1, 1)
  BasicTensor<T> prior_log_scale;  // (hyper_latent_channels, 1, 1, 1)

  std::vector<BasicCodecLayer<T>>& layers(Section s) { return sections[static_cast<int>(s)]; }
  const std::vector<BasicCodecLayer<T>>& layers(Section s) const { return sections[static_cast<int>(s)]; }

  // Every trainable tensor in a fixed order: sections in order, per layer
  // kernel, bias, gdn.beta, gdn.gamma; then projections and the prior.
  std::vector<NamedParam<T>> parameters();
  std::vector<ConstNamedParam<T>> parameters() const;
  std::size_t parameter_count() const;

  // ShapeError / ChannelMismatch if any tensor disagrees with the spec.
  void validate() const;

  template <typename U>
  BasicCodecModel<U> cast() const {
    BasicCodecModel<U> out;
    out.spec = spec;
    for (int s = 0; s < 5; ++s)
      for (const auto& l : sections[s]) out.sections[s].push_back(l.template cast<U>());
    out.mean_proj = mean_proj.template cast<U>();
    out.scale_proj = scale_proj.template cast<U>();
    out.prior_location = prior_location.template cast<U>();
    out.prior_log_scale = prior_log_scale.template cast<U>();
    return out;
  }
};

using CodecModel = BasicCodecModel<double>;
using CodecModelF = BasicCodecModel<float>;

// Kernels ~ U(-b, b), b = sqrt(6 / (fan_in + fan_out)) with fans counting
// K*K taps; zero biases; GDN beta = 1, gamma = 0.1 I; prior loc 0, log-scale 0.
CodecModel init_model(const NetworkSpec& spec, std::uint64_t seed);

// Same weights, every GDN layer and the spec switched to `mode`.
template <typename T>
BasicCodecModel<T> with_gdn_mode(BasicCodecModel<T> model, GdnMode mode) {
  model.spec.gdn_mode = mode;
  for (auto& section : model.sections)
    for (auto& layer : section)
      if (layer.gdn) layer.gdn->mode = mode;
  return model;
}

// FNV-1a over the rendered spec, the precision and the raw weight bytes.
template <typename T>
std::uint64_t model_hash(const BasicCodecModel<T>& model);

// "CENW" weights container: version, spec text, then a manifest of named
// little-endian f64 tensors.
std::vector<std::uint8_t> serialize_weights(const CodecModel& model);
CodecModel deserialize_weights(std::span<const std::uint8_t> bytes);
void save_weights(const std::filesystem::path& path, const CodecModel& model);
CodecModel load_weights(const std::filesystem::path& path);

// Inference through one section with its activations.
template <typename T>
BasicTensor<T> run_section(const BasicCodecModel<T>& model, Section s, BasicTensor<T> x);

template <typename T>
struct EntropyParams {
  BasicTensor<T> means;
  BasicTensor<T> scales;  // exp of the scale projection, before the floor
};

template <typename T>
EntropyParams<T> predict_entropy_params(const BasicCodecModel<T>& model, const BasicTensor<T>& z_hat);

inline constexpr std::uint8_t kBitstreamVersion = 1;
// "CENC", version, width, height, C, Cz (u16), model hash (u64), CRC and the
// two payload lengths (u32), all little-endian; the payloads follow.
inline constexpr std::size_t kBitstreamHeaderBytes = 33;

struct Bitstream {
  std::uint8_t version = kBitstreamVersion;
  std::uint16_t width = 0;
  std::uint16_t height = 0;
  std::uint16_t latent_channels = 0;
  std::uint16_t hyper_latent_channels = 0;
  std::uint64_t model_hash = 0;
  std::uint32_t crc = 0;  // CRC-32 of hyper payload followed by latent payload
  std::vector<std::uint8_t> hyper;
  std::vector<std::uint8_t> latent;

  std::uint32_t payload_crc() const;
  std::size_t payload_bytes() const { return hyper.size() + latent.size(); }
  bool operator==(const Bitstream&) const = default;
};

// Little-endian: "CENC", version, width, height, latent, hyper-latent,
// model hash, crc, hyper length + bytes, latent length + bytes.
std::vector<std::uint8_t> serialize(const Bitstream& bs);
// NotACencStream, VersionError, DecodeError on truncation or trailing bytes.
Bitstream deserialize(std::span<const std::uint8_t> bytes);

struct TimingBreakdown {
  double hyper_range_decode_ms = 0;
  double hyper_decoder_net_ms = 0;
  double latent_range_decode_ms = 0;
  double decoder_net_ms = 0;
  double total_ms = 0;

  double stage_sum() const {
    return hyper_range_decode_ms + hyper_decoder_net_ms + latent_range_decode_ms + decoder_net_ms;
  }
};

template <typename T>
struct EncodeResult {
  Bitstream bitstream;
  BasicTensor<T> y_hat;
  BasicTensor<T> z_hat;
  double estimated_latent_bits = 0;  // -sum log2 of the continuous likelihoods
  double estimated_hyper_bits = 0;
};

template <typename T>
struct DecodeResult {
  Tensor image;  // cropped, clamped to [0, 1]
  BasicTensor<T> y_hat;
  BasicTensor<T> z_hat;
  TimingBreakdown timing;
};

// A validated model with its hash computed once. Immutable, so concurrent
// encode/decode calls on one instance are safe.
template <typename T>
class BasicCodec {
 public:
  explicit BasicCodec(BasicCodecModel<T> model);

  const BasicCodecModel<T>& model() const { return model_; }
  std::uint64_t hash() const { return hash_; }

  // InputError unless img is (1, 3, H, W) with H, W in [1, 65535].
  EncodeResult<T> encode_analyze(const Tensor& img) const;
  Bitstream encode(const Tensor& img) const { return encode_analyze(img).bitstream; }
  // CorruptStream on CRC mismatch, ModelMismatch on hash or shape mismatch,
  // DecodeError on truncated payloads.
  DecodeResult<T> decode(const Bitstream& bs) const;

 private:
  BasicCodecModel<T> model_;
  std::uint64_t hash_ = 0;
};

using Codec = BasicCodec<double>;
using CodecF = BasicCodec<float>;

Bitstream encode_image(const Tensor& img, const CodecModel& model);
DecodeResult<double> decode_image(const Bitstream& bs, const CodecModel& model);

// Differentiable forward pass for training. `params` holds one Var per
// entry of model.parameters(), in order. noise: y~ = y + u, z~ = z + u;
// round: mean-centred rounding treated as a constant.
struct TrainForward {
  Var x_hat;
  Var y_likelihood;
  Var z_likelihood;
  Var y;
};

TrainForward forward_train(Tape& tape, const CodecModel& model, std::span<const Var> params, Var x,
                           QuantMode mode, std::mt19937_64& rng);

}  // namespace cenic
