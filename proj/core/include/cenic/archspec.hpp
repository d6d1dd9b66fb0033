#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "cenic/gdn.hpp"

namespace cenic {

enum class LayerKind { conv, deconv };
enum class Activation { gdn, igdn, relu, none };

std::string_view to_string(LayerKind k);
std::string_view to_string(Activation a);

// One "KxK(conv|deconv),S,F" entry. `activation` holds an explicit "@act"
// override; when empty the placement rule of the owning section applies.
struct LayerSpec {
  LayerKind kind = LayerKind::conv;
  int kernel = 1;
  int stride = 1;
  int out_channels = 1;
  std::optional<Activation> activation;

  bool operator==(const LayerSpec&) const = default;
};

LayerSpec parse_layer(std::string_view text);
std::string render(const LayerSpec& layer);

enum class Section { encoder, hyper_encoder, hyper_decoder_mean, hyper_decoder_scale, decoder };
inline constexpr std::array<Section, 5> kSections = {Section::encoder, Section::hyper_encoder,
                                                     Section::hyper_decoder_mean,
                                                     Section::hyper_decoder_scale, Section::decoder};
std::string_view to_string(Section s);
bool is_decode_side(Section s);

struct NetworkSpec {
  std::string name;
  std::vector<LayerSpec> encoder;
  std::vector<LayerSpec> hyper_encoder;
  std::vector<LayerSpec> hyper_decoder_mean;
  std::vector<LayerSpec> hyper_decoder_scale;
  std::vector<LayerSpec> decoder;
  int latent_channels = 0;
  int hyper_latent_channels = 0;
  GdnMode gdn_mode = GdnMode::classic;

  std::vector<LayerSpec>& layers(Section s);
  const std::vector<LayerSpec>& layers(Section s) const;

  // Explicit override if present, else GDN after every encoder layer but the
  // last, inverse GDN after every decoder layer but the last, ReLU after every
  // hyper layer but the last of each subnetwork.
  Activation activation(Section s, std::size_t index) const;

  // Input channels of layer `index` in section `s`.
  int in_channels(Section s, std::size_t index) const;

  // Layer structure equality (name and gdn mode ignored).
  bool same_structure(const NetworkSpec& o) const;
};

// Throws MissingSection, TopologyError, InvalidStride or ShapeError.
void validate(const NetworkSpec& spec);

// .arch documents: optional "key = value" header lines (name, gdn_mode,
// latent_channels, hyper_latent_channels), then the five "[section]" blocks
// with one layer per line. '#' starts a comment.
NetworkSpec parse_network(std::string_view doc);
std::string render_network(const NetworkSpec& spec);

enum class FlopScope { decode_side, all };

struct LayerFlops {
  Section section = Section::encoder;
  std::size_t index = 0;
  LayerSpec layer;
  int in_channels = 0;
  int in_h = 0;
  int in_w = 0;
  int out_h = 0;
  int out_w = 0;
  std::uint64_t flops = 0;
};

struct FlopReport {
  FlopScope scope = FlopScope::decode_side;
  int input_h = 0;
  int input_w = 0;
  std::vector<LayerFlops> layers;             // only layers inside the scope
  std::array<std::uint64_t, 5> subtotal{};    // indexed by Section; 0 outside the scope
  std::uint64_t total = 0;
  std::optional<double> ratio;                // total / reference total
  std::string reference;

  std::uint64_t section_total(Section s) const { return subtotal[static_cast<int>(s)]; }
};

// 2*K^2*Cin*F*Hout*Wout + F*Hout*Wout with conv Hout = ceil(H/S) and deconv Hout = H*S.
std::uint64_t flops_layer(const LayerSpec& layer, int in_channels, int in_h, int in_w);

// Input dims must be multiples of 64 (DomainError otherwise).
FlopReport flops_network(const NetworkSpec& spec, int input_h, int input_w, FlopScope scope,
                         const NetworkSpec* reference = nullptr);

enum class Preset {
  mean_scale,
  larger_mean_scale,
  cenic_1,
  cenic_2_t3,
  cenic_5,
  cenic_2_t5,
  cenic_10,
  cenic_32,
  cenic_37
};

inline constexpr std::array<Preset, 9> kPresets = {
    Preset::mean_scale, Preset::larger_mean_scale, Preset::cenic_1,
    Preset::cenic_2_t3, Preset::cenic_5,           Preset::cenic_2_t5,
    Preset::cenic_10,   Preset::cenic_32,          Preset::cenic_37};

std::string_view to_string(Preset p);
// Throws UnknownPreset.
Preset parse_preset(std::string_view name);

struct PresetInfo {
  NetworkSpec spec;                      // corrected, validated
  std::vector<std::string> corrections;  // one note per deviation from the printed table
  std::string printed;                   // the table cells as printed, one per line
};

PresetInfo preset_info(Preset p);
NetworkSpec preset(Preset p);
NetworkSpec preset(std::string_view name);

// Small topology with the codec's shape for desk-scale training:
// 4 stride-2 encoder convs, 3-layer hyper encoder (1, 2, 2), towers mirroring it.
NetworkSpec tiny_spec(int width = 16, int latent = 8, int hyper = 8, int hyper_width = 16);

// An existing .arch file, "tiny", or a preset name (UnknownPreset otherwise).
NetworkSpec resolve_arch(const std::string& name);

}  // namespace cenic
