#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "cenic/archspec.hpp"
#include "cenic/autodiff.hpp"
#include "cenic/codec.hpp"

namespace cenic {

inline constexpr double kActivityThreshold = 0.001;

// Per-output terms ||W_j||_2 / sqrt(D_j) where W_j is kernel slice j plus
// bias j and D_j = fan_in * K^2 + 1.
struct GroupNorms {
  std::vector<double> values;
};

struct GroupLasso {
  double total = 0;
  GroupNorms norms;
};

GroupLasso group_lasso_layer(const ConvWeights& w);
// Groups without a bias term: D_j = fan_in * K^2.
GroupLasso group_lasso_layer(const Tensor& kernel);

// uniform: every group weighs 1. flop_weighted: each layer's groups are
// scaled by that layer's FLOPs per output channel, normalized to mean 1 over
// the regularized layers (at 256x256 input).
enum class RegularizerMode { uniform, flop_weighted };

std::string_view to_string(RegularizerMode m);
RegularizerMode parse_regularizer_mode(std::string_view s);

// Decode-side layers whose width is fixed: the decoder output layer and the
// final layer of each hyper-decoder tower (the projections are never pruned).
bool is_pinned(const NetworkSpec& spec, Section s, std::size_t index);
// Decode-side and not pinned.
bool is_prunable(const NetworkSpec& spec, Section s, std::size_t index);

std::vector<double> regularizer_layer_weights(const NetworkSpec& spec, RegularizerMode mode);

// Sum of group_lasso_layer over prunable decoder and tower layers.
double flop_reg_total(const CodecModel& model, RegularizerMode mode = RegularizerMode::uniform);

namespace ad {
// Subgradient 0 for an all-zero group.
Var group_lasso(Var kernel, Var bias);
// `params` as for forward_train.
Var flop_reg_total(const CodecModel& model, std::span<const Var> params,
                   RegularizerMode mode = RegularizerMode::uniform);
}  // namespace ad

struct LayerActivity {
  Section section = Section::decoder;
  std::size_t index = 0;
  int original = 0;
  int active = 0;
  bool pinned = false;
  bool clamped = false;  // no group passed the threshold; the largest was kept
  std::vector<int> kept;  // indices of active outputs
  std::vector<double> norms;
};

struct StructureReport {
  std::string spec_name;
  std::vector<LayerActivity> layers;  // every decode-side layer in section order
  double threshold = kActivityThreshold;
  double lambda = 0;
  double alpha = 0;
  int flop_height = 256;
  int flop_width = 256;
  std::uint64_t flops_before = 0;  // decode-side scope
  std::uint64_t flops_after = 0;
  std::vector<std::string> warnings;

  // Key/value lines plus one "layer" line per entry.
  std::string to_text() const;
  static StructureReport from_text(std::string_view text);
};

// Output j is active iff its group term exceeds `threshold` (DomainError
// unless threshold > 0).
StructureReport extract_structure(const CodecModel& model, double threshold = kActivityThreshold);

// Prunable widths become the active counts; fan-ins follow from the previous
// layer. ReportMismatch if the report does not describe `spec`.
NetworkSpec shrink_network(const NetworkSpec& spec, const StructureReport& report);

}  // namespace cenic
