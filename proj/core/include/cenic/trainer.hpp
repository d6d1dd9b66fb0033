#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "cenic/archspec.hpp"
#include "cenic/codec.hpp"
#include "cenic/shrink.hpp"

namespace cenic {

enum class Metric { mse, msssim };
// How MS-SSIM enters the loss as a distortion.
enum class MsSsimForm { one_minus, negative };

std::string_view to_string(Metric m);
Metric parse_metric(std::string_view s);

struct LossBreakdown {
  double D = 0;  // MSE in [0, 1]^2 units, or the MS-SSIM distortion
  double R = 0;  // bits per pixel
  double F = 0;  // FLOP regularizer
  double lambda = 0;
  double alpha = 0;
  double L = 0;  // D * lambda + R + F * alpha
};

// DomainError unless lambda > 0 and alpha >= 0.
LossBreakdown rd_loss(const Tensor& reconstruction, const Tensor& original, double rate_bits, double pixel_count,
                      double lambda, double alpha, double flop_reg, Metric metric, int msssim_scales = 3,
                      MsSsimForm form = MsSsimForm::one_minus);

struct SweepGrids {
  std::vector<double> lambdas;
  std::vector<double> alphas;
};

// mse: 0.1 * 2^(t-6), msssim: 2^(t-1), t = 0..7; alpha: 0.001 * 0.2^t, t = 0..11.
SweepGrids sweep_grids(Metric metric);

struct Dataset {
  std::vector<Tensor> images;  // each (1, 3, H, W) in [0, 1]

  static Dataset from_dir(const std::filesystem::path& dir);
  static Dataset synthetic(int count, int height, int width, std::uint64_t seed);
};

struct TrainConfig {
  Metric metric = Metric::mse;
  MsSsimForm msssim_form = MsSsimForm::one_minus;
  int msssim_scales = 3;
  double lambda = 0.0125;
  double alpha = 0.0;
  RegularizerMode regularizer = RegularizerMode::uniform;
  int steps = 1000;
  int batch = 4;
  int crop = 64;
  double lr = 1e-4;
  int log_every = 10;
  std::uint64_t seed = 1;
};

struct CurvePoint {
  int step = 0;
  LossBreakdown loss;
};

using LossCurve = std::vector<CurvePoint>;

// "step,D,R,F,L" header then one row per point.
std::string curve_csv(const LossCurve& curve);
// Mean L over the last `window` points.
double smoothed_final(const LossCurve& curve, int window = 5);

// Seeded random crops, stacked into an (N, 3, crop, crop) batch. DataError if
// any image is smaller than the crop or the dataset is empty.
Tensor sample_batch(const Dataset& data, int batch, int crop, std::mt19937_64& rng);

struct Objective {
  Var L;
  LossBreakdown parts;
};

// The full differentiable objective on one batch with noise quantization.
Objective rd_objective(Tape& tape, const CodecModel& model, std::span<const Var> params, const Tensor& batch,
                       const TrainConfig& config, std::mt19937_64& noise_rng);

struct TrainResult {
  CodecModel model;
  LossCurve curve;
};

// Adam on the objective, GDN projection after every step. The first curve
// point is the loss at the initial parameters; points every log_every steps
// and at the last step follow. Deterministic given config.seed.
TrainResult train_loop(CodecModel model, const Dataset& data, const TrainConfig& config);

// Everything a sweep or two-phase run needs, loaded from a JSON document.
struct SweepConfig {
  Metric metric = Metric::mse;
  MsSsimForm msssim_form = MsSsimForm::one_minus;
  int msssim_scales = 3;
  std::vector<double> lambdas;
  std::vector<double> alphas;
  std::vector<std::uint64_t> seeds = {1};
  int phase1_steps = 20000;
  int phase2_steps = 100000;
  int crop = 64;
  int batch = 4;
  double lr = 1e-4;
  int log_every = 50;
  double threshold = kActivityThreshold;
  RegularizerMode regularizer = RegularizerMode::uniform;
  std::string arch = "larger_mean_scale";  // preset name or .arch path
  std::string dataset;                     // directory of PPM images; empty = synthetic
  int synthetic_count = 8;
  int synthetic_size = 64;

  // Grids default to sweep_grids(metric) when absent.
  static SweepConfig from_json(std::string_view text);
  std::string to_json() const;
  // DomainError on empty grids, non-positive values or bad step counts.
  void validate() const;

  NetworkSpec resolve_arch() const;
  Dataset load_dataset(std::uint64_t seed) const;
};

}  // namespace cenic
