#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "cenic/shrink.hpp"
#include "cenic/trainer.hpp"

namespace cenic {

struct TwoPhaseConfig {
  NetworkSpec spec;
  TrainConfig train;  // metric, lambda, lr, batch, crop, seed, logging
  double alpha = 0.0;
  int phase1_steps = 20000;
  int phase2_steps = 100000;
  double threshold = kActivityThreshold;
};

struct TwoPhaseResult {
  CodecModel model;  // phase 2 weights on the shrunk spec
  StructureReport report;
  NetworkSpec shrunk;
  LossCurve phase1;
  LossCurve phase2;
};

// Phase 1 trains `spec` from a fresh init on L = D lambda + R + F alpha;
// the structure is read off at the threshold and the spec shrunk; phase 2
// trains the shrunk spec from a new init (no weights carried over) on
// L = D lambda + R.
TwoPhaseResult two_phase_run(const TwoPhaseConfig& config, const Dataset& data);

// report.txt, structure.arch, phase1.csv, phase2.csv, model.weights
void write_artifacts(const TwoPhaseResult& result, const std::filesystem::path& dir);

struct SweepCell {
  Metric metric = Metric::mse;
  double lambda = 0;
  double alpha = 0;
  std::uint64_t seed = 0;
  std::filesystem::path dir;
  std::uint64_t flops_before = 0;
  std::uint64_t flops_after = 0;
  double final_loss = 0;
};

// "<metric>_l<lambda>_a<alpha>_s<seed>"
std::string sweep_cell_name(Metric metric, double lambda, double alpha, std::uint64_t seed);

// Runs two_phase_run for every (lambda, alpha, seed) cell, one directory per
// cell under `out_dir`, plus sweep.csv summarizing the cells.
std::vector<SweepCell> run_sweep(const SweepConfig& config, const std::filesystem::path& out_dir);

}  // namespace cenic
