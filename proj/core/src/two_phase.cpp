#include "cenic/two_phase.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

namespace cenic {

namespace {

void write_text(const std::filesystem::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  if (!out) fail(ErrorKind::IoError, "cannot write " + p.string());
  out << text;
  if (!out) fail(ErrorKind::IoError, "failed writing " + p.string());
}

}  // namespace

TwoPhaseResult two_phase_run(const TwoPhaseConfig& config, const Dataset& data) {
  TwoPhaseResult r;
  TrainConfig p1 = config.train;
  p1.alpha = config.alpha;
  p1.steps = config.phase1_steps;
  TrainResult first = train_loop(init_model(config.spec, config.train.seed), data, p1);
  r.phase1 = std::move(first.curve);

  r.report = extract_structure(first.model, config.threshold);
  r.report.lambda = config.train.lambda;
  r.report.alpha = config.alpha;
  r.shrunk = shrink_network(config.spec, r.report);

  TrainConfig p2 = config.train;
  p2.alpha = 0.0;
  p2.steps = config.phase2_steps;
  p2.seed = config.train.seed + 1;
  TrainResult second = train_loop(init_model(r.shrunk, p2.seed), data, p2);
  r.phase2 = std::move(second.curve);
  r.model = std::move(second.model);
  return r;
}

void write_artifacts(const TwoPhaseResult& result, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  write_text(dir / "report.txt", result.report.to_text());
  write_text(dir / "structure.arch", render_network(result.shrunk));
  write_text(dir / "phase1.csv", curve_csv(result.phase1));
  write_text(dir / "phase2.csv", curve_csv(result.phase2));
  save_weights(dir / "model.weights", result.model);
}

std::string sweep_cell_name(Metric metric, double lambda, double alpha, std::uint64_t seed) {
  char buf[128];
  std::snprintf(buf, sizeof buf, "%s_l%.6g_a%.6g_s%llu", std::string(to_string(metric)).c_str(), lambda, alpha,
                static_cast<unsigned long long>(seed));
  return buf;
}

std::vector<SweepCell> run_sweep(const SweepConfig& config, const std::filesystem::path& out_dir) {
  config.validate();
  const NetworkSpec spec = config.resolve_arch();
  std::filesystem::create_directories(out_dir);
  std::vector<SweepCell> cells;
  std::ostringstream csv;
  csv.precision(10);
  csv << "cell,metric,lambda,alpha,seed,flops_before,flops_after,final_L\n";
  for (std::uint64_t seed : config.seeds) {
    const Dataset data = config.load_dataset(seed);
    for (double lambda : config.lambdas)
      for (double alpha : config.alphas) {
        TwoPhaseConfig tp;
        tp.spec = spec;
        tp.train.metric = config.metric;
        tp.train.msssim_form = config.msssim_form;
        tp.train.msssim_scales = config.msssim_scales;
        tp.train.lambda = lambda;
        tp.train.regularizer = config.regularizer;
        tp.train.batch = config.batch;
        tp.train.crop = config.crop;
        tp.train.lr = config.lr;
        tp.train.log_every = config.log_every;
        tp.train.seed = seed;
        tp.alpha = alpha;
        tp.phase1_steps = config.phase1_steps;
        tp.phase2_steps = config.phase2_steps;
        tp.threshold = config.threshold;
        const TwoPhaseResult res = two_phase_run(tp, data);
        SweepCell cell;
        cell.metric = config.metric;
        cell.lambda = lambda;
        cell.alpha = alpha;
        cell.seed = seed;
        cell.dir = out_dir / sweep_cell_name(config.metric, lambda, alpha, seed);
        cell.flops_before = res.report.flops_before;
        cell.flops_after = res.report.flops_after;
        cell.final_loss = res.phase2.empty() ? 0.0 : res.phase2.back().loss.L;
        write_artifacts(res, cell.dir);
        csv << cell.dir.filename().string() << "," << to_string(cell.metric) << "," << lambda << "," << alpha << ","
            << seed << "," << cell.flops_before << "," << cell.flops_after << "," << cell.final_loss << "\n";
        cells.push_back(cell);
      }
  }
  write_text(out_dir / "sweep.csv", csv.str());
  return cells;
}

}  // namespace cenic
